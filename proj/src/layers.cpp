#include "spotter/layers.hpp"

#include <cmath>

namespace spotter::layers {

AttentionImpl::AttentionImpl(int64_t dim, int64_t heads) : dim_(dim), heads_(heads) {
  TORCH_CHECK(heads > 0 && dim % heads == 0, "attention: dim ", dim, " not divisible by heads ", heads);
  q_proj = register_module("q_proj", torch::nn::Linear(dim, dim));
  k_proj = register_module("k_proj", torch::nn::Linear(dim, dim));
  v_proj = register_module("v_proj", torch::nn::Linear(dim, dim));
  out_proj = register_module("out_proj", torch::nn::Linear(dim, dim));
}

torch::Tensor AttentionImpl::forward(const torch::Tensor& query, const torch::Tensor& key,
                                     const torch::Tensor& value, const torch::Tensor& bias) {
  const auto b = query.size(0);
  const auto lq = query.size(1);
  const auto lk = key.size(1);
  const auto hd = dim_ / heads_;
  auto q = q_proj(query).view({b, lq, heads_, hd}).transpose(1, 2);
  auto k = k_proj(key).view({b, lk, heads_, hd}).transpose(1, 2);
  auto v = v_proj(value).view({b, lk, heads_, hd}).transpose(1, 2);
  auto logits = torch::matmul(q, k.transpose(-2, -1)) / std::sqrt(double(hd));
  if (bias.defined()) logits = logits + bias;
  auto weights = torch::softmax(logits, -1);
  if (record_) last_weights_ = weights.mean(1).detach();
  auto out = torch::matmul(weights, v).transpose(1, 2).reshape({b, lq, dim_});
  return out_proj(out);
}

MlpImpl::MlpImpl(int64_t dim, int64_t hidden) {
  fc1 = register_module("fc1", torch::nn::Linear(dim, hidden));
  fc2 = register_module("fc2", torch::nn::Linear(hidden, dim));
}

torch::Tensor MlpImpl::forward(const torch::Tensor& x) { return fc2(torch::gelu(fc1(x))); }

EncoderLayerImpl::EncoderLayerImpl(int64_t dim, int64_t heads, int64_t mlp_ratio) {
  norm1 = register_module("norm1", torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim})));
  norm2 = register_module("norm2", torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim})));
  attn = register_module("attn", Attention(dim, heads));
  mlp = register_module("mlp", Mlp(dim, dim * mlp_ratio));
}

torch::Tensor EncoderLayerImpl::forward(const torch::Tensor& x) {
  auto h = norm1(x);
  auto y = x + attn(h, h, h);
  return y + mlp(norm2(y));
}

ChannelNormImpl::ChannelNormImpl(int64_t channels) {
  norm = register_module("norm", torch::nn::LayerNorm(torch::nn::LayerNormOptions({channels})));
}

torch::Tensor ChannelNormImpl::forward(const torch::Tensor& x) {
  return norm(x.permute({0, 2, 3, 1})).permute({0, 3, 1, 2});
}

torch::Tensor sinusoid_1d(int64_t length, int64_t dim, const torch::TensorOptions& opts) {
  auto pos = torch::arange(length, opts).unsqueeze(1);
  auto idx = torch::arange(0, dim, 2, opts);
  auto freq = torch::exp(idx * (-std::log(10000.0) / double(dim)));
  auto enc = torch::zeros({length, dim}, opts);
  enc.index_put_({torch::indexing::Slice(), torch::indexing::Slice(0, torch::indexing::None, 2)},
                 torch::sin(pos * freq));
  enc.index_put_({torch::indexing::Slice(), torch::indexing::Slice(1, torch::indexing::None, 2)},
                 torch::cos(pos * freq).index({torch::indexing::Slice(), torch::indexing::Slice(0, dim / 2)}));
  return enc;
}

torch::Tensor sinusoid_2d(int64_t dim, int64_t h, int64_t w, const torch::TensorOptions& opts) {
  TORCH_CHECK(dim % 4 == 0, "sinusoid_2d: dim must be a multiple of 4");
  auto ey = sinusoid_1d(h, dim / 2, opts);  // [h, dim/2]
  auto ex = sinusoid_1d(w, dim / 2, opts);  // [w, dim/2]
  auto y = ey.t().unsqueeze(2).expand({dim / 2, h, w});
  auto x = ex.t().unsqueeze(1).expand({dim / 2, h, w});
  return torch::cat({y, x}, 0);
}

void zero_linear(torch::nn::Linear& layer) {
  torch::NoGradGuard guard;
  layer->weight.zero_();
  if (layer->bias.defined()) layer->bias.zero_();
}

void zero_conv(torch::nn::Conv2d& layer) {
  torch::NoGradGuard guard;
  layer->weight.zero_();
  if (layer->bias.defined()) layer->bias.zero_();
}

}  // namespace spotter::layers
