#pragma once

#include <torch/torch.h>

namespace spotter::layers {

// Multi-head scaled dot-product attention over batch-first token sets.
// Optional additive `bias` is broadcast onto the [B, heads, Lq, Lk] logits.
class AttentionImpl : public torch::nn::Module {
 public:
  AttentionImpl(int64_t dim, int64_t heads);

  torch::Tensor forward(const torch::Tensor& query, const torch::Tensor& key, const torch::Tensor& value,
                        const torch::Tensor& bias = {});
  // Head-averaged attention weights of the last forward call when recording is on.
  void record_weights(bool on) { record_ = on; }
  const torch::Tensor& last_weights() const { return last_weights_; }

  int64_t heads() const { return heads_; }
  torch::nn::Linear q_proj{nullptr}, k_proj{nullptr}, v_proj{nullptr}, out_proj{nullptr};

 private:
  int64_t dim_;
  int64_t heads_;
  bool record_ = false;
  torch::Tensor last_weights_;
};
TORCH_MODULE(Attention);

class MlpImpl : public torch::nn::Module {
 public:
  MlpImpl(int64_t dim, int64_t hidden);
  torch::Tensor forward(const torch::Tensor& x);
  torch::nn::Linear fc1{nullptr}, fc2{nullptr};
};
TORCH_MODULE(Mlp);

// Pre-norm transformer encoder layer (self-attention + MLP, both residual).
class EncoderLayerImpl : public torch::nn::Module {
 public:
  EncoderLayerImpl(int64_t dim, int64_t heads, int64_t mlp_ratio = 2);
  torch::Tensor forward(const torch::Tensor& x);
  torch::nn::LayerNorm norm1{nullptr}, norm2{nullptr};
  Attention attn{nullptr};
  Mlp mlp{nullptr};
};
TORCH_MODULE(EncoderLayer);

// LayerNorm across channels of an NCHW map.
class ChannelNormImpl : public torch::nn::Module {
 public:
  explicit ChannelNormImpl(int64_t channels);
  torch::Tensor forward(const torch::Tensor& x);
  torch::nn::LayerNorm norm{nullptr};
};
TORCH_MODULE(ChannelNorm);

// Fixed 2-D sinusoidal encoding [dim, h, w]; dim must be a multiple of 4.
torch::Tensor sinusoid_2d(int64_t dim, int64_t h, int64_t w, const torch::TensorOptions& opts);
// Fixed 1-D sinusoidal encoding [length, dim].
torch::Tensor sinusoid_1d(int64_t length, int64_t dim, const torch::TensorOptions& opts);

void zero_linear(torch::nn::Linear& layer);
void zero_conv(torch::nn::Conv2d& layer);

}  // namespace spotter::layers
