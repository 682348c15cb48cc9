#include "spotter/recognizer.hpp"

#include <spdlog/spdlog.h>

#include <cctype>
#include <cmath>
#include <set>

#include "spotter/errors.hpp"

namespace spotter::recognizer {

namespace F = torch::nn::functional;

Charset::Charset(std::string symbols) : symbols_(std::move(symbols)) {
  std::set<char> seen;
  for (char& c : symbols_) {
    c = char(std::tolower(static_cast<unsigned char>(c)));
    if (!seen.insert(c).second) throw ConfigError(std::string("charset: duplicate symbol '") + c + "'");
  }
  if (symbols_.empty()) throw ConfigError("charset: empty alphabet");
}

Charset Charset::alphanumeric() { return Charset("abcdefghijklmnopqrstuvwxyz0123456789"); }

int Charset::id(char c) const {
  const auto pos = symbols_.find(char(std::tolower(static_cast<unsigned char>(c))));
  return pos == std::string::npos ? kUnk : kFirstSymbol + int(pos);
}

std::vector<int64_t> Charset::encode(const std::string& text, int max_len) const {
  std::string body = text;
  if (int(body.size()) > max_len - 1) {
    spdlog::warn("charset: '{}' exceeds {} symbols, truncated", text, max_len - 1);
    body.resize(max_len - 1);
  }
  std::vector<int64_t> ids(max_len, kPad);
  for (std::size_t i = 0; i < body.size(); ++i) ids[i] = id(body[i]);
  ids[body.size()] = kEos;
  return ids;
}

std::string Charset::decode(const std::vector<int64_t>& ids) const {
  std::string out;
  for (auto i : ids) {
    if (i == kEos) break;
    if (i >= kFirstSymbol && i < num_classes()) out.push_back(symbols_[i - kFirstSymbol]);
  }
  return out;
}

void RecognizerConfig::validate(int channels) const {
  if (max_len < 2) throw ConfigError("recognizer.max_len must be >= 2");
  if (window < 1 || 28 % window != 0) throw ConfigError("recognizer.window must divide 28");
  if (pool < 1 || 28 % pool != 0) throw ConfigError("recognizer.pool must divide 28");
  if (depth < 1) throw ConfigError("recognizer.depth must be >= 1");
  if (heads < 1 || channels % heads != 0) throw ConfigError("recognizer.heads must divide the feature width");
}

TlsamLayerImpl::TlsamLayerImpl(int64_t dim, int64_t heads, int64_t window, int64_t pool)
    : window_(window), pool_(pool) {
  norm1 = register_module("norm1", torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim})));
  norm2 = register_module("norm2", torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim})));
  attn = register_module("attn", layers::Attention(dim, heads));
  mlp = register_module("mlp", layers::Mlp(dim, dim * 2));
}

torch::Tensor TlsamLayerImpl::forward(const torch::Tensor& x) {
  const auto m = x.size(0), c = x.size(1), h = x.size(2), w = x.size(3);
  const auto win = window_;
  const auto nwh = h / win, nww = w / win, nw = nwh * nww;
  auto tokens = x.permute({0, 2, 3, 1});  // [M,H,W,C]
  auto normed = norm1(tokens);
  // fine: tokens of the query's own window
  auto fine = normed.reshape({m, nwh, win, nww, win, c}).permute({0, 1, 3, 2, 4, 5}).reshape({m * nw, win * win, c});
  // coarse: pooled summaries of the whole map, shared by every window
  auto pooled = F::avg_pool2d(normed.permute({0, 3, 1, 2}), F::AvgPool2dFuncOptions(pool_));
  auto coarse = pooled.flatten(2).transpose(1, 2);  // [M,P,C]
  coarse = coarse.unsqueeze(1).expand({m, nw, coarse.size(1), c}).reshape({m * nw, -1, c});
  auto keys = torch::cat({fine, coarse}, 1);
  auto attended = attn(fine, keys, keys);
  attended = attended.view({m, nwh, nww, win, win, c}).permute({0, 1, 3, 2, 4, 5}).reshape({m, h, w, c});
  auto y = tokens + attended;
  y = y + mlp(norm2(y));
  return y.permute({0, 3, 1, 2}).contiguous();
}

TlsamEncoderImpl::TlsamEncoderImpl(int64_t dim, const RecognizerConfig& cfg) {
  for (int i = 0; i < cfg.depth; ++i) blocks->push_back(TlsamLayer(dim, cfg.heads, cfg.window, cfg.pool));
  register_module("blocks", blocks);
}

torch::Tensor TlsamEncoderImpl::forward(const torch::Tensor& r3) {
  auto x = r3 + layers::sinusoid_2d(r3.size(1), r3.size(2), r3.size(3), r3.options()).unsqueeze(0);
  for (auto& blk : *blocks) x = blk->as<TlsamLayer>()->forward(x);
  return x;
}

SamDecoderImpl::SamDecoderImpl(int64_t dim, int64_t num_inputs, int64_t num_classes, int64_t max_len)
    : dim_(dim), max_len_(max_len) {
  embed = register_module("embed", torch::nn::Embedding(num_inputs, dim));
  query_proj = register_module("query_proj", torch::nn::Linear(dim, dim));
  key_proj = register_module("key_proj", torch::nn::Linear(dim, dim));
  classifier_hidden = register_module("classifier_hidden", torch::nn::Linear(2 * dim, dim));
  classifier = register_module("classifier", torch::nn::Linear(dim, num_classes));
}

torch::Tensor SamDecoderImpl::attend(const torch::Tensor& enc, const torch::Tensor& query, torch::Tensor* attention) {
  // enc [M,C,H,W], query [M,T,C] -> log-probs [M,T,V]
  auto tokens = enc.flatten(2).transpose(1, 2);  // [M,HW,C]
  auto keys = key_proj(tokens);
  auto q = query_proj(query);
  auto scores = torch::matmul(q, keys.transpose(1, 2)) / std::sqrt(double(dim_));
  auto weights = torch::softmax(scores, -1);     // [M,T,HW]
  auto context = torch::matmul(weights, tokens);  // [M,T,C]
  if (attention) *attention = weights.view({enc.size(0), query.size(1), enc.size(2), enc.size(3)});
  auto hidden = torch::relu(classifier_hidden(torch::cat({context, query}, -1)));
  return torch::log_softmax(classifier(hidden), -1);
}

DecodeStep SamDecoderImpl::step(const torch::Tensor& enc, const torch::Tensor& prev, int64_t t) {
  TORCH_CHECK(t >= 0 && t < max_len_, "sam_decode_step: step ", t, " out of range");
  auto pos = layers::sinusoid_1d(max_len_, dim_, enc.options()).select(0, t);
  auto ids = prev.clamp(0, embed->weight.size(0) - 1);
  auto query = (embed(ids) + pos).unsqueeze(1);
  torch::Tensor att;
  auto lp = attend(enc, query, &att);
  return {lp.squeeze(1), att.squeeze(1)};
}

torch::Tensor SamDecoderImpl::teacher_forced(const torch::Tensor& enc, const torch::Tensor& prev,
                                             torch::Tensor* attention) {
  const auto t = prev.size(1);
  auto pos = layers::sinusoid_1d(max_len_, dim_, enc.options()).narrow(0, 0, t);
  auto query = embed(prev) + pos.unsqueeze(0);
  return attend(enc, query, attention);
}

RecognizerImpl::RecognizerImpl(int64_t channels, const RecognizerConfig& cfg, const Charset& charset)
    : cfg_(cfg), charset_(charset) {
  cfg_.validate(int(channels));
  encoder = register_module("encoder", TlsamEncoder(channels, cfg_));
  decoder = register_module("decoder",
                            SamDecoder(channels, charset_.num_classes() + 1, charset_.num_classes(), cfg_.max_len));
}

torch::Tensor RecognizerImpl::targets_for(const std::vector<std::string>& texts, torch::Device device) const {
  std::vector<int64_t> flat;
  flat.reserve(texts.size() * cfg_.max_len);
  for (const auto& t : texts) {
    auto ids = charset_.encode(t, cfg_.max_len);
    flat.insert(flat.end(), ids.begin(), ids.end());
  }
  return torch::tensor(flat, torch::kLong).view({int64_t(texts.size()), cfg_.max_len}).to(device);
}

SequencePrediction RecognizerImpl::teacher_forced(const torch::Tensor& enc, const torch::Tensor& targets) {
  const auto m = targets.size(0);
  auto bos = torch::full({m, 1}, charset_.bos(), targets.options());
  auto prev = torch::cat({bos, targets.narrow(1, 0, cfg_.max_len - 1)}, 1);
  SequencePrediction out;
  out.log_probs = decoder->teacher_forced(enc, prev, &out.attention);
  auto ids = out.log_probs.argmax(-1).to(torch::kCPU).contiguous();
  for (int64_t i = 0; i < m; ++i) {
    std::vector<int64_t> row(ids[i].data_ptr<int64_t>(), ids[i].data_ptr<int64_t>() + cfg_.max_len);
    out.texts.push_back(charset_.decode(row));
    out.ids.push_back(std::move(row));
  }
  return out;
}

SequencePrediction RecognizerImpl::greedy(const torch::Tensor& enc) {
  const auto m = enc.size(0);
  auto prev = torch::full({m}, charset_.bos(), torch::TensorOptions().dtype(torch::kLong).device(enc.device()));
  std::vector<torch::Tensor> lps, atts, picks;
  for (int64_t t = 0; t < cfg_.max_len; ++t) {
    auto s = decoder->step(enc, prev, t);
    prev = s.log_probs.argmax(-1);
    lps.push_back(s.log_probs);
    atts.push_back(s.attention);
    picks.push_back(prev);
  }
  SequencePrediction out;
  out.log_probs = torch::stack(lps, 1);
  out.attention = torch::stack(atts, 1);
  auto ids = torch::stack(picks, 1).to(torch::kCPU).contiguous();
  for (int64_t i = 0; i < m; ++i) {
    std::vector<int64_t> row(ids[i].data_ptr<int64_t>(), ids[i].data_ptr<int64_t>() + cfg_.max_len);
    // The final slot is reserved for EOS.
    std::vector<int64_t> body(row.begin(), row.end() - 1);
    out.texts.push_back(charset_.decode(body));
    out.ids.push_back(std::move(row));
  }
  return out;
}

}  // namespace spotter::recognizer
