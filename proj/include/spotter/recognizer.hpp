#pragma once

#include <torch/torch.h>

#include <string>
#include <vector>

#include "spotter/layers.hpp"

namespace spotter::recognizer {

// Output classes: PAD, EOS, UNK, then the symbols in order. BOS is an extra
// decoder input id (== num_classes()) that never appears as an output.
class Charset {
 public:
  static constexpr int kPad = 0;
  static constexpr int kEos = 1;
  static constexpr int kUnk = 2;
  static constexpr int kFirstSymbol = 3;

  Charset() = default;
  explicit Charset(std::string symbols);  // throws ConfigError on duplicates
  static Charset alphanumeric();          // a-z0-9

  const std::string& symbols() const { return symbols_; }
  int num_classes() const { return kFirstSymbol + int(symbols_.size()); }
  int bos() const { return num_classes(); }
  int id(char c) const;  // case-folded; UNK when absent

  // Ids for `text` followed by EOS and PAD up to `max_len`. Text longer than
  // max_len - 1 is truncated with a warning.
  std::vector<int64_t> encode(const std::string& text, int max_len) const;
  // Symbols up to the first EOS; specials dropped.
  std::string decode(const std::vector<int64_t>& ids) const;

 private:
  std::string symbols_;
};

struct RecognizerConfig {
  int max_len = 25;  // T, including the EOS slot
  int window = 7;
  int pool = 4;
  int depth = 2;
  int heads = 4;
  void validate(int channels) const;
};

// Local-window (fine) plus pooled-summary (coarse) self-attention block.
class TlsamLayerImpl : public torch::nn::Module {
 public:
  TlsamLayerImpl(int64_t dim, int64_t heads, int64_t window, int64_t pool);
  torch::Tensor forward(const torch::Tensor& x);  // [M,C,H,W] -> same
  torch::nn::LayerNorm norm1{nullptr}, norm2{nullptr};
  layers::Attention attn{nullptr};
  layers::Mlp mlp{nullptr};

 private:
  int64_t window_;
  int64_t pool_;
};
TORCH_MODULE(TlsamLayer);

class TlsamEncoderImpl : public torch::nn::Module {
 public:
  TlsamEncoderImpl(int64_t dim, const RecognizerConfig& cfg);
  torch::Tensor forward(const torch::Tensor& r3);  // [M,C,28,28] -> same
  torch::nn::ModuleList blocks;
};
TORCH_MODULE(TlsamEncoder);

struct DecodeStep {
  torch::Tensor log_probs;  // [M,V]
  torch::Tensor attention;  // [M,H,W]
};

// Spatial-attention decoder: query = embed(prev) + pos(t), single-head
// attention over all spatial tokens, context -> class distribution.
class SamDecoderImpl : public torch::nn::Module {
 public:
  SamDecoderImpl(int64_t dim, int64_t num_inputs, int64_t num_classes, int64_t max_len);
  // enc [M,C,H,W]; prev ids [M] (BOS id at t = 0)
  DecodeStep step(const torch::Tensor& enc, const torch::Tensor& prev, int64_t t);
  // All steps at once from gold previous symbols [M,T]; returns log-probs [M,T,V].
  torch::Tensor teacher_forced(const torch::Tensor& enc, const torch::Tensor& prev, torch::Tensor* attention = nullptr);

  torch::nn::Embedding embed{nullptr};
  torch::nn::Linear query_proj{nullptr}, key_proj{nullptr}, classifier_hidden{nullptr}, classifier{nullptr};

 private:
  torch::Tensor attend(const torch::Tensor& enc, const torch::Tensor& query, torch::Tensor* attention);
  int64_t dim_;
  int64_t max_len_;
};
TORCH_MODULE(SamDecoder);

struct SequencePrediction {
  torch::Tensor log_probs;   // [M,T,V]
  torch::Tensor attention;   // [M,T,H,W]
  std::vector<std::string> texts;
  std::vector<std::vector<int64_t>> ids;  // argmax ids per step
};

class RecognizerImpl : public torch::nn::Module {
 public:
  RecognizerImpl(int64_t channels, const RecognizerConfig& cfg, const Charset& charset);

  torch::Tensor encode(const torch::Tensor& r3) { return encoder->forward(r3); }
  // Gold previous symbols from target ids [M,T].
  SequencePrediction teacher_forced(const torch::Tensor& enc, const torch::Tensor& targets);
  // Argmax feedback; texts stop at the first EOS.
  SequencePrediction greedy(const torch::Tensor& enc);

  const Charset& charset() const { return charset_; }
  const RecognizerConfig& config() const { return cfg_; }
  torch::Tensor targets_for(const std::vector<std::string>& texts, torch::Device device) const;

  TlsamEncoder encoder{nullptr};
  SamDecoder decoder{nullptr};

 private:
  RecognizerConfig cfg_;
  Charset charset_;
};
TORCH_MODULE(Recognizer);

}  // namespace spotter::recognizer
