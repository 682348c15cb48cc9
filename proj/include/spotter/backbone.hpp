#pragma once

#include <torch/torch.h>

#include <string>
#include <vector>

#include "spotter/layers.hpp"

namespace spotter::backbone {

struct BackboneConfig {
  std::string type = "swin";  // "swin" | "resnet"
  int patch_size = 4;
  std::vector<int> depths = {2, 2, 2, 2};
  std::vector<int> heads = {2, 4, 8, 8};
  int window = 4;
  int embed_dim = 32;  // stage-1 width; stage i has embed_dim * 2^i channels
  int d_model = 64;    // FPN width
  int dc_dilation = 2;
  bool dilated = true;  // insert a DC unit after every stage

  int stage_width(int stage) const { return embed_dim << stage; }
  // Throws ConfigError on inconsistent settings.
  void validate() const;
};

// P2..P5 at strides 4/8/16/32, each [B, d_model, H/s, W/s] of the padded input.
struct FeaturePyramid {
  std::vector<torch::Tensor> levels;
  int image_h = 0;  // unpadded input size
  int image_w = 0;
};

// Relative-position-biased multi-head attention inside non-overlapping windows.
class WindowAttentionImpl : public torch::nn::Module {
 public:
  WindowAttentionImpl(int64_t dim, int64_t heads, int64_t window);
  // x: [B*nW, w*w, C]; mask: [nW, w*w, w*w] additive, or undefined.
  torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& mask, int64_t batch);

  layers::Attention attn{nullptr};
  torch::Tensor bias_table;

 private:
  int64_t window_;
  int64_t heads_;
  torch::Tensor rel_index_;
};
TORCH_MODULE(WindowAttention);

class SwinBlockImpl : public torch::nn::Module {
 public:
  SwinBlockImpl(int64_t dim, int64_t heads, int64_t window, int64_t shift);
  // x: [B, H, W, C]
  torch::Tensor forward(const torch::Tensor& x);
  int64_t shift() const { return shift_; }

  torch::nn::LayerNorm norm1{nullptr}, norm2{nullptr};
  WindowAttention attn{nullptr};
  layers::Mlp mlp{nullptr};

 private:
  int64_t window_;
  int64_t shift_;
};
TORCH_MODULE(SwinBlock);

// Alternating regular / shifted window blocks at constant width and resolution.
class SwinStageImpl : public torch::nn::Module {
 public:
  SwinStageImpl(int64_t dim, int64_t depth, int64_t heads, int64_t window);
  torch::Tensor forward(torch::Tensor x);  // [B,H,W,C] -> [B,H,W,C]
  torch::nn::ModuleList blocks;
};
TORCH_MODULE(SwinStage);

class PatchMergingImpl : public torch::nn::Module {
 public:
  explicit PatchMergingImpl(int64_t dim);
  torch::Tensor forward(const torch::Tensor& x);  // [B,H,W,C] -> [B,H/2,W/2,2C]
  torch::nn::LayerNorm norm{nullptr};
  torch::nn::Linear reduction{nullptr};
};
TORCH_MODULE(PatchMerging);

// y = x + conv1x1(act(dconv(act(dconv(x))))) with reflection padding.
class DcUnitImpl : public torch::nn::Module {
 public:
  DcUnitImpl(int64_t channels, int64_t dilation);
  torch::Tensor forward(const torch::Tensor& x);
  torch::nn::Conv2d dilated1{nullptr}, dilated2{nullptr}, pointwise{nullptr};

 private:
  int64_t dilation_;
};
TORCH_MODULE(DcUnit);

// Hierarchical transformer trunk; returns the four stage outputs in NCHW.
class SwinTrunkImpl : public torch::nn::Module {
 public:
  explicit SwinTrunkImpl(const BackboneConfig& cfg);
  std::vector<torch::Tensor> forward(const torch::Tensor& image);
  torch::nn::Conv2d patch_embed{nullptr};
  torch::nn::LayerNorm embed_norm{nullptr};
  torch::nn::ModuleList stages, merges, out_norms;
};
TORCH_MODULE(SwinTrunk);

// Plain residual CNN producing the same four strides and widths.
class ResNetTrunkImpl : public torch::nn::Module {
 public:
  explicit ResNetTrunkImpl(const BackboneConfig& cfg);
  std::vector<torch::Tensor> forward(const torch::Tensor& image);
  torch::nn::Sequential stem{nullptr};
  torch::nn::ModuleList stages;
};
TORCH_MODULE(ResNetTrunk);

class FpnImpl : public torch::nn::Module {
 public:
  FpnImpl(const std::vector<int64_t>& in_channels, int64_t d_model);
  std::vector<torch::Tensor> forward(const std::vector<torch::Tensor>& feats);
  torch::nn::ModuleList laterals, outputs;
};
TORCH_MODULE(Fpn);

class BackboneImpl : public torch::nn::Module {
 public:
  explicit BackboneImpl(const BackboneConfig& cfg);
  // image: [B, 3, H, W], H, W >= 32. Pads to multiples of 32.
  FeaturePyramid forward(const torch::Tensor& image);
  const BackboneConfig& config() const { return cfg_; }

  SwinTrunk swin{nullptr};
  ResNetTrunk resnet{nullptr};
  torch::nn::ModuleList dc_units;
  Fpn fpn{nullptr};

 private:
  BackboneConfig cfg_;
};
TORCH_MODULE(Backbone);

}  // namespace spotter::backbone
