#pragma once

#include <torch/torch.h>

#include <vector>

#include "spotter/backbone.hpp"
#include "spotter/layers.hpp"

namespace spotter::detector {

struct DetectorConfig {
  int num_proposals = 20;  // N
  int dim = 64;            // d
  int stages = 3;          // K
  int dyn_dim = 16;        // d_dyn
  int heads = 2;
  void validate() const;
};

// Per-stage recurrent state. Batched over images: boxes [B,N,4], features [B,N,d].
struct ProposalState {
  torch::Tensor boxes;
  torch::Tensor features;
  int stage = 0;
};

struct StageOutput {
  torch::Tensor boxes;     // [B,N,4] normalized cxcywh
  torch::Tensor logits;    // [B,N] text-vs-background
  torch::Tensor codes;     // [B,N,n_pca]
  torch::Tensor features;  // [B,N,d], next proposal features
};

// One refinement stage: proposal self-attention, proposal-conditioned dynamic
// convolutions over 7x7 RoI features, and the box/class/mask prediction heads.
class DynamicHeadStageImpl : public torch::nn::Module {
 public:
  DynamicHeadStageImpl(const DetectorConfig& cfg, int64_t roi_channels, int64_t n_pca);
  StageOutput forward(const ProposalState& state, const backbone::FeaturePyramid& pyramid);

  layers::Attention self_attn{nullptr};
  torch::nn::LayerNorm attn_norm{nullptr};
  torch::nn::Linear param_gen{nullptr};
  torch::nn::LayerNorm dyn_norm1{nullptr}, dyn_norm2{nullptr};
  torch::nn::Linear roi_proj{nullptr};
  torch::nn::LayerNorm roi_norm{nullptr}, fuse_norm{nullptr}, ffn_norm{nullptr};
  layers::Mlp ffn{nullptr};
  torch::nn::Sequential cls_tower{nullptr}, reg_tower{nullptr}, mask_tower{nullptr};
  torch::nn::Linear cls_out{nullptr}, delta_out{nullptr}, code_out{nullptr};

 private:
  DetectorConfig cfg_;
  int64_t roi_channels_;
  int stage_index_ = 0;

  friend class DetectorImpl;
};
TORCH_MODULE(DynamicHeadStage);

class DetectorImpl : public torch::nn::Module {
 public:
  DetectorImpl(const DetectorConfig& cfg, int64_t pyramid_channels, int64_t n_pca);

  // Learnable boxes and features plus the projected global pool of P5.
  ProposalState init_proposals(const backbone::FeaturePyramid& pyramid);
  // All K stage outputs; the last one feeds recognition.
  std::vector<StageOutput> forward(const backbone::FeaturePyramid& pyramid);

  const DetectorConfig& config() const { return cfg_; }

  torch::Tensor init_boxes;     // [N,4]
  torch::Tensor init_features;  // [N,d]
  torch::nn::Linear gap_proj{nullptr};
  torch::nn::ModuleList stage_heads;

 private:
  DetectorConfig cfg_;
};
TORCH_MODULE(Detector);

}  // namespace spotter::detector
