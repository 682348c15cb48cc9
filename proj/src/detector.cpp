#include "spotter/detector.hpp"

#include <cmath>
#include <string>

#include "spotter/errors.hpp"
#include "spotter/geometry.hpp"

namespace spotter::detector {

void DetectorConfig::validate() const {
  if (num_proposals < 1) throw ConfigError("detector.num_proposals must be >= 1");
  if (stages < 1) throw ConfigError("detector.stages must be >= 1");
  if (dim < 1 || dyn_dim < 1) throw ConfigError("detector widths must be positive");
  if (heads < 1 || dim % heads != 0) throw ConfigError("detector.heads must divide detector.dim");
}

namespace {

torch::nn::Sequential tower(int64_t dim, int depth) {
  torch::nn::Sequential seq;
  for (int i = 0; i < depth; ++i) {
    seq->push_back(torch::nn::Linear(torch::nn::LinearOptions(dim, dim).bias(false)));
    seq->push_back(torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim})));
    seq->push_back(torch::nn::ReLU());
  }
  return seq;
}

void check_finite(const torch::Tensor& t, const char* what, int stage) {
  if (torch::isfinite(t).all().item<bool>()) return;
  auto bad = (~torch::isfinite(t)).flatten(2).any(-1).nonzero();
  std::string where;
  if (bad.size(0) > 0) {
    where = " (image " + std::to_string(bad[0][0].item<int64_t>()) + ", proposal " +
            std::to_string(bad[0][1].item<int64_t>()) + ")";
  }
  throw NumericFault(std::string("non-finite ") + what + " at detector stage " + std::to_string(stage) + where);
}

}  // namespace

DynamicHeadStageImpl::DynamicHeadStageImpl(const DetectorConfig& cfg, int64_t roi_channels, int64_t n_pca)
    : cfg_(cfg), roi_channels_(roi_channels) {
  const int64_t d = cfg.dim;
  const int64_t roi_cells = geometry::kDetectionRoi * geometry::kDetectionRoi;
  self_attn = register_module("self_attn", layers::Attention(d, cfg.heads));
  attn_norm = register_module("attn_norm", torch::nn::LayerNorm(torch::nn::LayerNormOptions({d})));
  param_gen = register_module("param_gen", torch::nn::Linear(d, roi_channels * cfg.dyn_dim + cfg.dyn_dim * d));
  dyn_norm1 = register_module("dyn_norm1", torch::nn::LayerNorm(torch::nn::LayerNormOptions({cfg.dyn_dim})));
  dyn_norm2 = register_module("dyn_norm2", torch::nn::LayerNorm(torch::nn::LayerNormOptions({d})));
  roi_proj = register_module("roi_proj", torch::nn::Linear(roi_cells * d, d));
  roi_norm = register_module("roi_norm", torch::nn::LayerNorm(torch::nn::LayerNormOptions({d})));
  fuse_norm = register_module("fuse_norm", torch::nn::LayerNorm(torch::nn::LayerNormOptions({d})));
  ffn_norm = register_module("ffn_norm", torch::nn::LayerNorm(torch::nn::LayerNormOptions({d})));
  ffn = register_module("ffn", layers::Mlp(d, 4 * d));
  cls_tower = register_module("cls_tower", tower(d, 1));
  reg_tower = register_module("reg_tower", tower(d, 3));
  mask_tower = register_module("mask_tower", tower(d, 1));
  cls_out = register_module("cls_out", torch::nn::Linear(d, 1));
  delta_out = register_module("delta_out", torch::nn::Linear(d, 4));
  code_out = register_module("code_out", torch::nn::Linear(d, n_pca));

  torch::NoGradGuard guard;
  constexpr double kPrior = 0.01;
  cls_out->bias.fill_(-std::log((1 - kPrior) / kPrior));
  delta_out->weight.normal_(0.0, 1e-3);
  delta_out->bias.zero_();
}

StageOutput DynamicHeadStageImpl::forward(const ProposalState& state, const backbone::FeaturePyramid& pyramid) {
  const auto b = state.features.size(0);
  const auto n = state.features.size(1);
  const int64_t d = cfg_.dim;
  const int64_t cells = geometry::kDetectionRoi * geometry::kDetectionRoi;

  // (1) relations between proposals
  auto f = attn_norm(state.features + self_attn(state.features, state.features, state.features));

  // (2) proposal-conditioned 1x1 convolutions over the RoI grid
  auto batch_index = torch::arange(b, torch::TensorOptions().dtype(torch::kLong).device(f.device()))
                         .unsqueeze(1)
                         .expand({b, n})
                         .reshape({-1});
  auto roi = geometry::roi_extract(pyramid.levels, state.boxes.reshape({-1, 4}), batch_index,
                                   geometry::kDetectionRoi, geometry::kDetectionRoi, pyramid.image_h,
                                   pyramid.image_w)
                 .features;                               // [B*N, C, 7, 7]
  roi = roi.flatten(2).transpose(1, 2);                   // [B*N, 49, C]
  auto params = param_gen(f).reshape({b * n, -1});
  auto w1 = params.narrow(1, 0, roi_channels_ * cfg_.dyn_dim).view({b * n, roi_channels_, cfg_.dyn_dim});
  auto w2 = params.narrow(1, roi_channels_ * cfg_.dyn_dim, cfg_.dyn_dim * d).view({b * n, cfg_.dyn_dim, d});
  auto h = torch::relu(dyn_norm1(torch::bmm(roi, w1)));
  h = torch::relu(dyn_norm2(torch::bmm(h, w2)));          // [B*N, 49, d]

  // (3) flatten + projection, fused with the incoming proposal features
  auto proj = torch::relu(roi_norm(roi_proj(h.reshape({b * n, cells * d})))).view({b, n, d});
  auto next = fuse_norm(f + proj);
  next = ffn_norm(next + ffn(next));
  check_finite(next, "proposal features", stage_index_);

  // (4) prediction heads
  auto logits = cls_out(cls_tower->forward(next)).squeeze(-1);
  auto deltas = delta_out(reg_tower->forward(next));
  auto codes = code_out(mask_tower->forward(next));
  check_finite(deltas, "box deltas", stage_index_);
  auto boxes = geometry::apply_box_deltas(state.boxes, deltas);
  return {boxes, logits, codes, next};
}

DetectorImpl::DetectorImpl(const DetectorConfig& cfg, int64_t pyramid_channels, int64_t n_pca) : cfg_(cfg) {
  cfg_.validate();
  auto boxes = torch::tensor({0.5f, 0.5f, 1.0f, 1.0f}).repeat({cfg_.num_proposals, 1});
  init_boxes = register_parameter("init_boxes", boxes);
  init_features = register_parameter("init_features", torch::randn({cfg_.num_proposals, cfg_.dim}));
  gap_proj = register_module("gap_proj",
                             torch::nn::Linear(torch::nn::LinearOptions(pyramid_channels, cfg_.dim).bias(false)));
  for (int k = 0; k < cfg_.stages; ++k) {
    auto head = DynamicHeadStage(cfg_, pyramid_channels, n_pca);
    head->stage_index_ = k + 1;
    stage_heads->push_back(head);
  }
  register_module("stage_heads", stage_heads);
}

ProposalState DetectorImpl::init_proposals(const backbone::FeaturePyramid& pyramid) {
  const auto& p5 = pyramid.levels.back();
  const auto b = p5.size(0);
  auto global = gap_proj(p5.mean({2, 3}));  // [B,d]
  auto features = init_features.unsqueeze(0) + global.unsqueeze(1);
  // Learnable boxes stay in the valid range regardless of how they drift.
  auto c = init_boxes.unbind(-1);
  auto boxes = torch::stack({c[0].clamp(0, 1), c[1].clamp(0, 1), c[2].clamp(1e-4, 1), c[3].clamp(1e-4, 1)}, -1);
  return {boxes.unsqueeze(0).expand({b, -1, -1}), features, 0};
}

std::vector<StageOutput> DetectorImpl::forward(const backbone::FeaturePyramid& pyramid) {
  auto state = init_proposals(pyramid);
  std::vector<StageOutput> outputs;
  outputs.reserve(cfg_.stages);
  for (int k = 0; k < cfg_.stages; ++k) {
    auto out = stage_heads[k]->as<DynamicHeadStage>()->forward(state, pyramid);
    // RoI coordinates do not carry gradient across stages.
    state = {out.boxes.detach(), out.features, k + 1};
    outputs.push_back(std::move(out));
  }
  return outputs;
}

}  // namespace spotter::detector
