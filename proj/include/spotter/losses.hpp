#pragma once

#include <torch/torch.h>

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "spotter/mask_codec.hpp"

namespace spotter::losses {

struct MatchWeights {
  double cls = 2.0;
  double l1 = 5.0;
  double giou = 2.0;
  double mask = 2.0;
  void validate() const;
};

struct FocalParams {
  double alpha = 0.25;
  double gamma = 2.0;
};

// Ground truth of one image in model space (care instances only).
struct GtSet {
  torch::Tensor boxes;  // [G,4] normalized cxcywh
  torch::Tensor masks;  // [G,784] binary, relative to each gt box
  torch::Tensor codes;  // [G,n_pca] encode(masks)
  int64_t size() const { return boxes.defined() ? boxes.size(0) : 0; }
};

// Predictions of one image at one stage.
struct StagePrediction {
  torch::Tensor logits;  // [N]
  torch::Tensor boxes;   // [N,4]
  torch::Tensor codes;   // [N,n_pca]
};

struct Assignment {
  std::vector<std::pair<int, int>> pairs;  // (row / proposal, col / gt), sorted by row
  double total_cost = 0.0;
};

// -log-likelihood focal loss of a single sigmoid logit.
double focal_loss(double logit, int target, double alpha = 0.25, double gamma = 2.0);
// Elementwise focal loss over logits and {0,1} targets of the same shape.
torch::Tensor sigmoid_focal(const torch::Tensor& logits, const torch::Tensor& targets, const FocalParams& p);

// Set-matching cost [N, G]; see MatchWeights for the four terms.
torch::Tensor match_cost_matrix(const StagePrediction& pred, const GtSet& gt, const MatchWeights& w,
                                const FocalParams& focal = {});

// Minimum-cost one-to-one assignment covering min(rows, cols) pairs.
// Throws std::invalid_argument on non-finite input.
Assignment hungarian_assign(const std::vector<std::vector<double>>& cost);
Assignment hungarian_assign(const torch::Tensor& cost);

// Soft dice 1 - 2<p,g> / (|p|^2 + |g|^2) per row of [M,D] inputs.
torch::Tensor dice_loss(const torch::Tensor& pred, const torch::Tensor& target);

struct LossBreakdown {
  torch::Tensor total;
  std::map<std::string, torch::Tensor> terms;  // unweighted per-term values
};

// Stage loss for one image given that stage's own assignment.
LossBreakdown detection_loss_stage(const StagePrediction& pred, const GtSet& gt, const Assignment& assignment,
                                   const MatchWeights& w, const mask_codec::PcaBasis& basis,
                                   const FocalParams& focal = {});

// -(1/T) sum_t log p(y_t), averaged over instances. log_probs [M,T,V], targets [M,T].
torch::Tensor recognition_loss(const torch::Tensor& log_probs, const torch::Tensor& targets);

}  // namespace spotter::losses
