#include "spotter/losses.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "spotter/errors.hpp"
#include "spotter/geometry.hpp"

namespace spotter::losses {

void MatchWeights::validate() const {
  if (cls < 0 || l1 < 0 || giou < 0 || mask < 0) throw ConfigError("loss weights must be nonnegative");
  if (cls + l1 + giou + mask <= 0) throw ConfigError("at least one loss weight must be positive");
}

double focal_loss(double logit, int target, double alpha, double gamma) {
  // log p and log(1-p) via log-sigmoid for stability.
  const double log_p = -std::log1p(std::exp(-std::abs(logit))) + std::min(logit, 0.0);
  const double log_q = -std::log1p(std::exp(-std::abs(logit))) + std::min(-logit, 0.0);
  const double p = std::exp(log_p);
  if (target == 1) return -alpha * std::pow(1 - p, gamma) * log_p;
  return -(1 - alpha) * std::pow(p, gamma) * log_q;
}

torch::Tensor sigmoid_focal(const torch::Tensor& logits, const torch::Tensor& targets, const FocalParams& fp) {
  auto t = targets.to(logits.scalar_type());
  auto p = torch::sigmoid(logits);
  auto ce = torch::binary_cross_entropy_with_logits(logits, t, {}, {}, at::Reduction::None);
  auto p_t = p * t + (1 - p) * (1 - t);
  auto alpha_t = fp.alpha * t + (1 - fp.alpha) * (1 - t);
  return alpha_t * torch::pow(1 - p_t, fp.gamma) * ce;
}

torch::Tensor match_cost_matrix(const StagePrediction& pred, const GtSet& gt, const MatchWeights& w,
                                const FocalParams& focal) {
  TORCH_CHECK(gt.size() > 0, "match_cost_matrix: empty ground truth");
  const auto n = pred.logits.size(0);
  const auto g = gt.size();
  auto ones = torch::ones_like(pred.logits);
  auto cls = sigmoid_focal(pred.logits, ones, focal) - sigmoid_focal(pred.logits, torch::zeros_like(ones), focal);
  auto l1 = torch::cdist(pred.boxes, gt.boxes.to(pred.boxes.scalar_type()), 1.0);
  auto giou = 1 - geometry::giou_pairwise(pred.boxes, gt.boxes.to(pred.boxes.scalar_type()));

  auto pc = pred.codes;
  auto gc = gt.codes.to(pc.scalar_type());
  auto pn = pc.norm(2, -1, true);
  auto gn = gc.norm(2, -1, true);
  auto cos = torch::matmul(pc, gc.t()) / (pn * gn.t()).clamp_min(1e-12);
  auto degenerate = (pn <= 0) | (gn.t() <= 0);
  if (degenerate.any().item<bool>()) {
    spdlog::warn("match_cost_matrix: zero-norm mask code; cosine term set to maximal cost");
  }
  auto mask_cost = torch::where(degenerate.expand({n, g}), torch::ones_like(cos), 1 - cos);

  return w.cls * cls.unsqueeze(1).expand({n, g}) + w.l1 * l1 + w.giou * giou + w.mask * mask_cost;
}

Assignment hungarian_assign(const std::vector<std::vector<double>>& cost) {
  const int rows = int(cost.size());
  const int cols = rows ? int(cost[0].size()) : 0;
  Assignment result;
  if (rows == 0 || cols == 0) return result;
  for (const auto& r : cost) {
    if (int(r.size()) != cols) throw std::invalid_argument("hungarian_assign: ragged cost matrix");
    for (double v : r) {
      if (!std::isfinite(v)) throw std::invalid_argument("hungarian_assign: non-finite cost");
    }
  }
  // Potentials-based Kuhn-Munkres on an n x m matrix with n <= m.
  const bool transposed = rows > cols;
  const int n = transposed ? cols : rows;
  const int m = transposed ? rows : cols;
  auto a = [&](int i, int j) { return transposed ? cost[j][i] : cost[i][j]; };
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0), v(m + 1, 0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, kInf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  for (int j = 1; j <= m; ++j) {
    if (p[j] == 0) continue;
    const int i = p[j] - 1;
    const int col = j - 1;
    if (transposed) {
      result.pairs.emplace_back(col, i);
    } else {
      result.pairs.emplace_back(i, col);
    }
  }
  std::sort(result.pairs.begin(), result.pairs.end());
  for (auto [r, c] : result.pairs) result.total_cost += cost[r][c];
  return result;
}

Assignment hungarian_assign(const torch::Tensor& cost) {
  TORCH_CHECK(cost.dim() == 2, "hungarian_assign: cost must be 2-D");
  auto c = cost.detach().to(torch::kCPU, torch::kDouble).contiguous();
  std::vector<std::vector<double>> rows(c.size(0), std::vector<double>(c.size(1)));
  auto acc = c.accessor<double, 2>();
  for (int64_t i = 0; i < c.size(0); ++i) {
    for (int64_t j = 0; j < c.size(1); ++j) rows[i][j] = acc[i][j];
  }
  return hungarian_assign(rows);
}

torch::Tensor dice_loss(const torch::Tensor& pred, const torch::Tensor& target) {
  constexpr double kEps = 1e-6;
  auto t = target.to(pred.scalar_type());
  auto inter = (pred * t).sum(-1);
  auto denom = (pred * pred).sum(-1) + (t * t).sum(-1);
  return 1 - (2 * inter + kEps) / (denom + kEps);
}

LossBreakdown detection_loss_stage(const StagePrediction& pred, const GtSet& gt, const Assignment& assignment,
                                   const MatchWeights& w, const mask_codec::PcaBasis& basis,
                                   const FocalParams& focal) {
  const auto n = pred.logits.size(0);
  auto opts = pred.logits.options();
  auto targets = torch::zeros({n}, opts);
  std::vector<int64_t> rows, cols;
  for (auto [r, c] : assignment.pairs) {
    rows.push_back(r);
    cols.push_back(c);
  }
  const auto matched = int64_t(rows.size());
  const double norm = std::max<int64_t>(matched, 1);

  LossBreakdown out;
  auto zero = torch::zeros({}, opts);
  torch::Tensor l1 = zero, giou = zero, code_l2 = zero, dice = zero;
  if (matched > 0) {
    auto ri = torch::tensor(rows, torch::kLong).to(pred.logits.device());
    auto ci = torch::tensor(cols, torch::kLong).to(pred.logits.device());
    targets = targets.index_fill(0, ri, 1.0);
    auto pb = pred.boxes.index_select(0, ri);
    auto gb = gt.boxes.to(opts.dtype()).index_select(0, ci);
    l1 = (pb - gb).abs().sum(-1).sum() / norm;
    giou = (1 - geometry::giou_paired(pb, gb)).sum() / norm;
    auto pc = pred.codes.index_select(0, ri);
    auto gc = gt.codes.to(opts.dtype()).index_select(0, ci);
    code_l2 = (pc - gc).pow(2).mean(-1).sum() / norm;
    auto soft = mask_codec::decode_soft(pc, basis);
    dice = dice_loss(soft, gt.masks.to(opts.dtype()).index_select(0, ci)).sum() / norm;
  }
  auto cls = sigmoid_focal(pred.logits, targets, focal).sum() / norm;
  out.terms = {{"cls", cls}, {"l1", l1}, {"giou", giou}, {"mask_l2", code_l2}, {"mask_dice", dice}};
  out.total = w.cls * cls + w.l1 * l1 + w.giou * giou + w.mask * (code_l2 + dice);
  return out;
}

torch::Tensor recognition_loss(const torch::Tensor& log_probs, const torch::Tensor& targets) {
  TORCH_CHECK(log_probs.dim() == 3 && targets.dim() == 2, "recognition_loss: expected [M,T,V] and [M,T]");
  if (log_probs.size(0) == 0) return torch::zeros({}, log_probs.options());
  auto picked = log_probs.gather(2, targets.unsqueeze(2)).squeeze(2);  // [M,T]
  return -picked.mean(1).mean();
}

}  // namespace spotter::losses
