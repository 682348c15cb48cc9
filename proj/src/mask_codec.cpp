#include "spotter/mask_codec.hpp"

#include <string>

#include "spotter/errors.hpp"

namespace spotter::mask_codec {

namespace {

void check_last_dim(const torch::Tensor& t, int64_t expected, const char* what) {
  if (t.dim() < 1 || t.size(-1) != expected) {
    throw ConfigError(std::string(what) + ": expected trailing dimension " + std::to_string(expected) +
                      ", got shape " + c10::str(t.sizes()));
  }
}

}  // namespace

PcaBasis PcaBasis::to(torch::Device device, torch::Dtype dtype) const {
  return {mean.to(device, dtype), components.to(device, dtype), explained_variance.to(device, dtype)};
}

PcaBasis fit_basis(const torch::Tensor& masks, int n_pca) {
  if (masks.dim() != 2 || masks.size(1) != kMaskDim) {
    throw ConfigError("fit_basis: masks must be [M, 784], got " + c10::str(masks.sizes()));
  }
  if (n_pca < 1 || n_pca > kMaskDim) throw ConfigError("fit_basis: n_pca out of range");
  if (masks.size(0) < n_pca) {
    throw ConfigError("fit_basis: " + std::to_string(masks.size(0)) + " masks cannot support " +
                      std::to_string(n_pca) + " components; use a smaller n_pca or more masks");
  }
  auto x = masks.to(torch::kCPU, torch::kDouble);
  auto mean = x.mean(0);
  auto centered = x - mean;
  auto cov = centered.t().mm(centered) / double(x.size(0));
  auto [evals, evecs] = torch::linalg_eigh(cov);  // ascending
  auto order = torch::arange(kMaskDim - 1, kMaskDim - 1 - n_pca, -1, torch::kLong);
  auto comps = evecs.index_select(1, order).t().contiguous();  // [n, 784]
  auto var = evals.index_select(0, order).clamp_min(0);
  // Deterministic sign: largest-magnitude entry of each component positive.
  auto pivot = comps.abs().argmax(1, true);
  auto sign = torch::sign(comps.gather(1, pivot));
  sign = torch::where(sign == 0, torch::ones_like(sign), sign);
  comps = comps * sign;
  return {mean.to(torch::kFloat32), comps.to(torch::kFloat32), var.to(torch::kFloat32)};
}

PcaBasis fit_basis(const std::vector<geometry::BinaryMask>& masks, int n_pca) {
  std::vector<torch::Tensor> rows;
  rows.reserve(masks.size());
  for (const auto& m : masks) rows.push_back(m.to_tensor());
  if (rows.empty()) throw ConfigError("fit_basis: no masks");
  return fit_basis(torch::stack(rows), n_pca);
}

torch::Tensor encode(const torch::Tensor& masks, const PcaBasis& basis) {
  check_last_dim(masks, kMaskDim, "encode");
  auto b = basis.to(masks.device(), masks.scalar_type());
  return torch::matmul(masks - b.mean, b.components.t());
}

torch::Tensor decode(const torch::Tensor& codes, const PcaBasis& basis) {
  check_last_dim(codes, basis.n_pca(), "decode");
  auto b = basis.to(codes.device(), codes.scalar_type());
  return torch::matmul(codes, b.components) + b.mean;
}

torch::Tensor decode_soft(const torch::Tensor& codes, const PcaBasis& basis) {
  return decode(codes, basis).clamp(0.0, 1.0);
}

}  // namespace spotter::mask_codec
