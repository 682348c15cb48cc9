#pragma once

#include <torch/torch.h>

#include <vector>

#include "spotter/geometry.hpp"

namespace spotter::mask_codec {

inline constexpr int kMaskDim = geometry::kMaskSize * geometry::kMaskSize;
inline constexpr int kBasisVersion = 1;

// Frozen PCA code space for 28x28 masks. Rows of `components` are orthonormal.
struct PcaBasis {
  torch::Tensor mean;                // [784]
  torch::Tensor components;          // [n_pca, 784]
  torch::Tensor explained_variance;  // [n_pca]

  int n_pca() const { return components.defined() ? int(components.size(0)) : 0; }
  bool fitted() const { return components.defined(); }
  PcaBasis to(torch::Device device, torch::Dtype dtype) const;
};

// Mean-centered PCA over flattened masks; `masks` is [M, 784].
// Throws ConfigError when M < n_pca.
PcaBasis fit_basis(const torch::Tensor& masks, int n_pca);
PcaBasis fit_basis(const std::vector<geometry::BinaryMask>& masks, int n_pca);

// [..., 784] -> [..., n_pca]
torch::Tensor encode(const torch::Tensor& masks, const PcaBasis& basis);
// [..., n_pca] -> [..., 784], raw (unclamped) linear reconstruction.
torch::Tensor decode(const torch::Tensor& codes, const PcaBasis& basis);
// decode() clamped to [0,1]; soft mask for dice.
torch::Tensor decode_soft(const torch::Tensor& codes, const PcaBasis& basis);

}  // namespace spotter::mask_codec
