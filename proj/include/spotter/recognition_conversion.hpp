#pragma once

#include <torch/torch.h>

#include "spotter/backbone.hpp"
#include "spotter/layers.hpp"

namespace spotter::rc {

// Per-instance RoI features at three dyadic resolutions.
struct RoiPyramid {
  torch::Tensor a1;  // [M,C,28,28]
  torch::Tensor a2;  // [M,C,14,14]
  torch::Tensor a3;  // [M,C,7,7]
};

struct RecognitionFeatures {
  torch::Tensor r1, r2, r3;  // [M,C,7,7], [M,C,14,14], [M,C,28,28]
  torch::Tensor m1, m2, m3;  // [M,1,7,7], [M,1,14,14], [M,1,28,28]
  torch::Tensor f_det;       // [M,C,7,7]
};

// One 28x28 extraction at `boxes`, average-pooled down to 14x14 and 7x7.
RoiPyramid extract_roi_pyramid(const backbone::FeaturePyramid& pyramid, const torch::Tensor& boxes,
                               const torch::Tensor& batch_index);

// 2x bilinear upsampling followed by a 3x3 convolution.
class UpsampleUnitImpl : public torch::nn::Module {
 public:
  explicit UpsampleUnitImpl(int64_t channels);
  torch::Tensor forward(const torch::Tensor& x);
  torch::nn::Conv2d conv{nullptr};
};
TORCH_MODULE(UpsampleUnit);

// f_det = conv3x3(norm(a3 + linear(prop))).
class DetectionFusionImpl : public torch::nn::Module {
 public:
  DetectionFusionImpl(int64_t channels, int64_t prop_dim);
  torch::Tensor forward(const torch::Tensor& a3, const torch::Tensor& prop);
  torch::nn::Linear prop_proj{nullptr};
  layers::ChannelNorm norm{nullptr};
  torch::nn::Conv2d conv{nullptr};
};
TORCH_MODULE(DetectionFusion);

enum class GradientMode {
  kCoupled,       // recognition loss reaches the proposal features
  kStopGradient,  // proposal features enter detached
};

class RecognitionConversionImpl : public torch::nn::Module {
 public:
  RecognitionConversionImpl(int64_t channels, int64_t prop_dim, int64_t encoder_heads = 4, int64_t encoder_depth = 2);

  torch::Tensor fuse(const torch::Tensor& a3, const torch::Tensor& prop) { return fusion->forward(a3, prop); }
  // Masked recognition features from the RoI pyramid and f_det.
  RecognitionFeatures forward(const RoiPyramid& a, const torch::Tensor& f_det);
  // Convenience: fuse then forward, with optional stop-gradient on `prop`.
  RecognitionFeatures forward(const RoiPyramid& a, const torch::Tensor& prop, GradientMode mode);
  // RC disabled: plain fusion pyramid gated by the detector's own (detached) soft mask [M,28,28].
  torch::Tensor forward_without_rc(const RoiPyramid& a, const torch::Tensor& detector_mask);

  DetectionFusion fusion{nullptr};
  torch::nn::ModuleList encoder;
  UpsampleUnit up_d1{nullptr}, up_d2{nullptr}, up_r1{nullptr}, up_r2{nullptr};
  torch::nn::Conv2d mask1{nullptr}, mask2{nullptr}, mask3{nullptr};

 private:
  int64_t channels_;
};
TORCH_MODULE(RecognitionConversion);

}  // namespace spotter::rc
