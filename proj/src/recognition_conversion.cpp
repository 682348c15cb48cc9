#include "spotter/recognition_conversion.hpp"

#include "spotter/errors.hpp"
#include "spotter/geometry.hpp"

namespace spotter::rc {

namespace F = torch::nn::functional;

RoiPyramid extract_roi_pyramid(const backbone::FeaturePyramid& pyramid, const torch::Tensor& boxes,
                               const torch::Tensor& batch_index) {
  auto a1 = geometry::roi_extract(pyramid.levels, boxes, batch_index, geometry::kRecognitionRoi,
                                  geometry::kRecognitionRoi, pyramid.image_h, pyramid.image_w)
                .features;
  auto a2 = F::avg_pool2d(a1, F::AvgPool2dFuncOptions(2));
  auto a3 = F::avg_pool2d(a2, F::AvgPool2dFuncOptions(2));
  return {a1, a2, a3};
}

UpsampleUnitImpl::UpsampleUnitImpl(int64_t channels) {
  conv = register_module("conv", torch::nn::Conv2d(torch::nn::Conv2dOptions(channels, channels, 3).padding(1)));
}

torch::Tensor UpsampleUnitImpl::forward(const torch::Tensor& x) {
  auto up = F::interpolate(x, F::InterpolateFuncOptions()
                                  .scale_factor(std::vector<double>{2.0, 2.0})
                                  .mode(torch::kBilinear)
                                  .align_corners(false));
  return conv(up);
}

DetectionFusionImpl::DetectionFusionImpl(int64_t channels, int64_t prop_dim) {
  prop_proj = register_module("prop_proj", torch::nn::Linear(prop_dim, channels));
  norm = register_module("norm", layers::ChannelNorm(channels));
  conv = register_module("conv", torch::nn::Conv2d(torch::nn::Conv2dOptions(channels, channels, 3).padding(1)));
}

torch::Tensor DetectionFusionImpl::forward(const torch::Tensor& a3, const torch::Tensor& prop) {
  auto injected = prop_proj(prop).unsqueeze(-1).unsqueeze(-1);
  return conv(norm(a3 + injected));
}

RecognitionConversionImpl::RecognitionConversionImpl(int64_t channels, int64_t prop_dim, int64_t encoder_heads,
                                                     int64_t encoder_depth)
    : channels_(channels) {
  fusion = register_module("fusion", DetectionFusion(channels, prop_dim));
  for (int64_t i = 0; i < encoder_depth; ++i) encoder->push_back(layers::EncoderLayer(channels, encoder_heads));
  register_module("encoder", encoder);
  up_d1 = register_module("up_d1", UpsampleUnit(channels));
  up_d2 = register_module("up_d2", UpsampleUnit(channels));
  up_r1 = register_module("up_r1", UpsampleUnit(channels));
  up_r2 = register_module("up_r2", UpsampleUnit(channels));
  mask1 = register_module("mask1", torch::nn::Conv2d(torch::nn::Conv2dOptions(channels, 1, 1)));
  mask2 = register_module("mask2", torch::nn::Conv2d(torch::nn::Conv2dOptions(channels, 1, 1)));
  mask3 = register_module("mask3", torch::nn::Conv2d(torch::nn::Conv2dOptions(channels, 1, 1)));
}

RecognitionFeatures RecognitionConversionImpl::forward(const RoiPyramid& a, const torch::Tensor& f_det) {
  TORCH_CHECK(a.a1.size(-1) == 2 * a.a2.size(-1) && a.a2.size(-1) == 2 * a.a3.size(-1) &&
                  f_det.sizes() == a.a3.sizes(),
              "rc_forward: RoI pyramid is not a dyadic chain matching f_det");
  const auto m = f_det.size(0), c = f_det.size(1), h = f_det.size(2), w = f_det.size(3);
  // d1: transformer encoder over the 7x7 detection tokens
  auto tokens = (f_det + layers::sinusoid_2d(c, h, w, f_det.options()).unsqueeze(0)).flatten(2).transpose(1, 2);
  for (auto& layer : *encoder) tokens = layer->as<layers::EncoderLayer>()->forward(tokens);
  auto d1 = tokens.transpose(1, 2).reshape({m, c, h, w});
  auto d2 = up_d1(d1) + a.a2;
  auto d3 = up_d2(d2) + a.a1;

  RecognitionFeatures out;
  out.f_det = f_det;
  out.m1 = torch::sigmoid(mask1(d1));
  out.m2 = torch::sigmoid(mask2(d2));
  out.m3 = torch::sigmoid(mask3(d3));
  out.r1 = out.m1 * a.a3;
  out.r2 = out.m2 * (up_r1(out.r1) + a.a2);
  out.r3 = out.m3 * (up_r2(out.r2) + a.a1);
  return out;
}

RecognitionFeatures RecognitionConversionImpl::forward(const RoiPyramid& a, const torch::Tensor& prop,
                                                       GradientMode mode) {
  auto p = mode == GradientMode::kStopGradient ? prop.detach() : prop;
  return forward(a, fuse(a.a3, p));
}

torch::Tensor RecognitionConversionImpl::forward_without_rc(const RoiPyramid& a, const torch::Tensor& detector_mask) {
  auto r2 = up_r1(a.a3) + a.a2;
  auto r3 = up_r2(r2) + a.a1;
  return r3 * detector_mask.detach().unsqueeze(1);
}

}  // namespace spotter::rc
