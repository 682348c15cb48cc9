#pragma once

#include <opencv2/core.hpp>
#include <torch/torch.h>

#include <map>
#include <string>
#include <vector>

#include "spotter/backbone.hpp"
#include "spotter/config.hpp"
#include "spotter/data.hpp"
#include "spotter/detector.hpp"
#include "spotter/losses.hpp"
#include "spotter/mask_codec.hpp"
#include "spotter/recognition_conversion.hpp"
#include "spotter/recognizer.hpp"

namespace spotter::model {

// Supervision for one image in model-input pixel space (care instances only).
struct ImageTarget {
  losses::GtSet gt;
  std::vector<std::string> texts;
};

ImageTarget make_target(const std::vector<data::TextInstance>& instances, int image_w, int image_h,
                        const mask_codec::PcaBasis& basis, torch::Device device);

struct LossOutput {
  torch::Tensor total;
  std::map<std::string, double> terms;  // batch means, for logging
};

// Per-stage sums of matched gIoU, for refinement diagnostics.
struct StageGiou {
  std::vector<double> sum;
  std::vector<long long> count;
  void add(const StageGiou& o);
  std::vector<double> means() const;
};

class SpotterImpl : public torch::nn::Module {
 public:
  SpotterImpl(const config::RunConfig& cfg, const mask_codec::PcaBasis& basis);

  // images: [B,3,H,W] normalized; targets.size() == B.
  LossOutput loss(const torch::Tensor& images, const std::vector<ImageTarget>& targets);

  // Detections above `score_threshold` per image, polygons in input pixels.
  std::vector<std::vector<data::SpottingResult>> predict(const torch::Tensor& images, double score_threshold,
                                                         double mask_threshold, bool with_attention = false);

  // Each stage's own Hungarian assignment, gIoU of matched boxes.
  StageGiou stage_giou(const torch::Tensor& images, const std::vector<ImageTarget>& targets);

  const config::RunConfig& config() const { return cfg_; }
  mask_codec::PcaBasis basis() const;

  backbone::Backbone backbone{nullptr};
  detector::Detector detector{nullptr};
  rc::RecognitionConversion rc{nullptr};
  recognizer::Recognizer recognizer{nullptr};

 private:
  torch::Tensor recognition_input(const backbone::FeaturePyramid& pyr, const torch::Tensor& boxes,
                                  const torch::Tensor& batch_index, const torch::Tensor& prop,
                                  const torch::Tensor& codes);

  config::RunConfig cfg_;
  torch::Tensor basis_mean_, basis_components_, basis_variance_;
};
TORCH_MODULE(Spotter);

// Normalizes an 8-bit BGR image into a [3,H,W] float tensor.
torch::Tensor image_to_tensor(const cv::Mat& bgr);

// Binary mask (28x28 relative to `box`) to an image-space polygon. Falls back
// to the box rectangle when no contour survives.
geometry::Polygon mask_to_polygon(const torch::Tensor& mask, const geometry::Box& box, int image_w, int image_h,
                                  double threshold);

}  // namespace spotter::model
