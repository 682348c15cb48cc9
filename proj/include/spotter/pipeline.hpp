#pragma once

#include <nlohmann/json.hpp>
#include <opencv2/core.hpp>

#include <filesystem>
#include <string>
#include <vector>

#include "spotter/config.hpp"
#include "spotter/data.hpp"
#include "spotter/model.hpp"

namespace spotter::pipeline {

// One image resized to the model input, with instances in input pixels.
struct Sample {
  std::string name;
  cv::Mat image;  // CV_8UC3, input_height x input_width
  std::vector<data::TextInstance> instances;
  double scale_x = 1.0;  // original / input
  double scale_y = 1.0;
};

Sample make_sample(std::string name, const cv::Mat& image, std::vector<data::TextInstance> instances,
                   const config::RunConfig& cfg);
std::vector<Sample> synthetic_samples(const config::RunConfig& cfg, std::uint64_t first_seed, int count);
// Throws DataError naming the first unreadable image.
std::vector<Sample> dataset_samples(const data::Dataset& ds, const config::RunConfig& cfg);
std::vector<Sample> train_split(const config::RunConfig& cfg);
// Explicit eval set, the held-out synthetic split, or the train split when neither is configured.
std::vector<Sample> eval_split(const config::RunConfig& cfg);

// Ground-truth masks of the training split, topped up with extra synthetic
// word masks until at least mask.basis_min_masks are available.
mask_codec::PcaBasis fit_training_basis(const config::RunConfig& cfg, const std::vector<Sample>& train);

// Random scale, rotation, crop shift and photometric jitter.
Sample augment(const Sample& s, const config::AugmentSection& a, std::uint64_t seed);

double learning_rate(const config::OptimizerSection& opt, int iteration);

struct TrainResult {
  std::filesystem::path checkpoint;
  nlohmann::json metrics;
  model::Spotter model{nullptr};
};

// Writes train_log.jsonl, ckpt_latest.pt, model_final.pt, config.json and metrics.json under out_dir.
// A non-finite loss raises NumericFault naming the last good checkpoint.
TrainResult train(const config::RunConfig& cfg, const std::filesystem::path& out_dir);

std::vector<std::vector<data::SpottingResult>> predict_samples(model::Spotter& model, const std::vector<Sample>& samples,
                                                               const config::EvalSection& eval,
                                                               bool with_attention = false);

// Polygon NMS in descending confidence.
std::vector<data::SpottingResult> polygon_nms(std::vector<data::SpottingResult> results, double iou_thr);

// Full metric report plus the per-stage matched gIoU on `samples`.
nlohmann::json evaluate_samples(model::Spotter& model, const std::vector<Sample>& samples,
                                const config::EvalSection& eval, const std::vector<std::string>& lexicon);
std::vector<std::string> lexicon_of(const std::vector<Sample>& samples);

// Unreadable images produce per-file errors; polygons are in original pixels.
std::vector<data::ImagePredictions> infer(model::Spotter& model, const std::vector<std::filesystem::path>& images,
                                          const config::EvalSection& eval, bool with_attention);

struct VisualizeSummary {
  int overlays = 0;
  std::vector<int> attention_panels;  // per result drawn with attention, in output order
};
// Overlay per image plus an attention strip per result carrying maps.
VisualizeSummary visualize(const std::vector<data::ImagePredictions>& preds, const std::filesystem::path& image_root,
                           const std::filesystem::path& out_dir);

// Renders `count` synthetic images with a dataset JSON under out_dir.
data::Dataset generate_dataset(const data::SyntheticProfile& profile, std::uint64_t first_seed, int count,
                               const std::filesystem::path& out_dir);

}  // namespace spotter::pipeline
