#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <vector>

#include "spotter/backbone.hpp"
#include "spotter/detector.hpp"
#include "spotter/losses.hpp"
#include "spotter/recognizer.hpp"
#include "spotter/synthetic.hpp"

namespace spotter::config {

struct RcConfig {
  bool enabled = true;
  int heads = 4;
  int depth = 2;
};

struct RecognizerSection {
  recognizer::RecognizerConfig model;
  std::string alphabet = "abcdefghijklmnopqrstuvwxyz0123456789";
  std::string train_roi = "predicted";  // "predicted" (bbox_K) | "gt"
};

struct MaskSection {
  int n_pca = 60;
  int basis_min_masks = 500;  // top up the fitting corpus with synthetic masks below this
};

struct LossSection {
  losses::MatchWeights weights;
  losses::FocalParams focal;
  double recognition = 1.0;
};

struct OptimizerSection {
  double lr = 1e-4;
  double weight_decay = 1e-4;
  std::string schedule = "cosine";  // "cosine" | "step"
  std::vector<int> milestones;
  double gamma = 0.1;
  int iterations = 2000;
  int warmup = 50;
  int batch_size = 2;
  double grad_clip = 1.0;
};

struct AugmentSection {
  bool enabled = false;
  double min_scale = 0.8;
  double max_scale = 1.2;
  double max_rotation_deg = 10.0;
  double max_shift = 0.1;  // crop offset as a fraction of the image size
  double brightness = 0.15;
  double contrast = 0.15;
};

struct DataSection {
  std::string train;  // dataset JSON; empty => synthetic
  std::string eval;   // dataset JSON; empty => synthetic eval split (or the train split when num_eval == 0)
  int input_width = 128;
  int input_height = 128;
  data::SyntheticProfile synthetic;
  int num_train = 20;
  int num_eval = 0;
  std::uint64_t seed_offset = 1000;
  AugmentSection augment;
};

struct EvalSection {
  double score_threshold = 0.4;
  double mask_threshold = 0.5;
  double iou_threshold = 0.5;
  bool ned_penalize_false_positives = true;
  bool nms = false;
  double nms_iou = 0.5;
};

struct LogSection {
  int interval = 50;
  int checkpoint_interval = 500;
};

struct RunConfig {
  std::string profile = "toy";
  std::uint64_t seed = 0;
  std::string device = "cpu";
  int threads = 1;
  backbone::BackboneConfig backbone;
  detector::DetectorConfig detector;
  RcConfig rc;
  RecognizerSection recognizer;
  MaskSection mask;
  LossSection loss;
  OptimizerSection optimizer;
  DataSection data;
  EvalSection eval;
  LogSection log;

  // Throws ConfigError describing the first inconsistency.
  void validate() const;
};

// Workstation-sized defaults (small backbone, N=20, d=64, K=3, 3-letter alphabet).
RunConfig toy_profile();
// Documented full-scale defaults (N=100, d=256, K=6, LR 2.5e-5 with step decay).
RunConfig full_profile();

// Starts from the profile named by "profile" (default toy) and applies
// overrides. Unknown keys and wrong types raise ConfigError.
RunConfig from_json(const nlohmann::json& j);
RunConfig load(const std::string& path);
nlohmann::json to_json(const RunConfig& cfg);

}  // namespace spotter::config
