#pragma once

#include <opencv2/core.hpp>

#include <cstdint>
#include <string>
#include <vector>

#include "spotter/data.hpp"

namespace spotter::data {

struct SyntheticProfile {
  int width = 128;
  int height = 128;
  int min_words = 1;
  int max_words = 3;
  int min_word_len = 2;
  int max_word_len = 4;
  std::string alphabet = "abc";
  double min_font_scale = 0.7;
  double max_font_scale = 1.0;
  int thickness = 2;
  double max_rotation_deg = 10.0;
  double curved_fraction = 0.0;  // share of words rendered on an arc baseline
  double dont_care_fraction = 0.0;

  void validate() const;
};

struct SyntheticSample {
  cv::Mat image;                        // CV_8UC3
  std::vector<TextInstance> instances;
  std::vector<cv::Mat> ink;             // CV_32F alpha per instance, image-sized
};

// Deterministic in (seed, profile). Throws DataError when the layout cannot
// fit min_words after bounded retries.
SyntheticSample generate_synthetic_sample(std::uint64_t seed, const SyntheticProfile& profile);

}  // namespace spotter::data
