#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

#include "spotter/geometry.hpp"

namespace spotter::data {

struct TextInstance {
  geometry::Polygon polygon;
  std::string text;
  bool care = true;
};

struct DatasetRecord {
  std::string image;  // path relative to the dataset root
  std::vector<TextInstance> instances;
};

struct Dataset {
  std::filesystem::path root;  // directory holding the JSON; image paths resolve against it
  std::vector<DatasetRecord> records;

  std::filesystem::path image_path(std::size_t i) const { return root / records[i].image; }
};

struct SpottingResult {
  geometry::Polygon polygon;
  std::string text;
  double confidence = 0.0;
  std::vector<std::vector<float>> attention;  // optional: one 28x28 map per decoded symbol
};

struct ImagePredictions {
  std::string image;
  std::vector<SpottingResult> results;
  std::string error;  // non-empty when the image could not be processed
};

// Dataset JSON: {"records": [{"image": str, "instances": [{"polygon": [x1,y1,...], "text": str, "care": bool}]}]}
// Throws DataError naming the offending record and field.
Dataset load_dataset(const std::filesystem::path& path);
Dataset parse_dataset(const nlohmann::json& j, const std::filesystem::path& root = {});
nlohmann::json dataset_to_json(const Dataset& ds);
void save_dataset(const Dataset& ds, const std::filesystem::path& path);

// Predictions JSON: {"images": [{"image": str, "results": [{"polygon", "text", "confidence"}], "error"?}]}
nlohmann::json predictions_to_json(const std::vector<ImagePredictions>& preds);
std::vector<ImagePredictions> predictions_from_json(const nlohmann::json& j);

// Resolves a relative path against $SPOTTER_DATA_ROOT when it is set.
std::filesystem::path resolve_data_path(const std::filesystem::path& p);

}  // namespace spotter::data
