#include "spotter/data.hpp"

#include <cstdlib>
#include <fstream>

#include "spotter/errors.hpp"

namespace spotter::data {

using nlohmann::json;

namespace {

[[noreturn]] void fail(std::size_t record, const std::string& field, const std::string& why) {
  throw DataError("dataset record " + std::to_string(record) + ", field '" + field + "': " + why);
}

geometry::Polygon parse_polygon(const json& j, std::size_t record, const std::string& field) {
  if (!j.is_array()) fail(record, field, "expected a flat coordinate list");
  std::vector<double> coords;
  for (const auto& v : j) {
    if (!v.is_number()) fail(record, field, "coordinates must be numbers");
    coords.push_back(v.get<double>());
  }
  if (coords.size() % 2 != 0) fail(record, field, "odd number of coordinates");
  if (coords.size() < 6) fail(record, field, "polygon needs at least 3 points");
  auto poly = geometry::Polygon::from_flat(coords);
  if (poly.area() <= 0) fail(record, field, "polygon has zero area");
  return poly;
}

}  // namespace

Dataset parse_dataset(const json& j, const std::filesystem::path& root) {
  if (!j.is_object() || !j.contains("records") || !j["records"].is_array()) {
    throw DataError("dataset: top-level object must contain a 'records' array");
  }
  Dataset ds;
  ds.root = root;
  const auto& records = j["records"];
  for (std::size_t r = 0; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (!rec.is_object()) fail(r, "<record>", "expected an object");
    if (!rec.contains("image") || !rec["image"].is_string()) fail(r, "image", "missing or not a string");
    DatasetRecord out;
    out.image = rec["image"].get<std::string>();
    if (rec.contains("instances")) {
      if (!rec["instances"].is_array()) fail(r, "instances", "expected an array");
      const auto& insts = rec["instances"];
      for (std::size_t i = 0; i < insts.size(); ++i) {
        const auto& inst = insts[i];
        const auto prefix = "instances[" + std::to_string(i) + "].";
        if (!inst.is_object()) fail(r, prefix, "expected an object");
        if (!inst.contains("polygon")) fail(r, prefix + "polygon", "missing");
        TextInstance ti;
        ti.polygon = parse_polygon(inst["polygon"], r, prefix + "polygon");
        if (!inst.contains("text") || !inst["text"].is_string()) fail(r, prefix + "text", "missing or not a string");
        ti.text = inst["text"].get<std::string>();
        if (inst.contains("care")) {
          if (!inst["care"].is_boolean()) fail(r, prefix + "care", "expected a boolean");
          ti.care = inst["care"].get<bool>();
        }
        out.instances.push_back(std::move(ti));
      }
    }
    ds.records.push_back(std::move(out));
  }
  return ds;
}

Dataset load_dataset(const std::filesystem::path& path) {
  const auto resolved = resolve_data_path(path);
  std::ifstream in(resolved);
  if (!in) throw DataError("dataset: cannot open " + resolved.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw DataError("dataset: " + resolved.string() + " is not valid JSON: " + e.what());
  }
  return parse_dataset(j, resolved.parent_path());
}

json dataset_to_json(const Dataset& ds) {
  json records = json::array();
  for (const auto& rec : ds.records) {
    json insts = json::array();
    for (const auto& inst : rec.instances) {
      insts.push_back({{"polygon", inst.polygon.flat()}, {"text", inst.text}, {"care", inst.care}});
    }
    records.push_back({{"image", rec.image}, {"instances", insts}});
  }
  return {{"records", records}};
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("dataset: cannot write " + path.string());
  out << dataset_to_json(ds).dump(1) << "\n";
}

json predictions_to_json(const std::vector<ImagePredictions>& preds) {
  json images = json::array();
  for (const auto& p : preds) {
    json results = json::array();
    for (const auto& r : p.results) {
      json entry = {{"polygon", r.polygon.flat()}, {"text", r.text}, {"confidence", r.confidence}};
      if (!r.attention.empty()) entry["attention"] = r.attention;
      results.push_back(std::move(entry));
    }
    json entry = {{"image", p.image}, {"results", results}};
    if (!p.error.empty()) entry["error"] = p.error;
    images.push_back(std::move(entry));
  }
  return {{"images", images}};
}

std::vector<ImagePredictions> predictions_from_json(const json& j) {
  if (!j.is_object() || !j.contains("images") || !j["images"].is_array()) {
    throw DataError("predictions: top-level object must contain an 'images' array");
  }
  std::vector<ImagePredictions> out;
  for (const auto& img : j["images"]) {
    ImagePredictions p;
    p.image = img.at("image").get<std::string>();
    if (img.contains("error")) p.error = img["error"].get<std::string>();
    for (const auto& r : img.value("results", json::array())) {
      SpottingResult sr;
      sr.polygon = geometry::Polygon::from_flat(r.at("polygon").get<std::vector<double>>());
      sr.text = r.value("text", "");
      sr.confidence = r.value("confidence", 0.0);
      if (r.contains("attention")) sr.attention = r["attention"].get<std::vector<std::vector<float>>>();
      p.results.push_back(std::move(sr));
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::filesystem::path resolve_data_path(const std::filesystem::path& p) {
  if (p.is_absolute()) return p;
  if (const char* root = std::getenv("SPOTTER_DATA_ROOT"); root && *root) return std::filesystem::path(root) / p;
  return p;
}

}  // namespace spotter::data
