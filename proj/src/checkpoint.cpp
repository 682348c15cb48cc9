#include "spotter/checkpoint.hpp"


#include <cstring>

#include "spotter/errors.hpp"

namespace spotter::checkpoint {

namespace {

torch::Tensor string_tensor(const std::string& s) {
  auto t = torch::empty({int64_t(s.size())}, torch::kUInt8);
  std::memcpy(t.data_ptr<uint8_t>(), s.data(), s.size());
  return t;
}

std::string tensor_string(const torch::Tensor& t) {
  auto c = t.contiguous();
  return {reinterpret_cast<const char*>(c.data_ptr<uint8_t>()), size_t(c.numel())};
}

torch::Tensor read_key(torch::serialize::InputArchive& ar, const std::string& key, const std::filesystem::path& path) {
  torch::Tensor t;
  if (!ar.try_read(key, t)) throw ConfigError("checkpoint " + path.string() + ": missing '" + key + "'");
  return t;
}

}  // namespace

void save(model::Spotter& model, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  torch::serialize::OutputArchive ar;
  model->save(ar);
  ar.write("meta_format_version", torch::tensor(int64_t(kFormatVersion)));
  ar.write("meta_basis_version", torch::tensor(int64_t(mask_codec::kBasisVersion)));
  ar.write("meta_n_pca", torch::tensor(int64_t(model->basis().n_pca())));
  ar.write("meta_config", string_tensor(config::to_json(model->config()).dump()));
  ar.write("meta_charset", string_tensor(model->recognizer->charset().symbols()));
  // Write to a sibling first so a crash never leaves a truncated checkpoint.
  auto tmp = path;
  tmp += ".tmp";
  ar.save_to(tmp.string());
  std::filesystem::rename(tmp, path);
}

model::Spotter load(const std::filesystem::path& path, torch::Device device) {
  if (!std::filesystem::exists(path)) throw DataError("checkpoint not found: " + path.string());
  torch::serialize::InputArchive ar;
  try {
    ar.load_from(path.string());
  } catch (const c10::Error& e) {
    throw DataError("checkpoint " + path.string() + " is unreadable: " + e.what_without_backtrace());
  }
  const auto version = read_key(ar, "meta_format_version", path).item<int64_t>();
  if (version != kFormatVersion) {
    throw ConfigError("checkpoint " + path.string() + " has format version " + std::to_string(version) +
                      ", this build reads version " + std::to_string(kFormatVersion));
  }
  const auto basis_version = read_key(ar, "meta_basis_version", path).item<int64_t>();
  if (basis_version != mask_codec::kBasisVersion) {
    throw ConfigError("checkpoint " + path.string() + " has mask basis version " + std::to_string(basis_version) +
                      ", expected " + std::to_string(mask_codec::kBasisVersion));
  }
  const auto cfg = config::from_json(nlohmann::json::parse(tensor_string(read_key(ar, "meta_config", path))));
  const auto charset = tensor_string(read_key(ar, "meta_charset", path));
  if (charset != cfg.recognizer.alphabet) throw ConfigError("checkpoint " + path.string() + ": charset mismatch");

  mask_codec::PcaBasis basis;
  basis.mean = read_key(ar, "basis_mean", path);
  basis.components = read_key(ar, "basis_components", path);
  basis.explained_variance = read_key(ar, "basis_variance", path);
  const auto n_pca = read_key(ar, "meta_n_pca", path).item<int64_t>();
  if (basis.n_pca() != n_pca || n_pca != cfg.mask.n_pca) {
    throw ConfigError("checkpoint " + path.string() + ": stored basis has " + std::to_string(basis.n_pca()) +
                      " components but the mask head expects " + std::to_string(cfg.mask.n_pca));
  }
  model::Spotter m(cfg, basis);
  try {
    m->load(ar);
  } catch (const c10::Error& e) {
    throw ConfigError("checkpoint " + path.string() + " does not match the model layout: " +
                      e.what_without_backtrace());
  }
  m->to(device);
  return m;
}

}  // namespace spotter::checkpoint
