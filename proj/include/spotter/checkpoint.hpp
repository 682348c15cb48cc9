#pragma once

#include <filesystem>

#include "spotter/model.hpp"

namespace spotter::checkpoint {

inline constexpr int kFormatVersion = 1;

// Parameters, buffers (including the frozen mask basis), run config, charset
// and format/basis versions in one archive.
void save(model::Spotter& model, const std::filesystem::path& path);

// Rebuilds the model from the stored config. Throws ConfigError on a version,
// charset or basis mismatch, DataError when the file cannot be read.
model::Spotter load(const std::filesystem::path& path, torch::Device device = torch::kCPU);

}  // namespace spotter::checkpoint
