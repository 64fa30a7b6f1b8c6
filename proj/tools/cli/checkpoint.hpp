#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "ttk/model.hpp"
#include "ttk/train.hpp"

namespace ttk::cli {

// Binary layout (all integers little-endian):
//   "TTKCKPT\0"                    8-byte magic
//   u32  format_version
//   u64  config length, UTF-8 JSON ModelConfig
//   u64  metrics length, UTF-8 JSON array (may be 0)
//   u64  tensor count
//   per tensor: u32 name length, name, u32 rank, u64 dims[rank],
//               f64 data[prod(dims)] (IEEE-754 little-endian)
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  DenseTensor tensor;
};

struct Checkpoint {
  std::uint32_t format_version = kCheckpointVersion;
  ModelConfig config;
  std::vector<NamedTensor> tensors;  // model parameters then buffers, layer order
  std::vector<EpochMetrics> metrics;
};

nlohmann::json config_to_json(const ModelConfig& cfg);
ModelConfig config_from_json(const nlohmann::json& j);

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
// Throws FormatError on any structural problem.
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

Checkpoint checkpoint_from_model(Model& model, std::vector<EpochMetrics> metrics = {});
// Builds the configured architecture and fills every tensor by name; a
// missing, duplicated, extra or mis-shaped tensor is a FormatError.
Model model_from_checkpoint(const Checkpoint& ckpt);

void write_metrics_csv(const std::filesystem::path& path, std::span<const EpochMetrics> metrics);

}  // namespace ttk::cli
