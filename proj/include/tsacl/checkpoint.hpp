#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tsacl/analytic_classifier.hpp"
#include "tsacl/encoder.hpp"

namespace tsacl::checkpoint {

// Layout, all little-endian:
//   "TSACLCK1" | u32 version | u64 header length | header JSON |
//   f64 matrices, row-major, in header "matrices" order | u32 CRC-32 of all prior bytes
inline constexpr char kMagic[8] = {'T', 'S', 'A', 'C', 'L', 'C', 'K', '1'};
inline constexpr std::uint32_t kFormatVersion = 1;

/// Everything needed to rebuild the feature pipeline. Seeds and shapes only,
/// never data.
struct PipelineMetadata {
  std::uint64_t run_seed = 0;
  std::optional<encoder::EncoderSpec> encoder;  // empty for precomputed features
  encoder::Normalization normalization = encoder::Normalization::kNone;
  std::size_t feature_dim = 0;
  std::size_t expansion_dim = 0;
  double expansion_scale = 0.0;
  bool standardize_features = false;
  std::vector<std::uint64_t> rhl_seeds;  // one per ensemble member
  std::vector<std::uint32_t> class_order;
};

struct Checkpoint {
  PipelineMetadata metadata;
  std::vector<analytic::AnalyticClassifier> members;  // parallel to metadata.rhl_seeds
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Validates framing (magic, version, length, CRC) and returns the header JSON
/// without materializing the matrices.
nlohmann::json read_header(const std::filesystem::path& path);

}  // namespace tsacl::checkpoint
