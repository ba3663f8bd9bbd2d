#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "tsacl/dataset.hpp"

namespace tsacl::encoder {

using FeatureMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Normalization {
  kNone,
  kPerSample,   // standardize over all C*L values of a sample
  kPerChannel,  // standardize each channel of a sample over time
};

std::string_view normalization_name(Normalization n);
Normalization parse_normalization(std::string_view name);

struct ConvBlock {
  std::size_t out_channels = 0;
  std::size_t kernel_size = 1;  // odd, "same" padding
  std::size_t pool = 1;         // max-pool factor
};

struct EncoderSpec {
  std::size_t in_channels = 1;
  std::vector<ConvBlock> blocks;
  std::uint64_t seed = 0;
  std::vector<std::size_t> include_layers;  // 0-based block indices fused into the feature

  /// Four blocks (32, 64, 128, 256), kernels (7, 5, 3, 3), pool 2, all layers fused.
  static EncoderSpec desk_default(std::size_t in_channels, std::uint64_t seed = 0);

  void validate() const;
  std::size_t feature_dim() const;
};

enum class Provenance { kRandomEncoder, kPrecomputed };

struct FeatureStack {
  FeatureMatrix matrix;  // [N x d_stack]
  Provenance provenance = Provenance::kRandomEncoder;
  std::uint64_t seed = 0;  // encoder seed when provenance is kRandomEncoder

  std::size_t rows() const { return static_cast<std::size_t>(matrix.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(matrix.cols()); }
  FeatureStack select(std::span<const std::size_t> indices) const;
};

/// Frozen bias-free convolutional encoder: conv -> ReLU -> max-pool per block,
/// then a global time average of every included block's output.
class RandomEncoder {
 public:
  explicit RandomEncoder(EncoderSpec spec);

  const EncoderSpec& spec() const noexcept { return spec_; }
  /// Block k weights as [(in_channels*kernel) x out_channels], tap-major within a channel.
  const FeatureMatrix& weights(std::size_t block) const { return weights_.at(block); }

  FeatureStack encode(const data::TimeSeriesDataset& batch, Normalization normalization) const;

  /// One sample, C*L channel-major values; writes d_stack floats to `out`.
  void encode_sample(std::span<const float> sample, std::size_t length,
                     Normalization normalization, std::span<float> out) const;

 private:
  EncoderSpec spec_;
  std::vector<FeatureMatrix> weights_;
  std::vector<bool> included_;
  std::size_t last_needed_ = 0;
};

RandomEncoder build_random_encoder(const EncoderSpec& spec);

/// In-place standardization of one C*L sample.
void normalize_sample(std::span<float> sample, std::size_t channels, Normalization normalization);

/// <root>/<split>_feat.bin, [N][feature_dim] f32 little-endian; shape from manifest.json.
FeatureStack load_precomputed_features(const std::filesystem::path& root, data::Split split);

/// <root>/<split>_labels.bin validated against manifest num_classes.
std::vector<std::uint32_t> load_labels(const std::filesystem::path& root, data::Split split);

/// Writes both feature splits and merges feature_dim/train_n/test_n into the manifest.
void write_precomputed_features(const std::filesystem::path& root, const FeatureStack& train,
                                const FeatureStack& test);

}  // namespace tsacl::encoder
