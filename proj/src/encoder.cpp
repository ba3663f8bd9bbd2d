#include "tsacl/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include <json.hpp>

#include "binary_io.hpp"
#include "tsacl/error.hpp"

namespace tsacl::encoder {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view normalization_name(Normalization n) {
  switch (n) {
    case Normalization::kNone: return "none";
    case Normalization::kPerSample: return "per_sample";
    case Normalization::kPerChannel: return "per_channel";
  }
  return "none";
}

Normalization parse_normalization(std::string_view name) {
  if (name == "none") return Normalization::kNone;
  if (name == "per_sample") return Normalization::kPerSample;
  if (name == "per_channel") return Normalization::kPerChannel;
  fail(ErrorCode::kInvalidArgument, "unknown normalization \"" + std::string(name) + "\"");
}

EncoderSpec EncoderSpec::desk_default(std::size_t in_channels, std::uint64_t seed) {
  EncoderSpec spec;
  spec.in_channels = in_channels;
  spec.blocks = {{32, 7, 2}, {64, 5, 2}, {128, 3, 2}, {256, 3, 2}};
  spec.seed = seed;
  spec.include_layers = {0, 1, 2, 3};
  return spec;
}

void EncoderSpec::validate() const {
  require(in_channels > 0, ErrorCode::kInvalidArgument, "encoder: in_channels must be positive");
  require(!blocks.empty(), ErrorCode::kInvalidArgument, "encoder: at least one block required");
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const auto& b = blocks[k];
    const std::string where = "encoder.blocks[" + std::to_string(k) + "]";
    require(b.out_channels > 0, ErrorCode::kInvalidArgument, where + ".out_channels must be positive");
    require(b.kernel_size >= 1 && b.kernel_size % 2 == 1, ErrorCode::kInvalidArgument,
            where + ".kernel_size must be odd, got " + std::to_string(b.kernel_size));
    require(b.pool >= 1, ErrorCode::kInvalidArgument, where + ".pool must be >= 1");
  }
  require(!include_layers.empty(), ErrorCode::kInvalidArgument,
          "encoder: include_layers must be non-empty");
  for (auto k : include_layers) {
    require(k < blocks.size(), ErrorCode::kInvalidArgument,
            "encoder: include_layers entry " + std::to_string(k) + " out of range");
  }
}

std::size_t EncoderSpec::feature_dim() const {
  std::vector<bool> used(blocks.size(), false);
  for (auto k : include_layers) used.at(k) = true;
  std::size_t d = 0;
  for (std::size_t k = 0; k < blocks.size(); ++k)
    if (used[k]) d += blocks[k].out_channels;
  return d;
}

FeatureStack FeatureStack::select(std::span<const std::size_t> indices) const {
  FeatureStack out;
  out.provenance = provenance;
  out.seed = seed;
  out.matrix.resize(static_cast<Eigen::Index>(indices.size()), matrix.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    require(indices[i] < rows(), ErrorCode::kInvalidArgument, "select: index out of range");
    out.matrix.row(static_cast<Eigen::Index>(i)) = matrix.row(static_cast<Eigen::Index>(indices[i]));
  }
  return out;
}

RandomEncoder::RandomEncoder(EncoderSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  std::mt19937_64 rng(spec_.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::size_t in = spec_.in_channels;
  for (const auto& b : spec_.blocks) {
    const std::size_t fan_in = in * b.kernel_size;
    const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
    FeatureMatrix w(static_cast<Eigen::Index>(fan_in), static_cast<Eigen::Index>(b.out_channels));
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = static_cast<float>(scale * gauss(rng));
    weights_.push_back(std::move(w));
    in = b.out_channels;
  }
  included_.assign(spec_.blocks.size(), false);
  for (auto k : spec_.include_layers) {
    included_[k] = true;
    last_needed_ = std::max(last_needed_, k);
  }
}

RandomEncoder build_random_encoder(const EncoderSpec& spec) { return RandomEncoder(spec); }

void normalize_sample(std::span<float> sample, std::size_t channels, Normalization normalization) {
  if (normalization == Normalization::kNone) return;
  const auto standardize = [](std::span<float> v) {
    double mean = 0.0;
    for (float x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (float x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(v.size());
    const double sd = std::sqrt(var);
    const double inv = sd > 1e-12 ? 1.0 / sd : 1.0;
    for (float& x : v) x = static_cast<float>((x - mean) * inv);
  };
  if (normalization == Normalization::kPerSample) {
    standardize(sample);
  } else {
    const std::size_t length = sample.size() / channels;
    for (std::size_t c = 0; c < channels; ++c) standardize(sample.subspan(c * length, length));
  }
}

void RandomEncoder::encode_sample(std::span<const float> sample, std::size_t length,
                                  Normalization normalization, std::span<float> out) const {
  const std::size_t channels = spec_.in_channels;
  require(sample.size() == channels * length, ErrorCode::kDimensionMismatch,
          "encode: sample has " + std::to_string(sample.size()) + " values, expected " +
              std::to_string(channels) + "x" + std::to_string(length));
  require(out.size() == spec_.feature_dim(), ErrorCode::kDimensionMismatch,
          "encode: output span has wrong width");
  for (float v : sample)
    require(std::isfinite(v), ErrorCode::kNonFinite, "encode: non-finite input value");

  std::vector<float> normalized(sample.begin(), sample.end());
  normalize_sample(normalized, channels, normalization);

  // activations: [time x channels]
  FeatureMatrix act = Eigen::Map<const FeatureMatrix>(normalized.data(),
                                                      static_cast<Eigen::Index>(channels),
                                                      static_cast<Eigen::Index>(length))
                          .transpose();
  std::size_t offset = 0;
  for (std::size_t k = 0; k <= last_needed_; ++k) {
    const auto& b = spec_.blocks[k];
    const Eigen::Index len = act.rows();
    const Eigen::Index cin = act.cols();
    const auto kernel = static_cast<Eigen::Index>(b.kernel_size);
    const Eigen::Index half = kernel / 2;

    FeatureMatrix cols = FeatureMatrix::Zero(len, cin * kernel);
    for (Eigen::Index t = 0; t < len; ++t) {
      for (Eigen::Index tap = 0; tap < kernel; ++tap) {
        const Eigen::Index src = t + tap - half;
        if (src < 0 || src >= len) continue;
        for (Eigen::Index c = 0; c < cin; ++c) cols(t, c * kernel + tap) = act(src, c);
      }
    }
    FeatureMatrix conv = (cols * weights_[k]).cwiseMax(0.0f);

    const auto pool = static_cast<Eigen::Index>(b.pool);
    const Eigen::Index pooled_len = len / pool;
    require(pooled_len >= 1, ErrorCode::kInvalidArgument,
            "encode: series too short for block " + std::to_string(k) + " pooling");
    FeatureMatrix pooled(pooled_len, conv.cols());
    for (Eigen::Index t = 0; t < pooled_len; ++t)
      pooled.row(t) = conv.middleRows(t * pool, pool).colwise().maxCoeff();
    act = std::move(pooled);

    if (included_[k]) {
      // Reduce into owned storage: Eigen's summation order depends on destination alignment.
      const Eigen::RowVectorXf mean = act.colwise().mean();
      std::copy(mean.data(), mean.data() + mean.size(), out.begin() + static_cast<std::ptrdiff_t>(offset));
      offset += static_cast<std::size_t>(act.cols());
    }
  }
}

FeatureStack RandomEncoder::encode(const data::TimeSeriesDataset& batch,
                                   Normalization normalization) const {
  require(batch.channels() == spec_.in_channels, ErrorCode::kDimensionMismatch,
          "encode: batch has " + std::to_string(batch.channels()) +
              " channels, encoder expects " + std::to_string(spec_.in_channels));
  FeatureStack result;
  result.provenance = Provenance::kRandomEncoder;
  result.seed = spec_.seed;
  const std::size_t dim = spec_.feature_dim();
  result.matrix.resize(static_cast<Eigen::Index>(batch.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < batch.size(); ++i) {
    encode_sample(batch.sample(i), batch.length(), normalization,
                  std::span<float>(result.matrix.data() + i * dim, dim));
  }
  return result;
}

namespace {

json read_manifest(const fs::path& root) {
  const fs::path path = root / "manifest.json";
  if (!fs::exists(path)) fail(ErrorCode::kMissingFile, path.string());
  const auto bytes = io::read_bytes(path);
  try {
    return json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    fail(ErrorCode::kInvalidArgument, "manifest.json: " + std::string(e.what()));
  }
}

std::size_t field(const json& manifest, const std::string& key) {
  if (!manifest.contains(key) || !manifest.at(key).is_number_integer() ||
      manifest.at(key).get<long long>() < 0) {
    fail(ErrorCode::kMissingField, "manifest." + key);
  }
  return manifest.at(key).get<std::size_t>();
}

}  // namespace

FeatureStack load_precomputed_features(const fs::path& root, data::Split split) {
  const json manifest = read_manifest(root);
  const std::string name(data::split_name(split));
  const std::size_t n = field(manifest, name + "_n");
  const std::size_t dim = field(manifest, "feature_dim");
  require(dim > 0, ErrorCode::kInvalidArgument, "manifest.feature_dim must be positive");
  const fs::path path = root / (name + "_feat.bin");
  if (!fs::exists(path)) fail(ErrorCode::kMissingFile, path.string());
  const auto bytes = io::read_bytes(path);
  require(bytes.size() == n * dim * sizeof(float), ErrorCode::kSizeMismatch,
          path.filename().string() + ": expected " + std::to_string(n * dim * sizeof(float)) +
              " bytes, got " + std::to_string(bytes.size()));
  FeatureStack out;
  out.provenance = Provenance::kPrecomputed;
  out.matrix.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  std::memcpy(out.matrix.data(), bytes.data(), bytes.size());
  for (Eigen::Index i = 0; i < out.matrix.size(); ++i) {
    if (!std::isfinite(out.matrix.data()[i])) {
      fail(ErrorCode::kNonFinite, path.filename().string() + ": non-finite value at row " +
                                      std::to_string(i / static_cast<Eigen::Index>(dim)));
    }
  }
  return out;
}

std::vector<std::uint32_t> load_labels(const fs::path& root, data::Split split) {
  const json manifest = read_manifest(root);
  const std::string name(data::split_name(split));
  const std::size_t n = field(manifest, name + "_n");
  const std::size_t num_classes = field(manifest, "num_classes");
  const fs::path path = root / (name + "_labels.bin");
  if (!fs::exists(path)) fail(ErrorCode::kMissingFile, path.string());
  const auto bytes = io::read_bytes(path);
  require(bytes.size() == n * sizeof(std::uint32_t), ErrorCode::kSizeMismatch,
          path.filename().string() + ": expected " + std::to_string(n * 4) + " bytes, got " +
              std::to_string(bytes.size()));
  auto labels = io::decode_array<std::uint32_t>(bytes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    require(labels[i] < num_classes, ErrorCode::kLabelOutOfRange,
            "labels[" + std::to_string(i) + "] = " + std::to_string(labels[i]));
  }
  return labels;
}

void write_precomputed_features(const fs::path& root, const FeatureStack& train,
                                const FeatureStack& test) {
  require(train.dim() == test.dim(), ErrorCode::kDimensionMismatch,
          "train/test feature widths differ");
  fs::create_directories(root);
  json manifest = fs::exists(root / "manifest.json") ? read_manifest(root) : json::object();
  manifest["feature_dim"] = train.dim();
  manifest["train_n"] = train.rows();
  manifest["test_n"] = test.rows();
  manifest["dtype"] = "f32le";
  io::write_bytes(root / "manifest.json", manifest.dump(2) + "\n");
  const auto write = [&](const FeatureStack& fs, const char* file) {
    io::write_bytes(root / file,
                    io::as_bytes(std::span<const float>(fs.matrix.data(), fs.matrix.size())));
  };
  write(train, "train_feat.bin");
  write(test, "test_feat.bin");
}

}  // namespace tsacl::encoder
