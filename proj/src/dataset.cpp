#include "tsacl/dataset.hpp"

#include <cmath>
#include <string>

#include <json.hpp>

#include "binary_io.hpp"
#include "tsacl/error.hpp"

namespace tsacl::data {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view split_name(Split split) {
  return split == Split::kTrain ? "train" : "test";
}

TimeSeriesDataset::TimeSeriesDataset(std::vector<float> samples,
                                     std::vector<std::uint32_t> labels,
                                     std::size_t channels, std::size_t length,
                                     std::size_t num_classes, Split split)
    : samples_(std::move(samples)),
      labels_(std::move(labels)),
      channels_(channels),
      length_(length),
      num_classes_(num_classes),
      split_(split) {
  require(channels_ > 0 && length_ > 0, ErrorCode::kInvalidArgument,
          "channels and length must be positive");
  require(num_classes_ > 0, ErrorCode::kInvalidArgument, "num_classes must be positive");
  require(samples_.size() == labels_.size() * channels_ * length_, ErrorCode::kSizeMismatch,
          "samples: expected " + std::to_string(labels_.size() * channels_ * length_) +
              " values, got " + std::to_string(samples_.size()));
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] >= num_classes_) {
      fail(ErrorCode::kLabelOutOfRange, "labels[" + std::to_string(i) + "] = " +
                                            std::to_string(labels_[i]) + " with num_classes " +
                                            std::to_string(num_classes_));
    }
  }
}

std::span<const float> TimeSeriesDataset::sample(std::size_t i) const {
  const std::size_t stride = channels_ * length_;
  return std::span<const float>(samples_).subspan(i * stride, stride);
}

TimeSeriesDataset TimeSeriesDataset::select(std::span<const std::size_t> indices) const {
  const std::size_t stride = channels_ * length_;
  std::vector<float> samples;
  samples.reserve(indices.size() * stride);
  std::vector<std::uint32_t> labels;
  labels.reserve(indices.size());
  for (std::size_t i : indices) {
    require(i < size(), ErrorCode::kInvalidArgument, "select: index out of range");
    auto s = sample(i);
    samples.insert(samples.end(), s.begin(), s.end());
    labels.push_back(labels_[i]);
  }
  return TimeSeriesDataset(std::move(samples), std::move(labels), channels_, length_,
                           num_classes_, split_);
}

namespace {

std::size_t manifest_size(const json& manifest, const char* key) {
  if (!manifest.contains(key)) fail(ErrorCode::kMissingField, std::string("manifest.") + key);
  const auto& v = manifest.at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
    fail(ErrorCode::kInvalidArgument, std::string("manifest.") + key + " must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

}  // namespace

TimeSeriesDataset load_dataset(const fs::path& root, Split split) {
  const fs::path manifest_path = root / "manifest.json";
  if (!fs::exists(manifest_path)) fail(ErrorCode::kMissingFile, manifest_path.string());
  const auto manifest_bytes = io::read_bytes(manifest_path);
  json manifest;
  try {
    manifest = json::parse(manifest_bytes.begin(), manifest_bytes.end());
  } catch (const json::exception& e) {
    fail(ErrorCode::kInvalidArgument, "manifest.json: " + std::string(e.what()));
  }
  if (manifest.contains("dtype") && manifest.at("dtype") != "f32le") {
    fail(ErrorCode::kInvalidArgument, "manifest.dtype must be \"f32le\"");
  }

  const std::size_t channels = manifest_size(manifest, "channels");
  const std::size_t length = manifest_size(manifest, "length");
  const std::size_t num_classes = manifest_size(manifest, "num_classes");
  const std::string name(split_name(split));
  const std::size_t n = manifest_size(manifest, (name + "_n").c_str());

  const fs::path tensor_path = root / (name + ".bin");
  const fs::path label_path = root / (name + "_labels.bin");
  if (!fs::exists(tensor_path)) fail(ErrorCode::kMissingFile, tensor_path.string());
  if (!fs::exists(label_path)) fail(ErrorCode::kMissingFile, label_path.string());

  const auto tensor_bytes = io::read_bytes(tensor_path);
  const std::size_t expected = n * channels * length * sizeof(float);
  require(tensor_bytes.size() == expected, ErrorCode::kSizeMismatch,
          tensor_path.filename().string() + ": expected " + std::to_string(expected) +
              " bytes (" + name + "_n*channels*length*4), got " +
              std::to_string(tensor_bytes.size()));
  const auto label_bytes = io::read_bytes(label_path);
  require(label_bytes.size() == n * sizeof(std::uint32_t), ErrorCode::kSizeMismatch,
          label_path.filename().string() + ": expected " +
              std::to_string(n * sizeof(std::uint32_t)) + " bytes, got " +
              std::to_string(label_bytes.size()));

  TimeSeriesDataset dataset(io::decode_array<float>(tensor_bytes),
                            io::decode_array<std::uint32_t>(label_bytes), channels, length,
                            num_classes, split);
  if (split == Split::kTrain) {
    std::vector<bool> seen(num_classes, false);
    for (auto label : dataset.labels()) seen[label] = true;
    for (std::size_t c = 0; c < num_classes; ++c) {
      require(seen[c], ErrorCode::kLabelOutOfRange,
              "train split has no sample of class " + std::to_string(c));
    }
  }
  return dataset;
}

void write_dataset(const fs::path& root, const DatasetPair& pair) {
  const auto& train = pair.train;
  const auto& test = pair.test;
  require(train.channels() == test.channels() && train.length() == test.length() &&
              train.num_classes() == test.num_classes(),
          ErrorCode::kDimensionMismatch, "train/test shapes differ");
  fs::create_directories(root);
  json manifest = {
      {"channels", train.channels()},     {"length", train.length()},
      {"num_classes", train.num_classes()}, {"train_n", train.size()},
      {"test_n", test.size()},            {"dtype", "f32le"},
  };
  const std::string text = manifest.dump(2) + "\n";
  io::write_bytes(root / "manifest.json", text);
  const auto write_split = [&](const TimeSeriesDataset& d, const std::string& name) {
    io::write_bytes(root / (name + ".bin"), io::as_bytes(d.samples()));
    io::write_bytes(root / (name + "_labels.bin"), io::as_bytes(d.labels()));
  };
  write_split(train, "train");
  write_split(test, "test");
}

}  // namespace tsacl::data
