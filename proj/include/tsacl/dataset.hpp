#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace tsacl::data {

enum class Split { kTrain, kTest };

std::string_view split_name(Split split);

/// Stacked time series [N][C][L] (sample-major, row-major) with global class ids.
class TimeSeriesDataset {
 public:
  TimeSeriesDataset() = default;

  /// Validates shapes and label range; throws tsacl::Error on violation.
  TimeSeriesDataset(std::vector<float> samples, std::vector<std::uint32_t> labels,
                    std::size_t channels, std::size_t length, std::size_t num_classes,
                    Split split);

  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t channels() const noexcept { return channels_; }
  std::size_t length() const noexcept { return length_; }
  std::size_t num_classes() const noexcept { return num_classes_; }
  Split split() const noexcept { return split_; }

  /// C*L contiguous values of sample i, channel-major.
  std::span<const float> sample(std::size_t i) const;
  std::span<const float> samples() const noexcept { return samples_; }
  std::span<const std::uint32_t> labels() const noexcept { return labels_; }

  /// Sub-dataset holding the given rows, in the given order.
  TimeSeriesDataset select(std::span<const std::size_t> indices) const;

 private:
  std::vector<float> samples_;
  std::vector<std::uint32_t> labels_;
  std::size_t channels_ = 0;
  std::size_t length_ = 0;
  std::size_t num_classes_ = 0;
  Split split_ = Split::kTrain;
};

struct DatasetPair {
  TimeSeriesDataset train;
  TimeSeriesDataset test;
};

/// Reads manifest.json plus <split>.bin / <split>_labels.bin from `root`.
TimeSeriesDataset load_dataset(const std::filesystem::path& root, Split split);

/// Writes both splits and the manifest. Output is byte-identical to what
/// load_dataset consumed when given a loaded pair.
void write_dataset(const std::filesystem::path& root, const DatasetPair& pair);

struct SyntheticSpec {
  std::size_t num_classes = 8;
  std::size_t subjects_per_class = 4;
  std::size_t samples_per_subject = 50;       // train split
  std::size_t test_samples_per_subject = 25;  // test split
  std::size_t channels = 3;
  std::size_t length = 64;
  std::uint64_t template_seed = 0;
  double subject_scale = 1.0;
  double noise_scale = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Each sample is class template + per-(class, subject) offset + i.i.d. noise.
/// Deterministic in (template_seed, seed).
DatasetPair generate_synthetic(const SyntheticSpec& spec);

/// Subject id of every generated sample, in generation order (train then test
/// are generated identically, so the same layout applies to both splits).
std::vector<std::size_t> synthetic_subject_ids(const SyntheticSpec& spec, Split split);

struct TaskSpec {
  std::size_t task_index = 0;  // 0-based
  std::vector<std::uint32_t> classes;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
};

struct TaskStream {
  std::vector<TaskSpec> tasks;
  std::vector<std::uint32_t> class_order;
};

/// Shuffles class ids with `shuffle_seed`, then cuts the order into tasks of
/// `classes_per_task`. Indivisible class counts are rejected.
TaskStream build_task_stream(const DatasetPair& pair, std::size_t classes_per_task,
                             std::uint64_t shuffle_seed);
TaskStream build_task_stream(std::span<const std::uint32_t> train_labels,
                             std::span<const std::uint32_t> test_labels, std::size_t num_classes,
                             std::size_t classes_per_task, std::uint64_t shuffle_seed);

}  // namespace tsacl::data
