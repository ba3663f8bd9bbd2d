#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tsacl/checkpoint.hpp"
#include "tsacl/dataset.hpp"
#include "tsacl/encoder.hpp"
#include "tsacl/ensemble.hpp"
#include "tsacl/metrics.hpp"

namespace tsacl::experiment {

inline constexpr int kReportFormatVersion = 1;

struct DatasetSource {
  std::optional<data::SyntheticSpec> synthetic;
  std::filesystem::path path;  // used when synthetic is empty
  bool precomputed = false;    // read <split>_feat.bin instead of raw series
};

struct ExperimentConfig {
  DatasetSource dataset;
  std::size_t classes_per_task = 2;
  /// Leading tasks of every stream reserved for gamma selection. With 0, gamma
  /// is selected on a held-out fraction of each experiment task's training rows.
  std::size_t validation_tasks = 1;
  double validation_holdout = 0.1;
  std::vector<double> gamma_grid = {1.0, 10.0, 100.0};
  std::size_t expansion_dim = 512;
  std::optional<double> expansion_scale;  // default 1/sqrt(d_stack)
  bool standardize_features = false;
  std::optional<encoder::EncoderSpec> encoder;  // default: desk_default(channels)
  encoder::Normalization normalization = encoder::Normalization::kNone;
  std::size_t ensemble_size = 1;
  std::vector<std::uint64_t> run_seeds = {1};
  std::size_t chunk_size = 256;
  bool verify_against_oracle = false;
  std::filesystem::path output_dir = "out";

  void validate() const;
  /// Strict parse: unknown keys are rejected.
  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

ExperimentConfig load_config(const std::filesystem::path& path);

/// Frozen features and labels for both splits.
struct PreparedData {
  encoder::FeatureStack train;
  encoder::FeatureStack test;
  std::vector<std::uint32_t> train_labels;
  std::vector<std::uint32_t> test_labels;
  std::size_t num_classes = 0;
  std::optional<encoder::EncoderSpec> encoder;
};

PreparedData prepare_data(const ExperimentConfig& config);

/// Rows of one task as seen by the pipeline: training rows and evaluation rows.
struct StreamTask {
  std::vector<std::uint32_t> classes;
  std::vector<std::size_t> train_rows;  // into PreparedData::train
  std::vector<std::size_t> eval_rows;   // into PreparedData::test, or train for holdout streams
  bool eval_on_train = false;
};

struct StreamResult {
  metrics::AccuracyMatrix accuracy;
  std::vector<double> task_seconds;
  std::vector<ensemble::Member> members;
};

/// Trains the ensemble across `tasks` in order (fit on the first, recursive
/// update on the rest), one pass per task, and records A_{t,i} after each task.
StreamResult run_stream(const PreparedData& data, std::span<const StreamTask> tasks, double gamma,
                        std::span<const std::uint64_t> rhl_seeds, const ExperimentConfig& config);

std::vector<std::uint64_t> member_seeds(std::uint64_t run_seed, std::size_t ensemble_size);

struct OracleCheck {
  std::vector<double> weight_relative_errors;  // per member, against the joint solve
  double max_weight_relative_error = 0.0;
  double prediction_agreement = 0.0;       // over all experiment-stream test rows
  std::vector<double> final_row;           // oracle-model A_{T,i}
  double final_average_accuracy = 0.0;
};

struct RunRecord {
  std::uint64_t seed = 0;
  double selected_gamma = 0.0;
  std::vector<std::pair<double, double>> validation_scores;  // (gamma, validation A_T)
  std::vector<std::uint32_t> class_order;
  metrics::AccuracyMatrix accuracy;
  std::vector<double> average_accuracy;  // A_t for t = 1..T
  double final_average_accuracy = 0.0;
  std::optional<double> final_forgetting;  // absent when T == 1
  metrics::VarianceRatio vr_features;
  metrics::VarianceRatio vr_embeddings;
  std::vector<double> task_seconds;
  std::optional<OracleCheck> oracle;
  checkpoint::Checkpoint checkpoint;  // persisted separately, not part of report.json
};

struct Summary {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for a single run
};

struct RunReport {
  nlohmann::json config;
  std::vector<RunRecord> runs;

  Summary accuracy_summary() const;
  Summary forgetting_summary() const;
  nlohmann::json to_json() const;
};

RunReport run_experiment(const ExperimentConfig& config);
RunReport run_experiment(const ExperimentConfig& config, const PreparedData& data);

/// Writes report.json and summary.csv into `dir`. Reports without runs are rejected
/// before anything is written.
void emit_report(const RunReport& report, const std::filesystem::path& dir);

/// Writes <dir>/checkpoints/<seed>.ckpt for every run.
void save_checkpoints(const RunReport& report, const std::filesystem::path& dir);

struct OracleComparison {
  std::uint64_t seed = 0;
  std::vector<double> weight_relative_errors;  // per member
  double prediction_agreement = 0.0;
};

/// Rebuilds the experiment stream of a saved run from the retained data and
/// compares every member against the joint ridge solve.
OracleComparison compare_with_oracle(const ExperimentConfig& config, const PreparedData& data,
                                     const checkpoint::Checkpoint& checkpoint);

}  // namespace tsacl::experiment
