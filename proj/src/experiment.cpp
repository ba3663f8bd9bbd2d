#include "tsacl/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <string>

#include "binary_io.hpp"
#include "tsacl/analytic_classifier.hpp"
#include "tsacl/error.hpp"
#include "tsacl/expansion.hpp"
#include "tsacl/json_codec.hpp"

namespace tsacl::experiment {

namespace fs = std::filesystem;
using nlohmann::json;

void ExperimentConfig::validate() const {
  require(classes_per_task >= 1, ErrorCode::kConfig, "classes_per_task must be positive");
  require(!gamma_grid.empty(), ErrorCode::kConfig, "gamma_grid must be non-empty");
  for (double g : gamma_grid)
    require(std::isfinite(g) && g > 0.0, ErrorCode::kConfig, "gamma_grid entries must be > 0");
  require(expansion_dim >= 1, ErrorCode::kConfig, "expansion_dim must be positive");
  if (expansion_scale) {
    require(std::isfinite(*expansion_scale) && *expansion_scale > 0.0, ErrorCode::kConfig,
            "expansion_scale must be positive");
  }
  require(ensemble_size >= 1, ErrorCode::kConfig, "ensemble_size must be >= 1");
  require(!run_seeds.empty(), ErrorCode::kConfig, "run_seeds must be non-empty");
  require(chunk_size >= 1, ErrorCode::kConfig, "chunk_size must be positive");
  require(validation_holdout > 0.0 && validation_holdout < 1.0, ErrorCode::kConfig,
          "validation_holdout must be in (0, 1)");
  if (dataset.synthetic) dataset.synthetic->validate();
  else require(!dataset.path.empty(), ErrorCode::kConfig, "dataset needs a path or a synthetic spec");
  if (encoder) encoder->validate();
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  codec::reject_unknown_keys(
      j,
      {"dataset", "classes_per_task", "validation_tasks", "validation_holdout", "gamma_grid",
       "expansion_dim", "expansion_scale", "standardize_features", "encoder", "normalization",
       "ensemble_size", "run_seeds", "chunk_size", "verify_against_oracle", "output_dir"},
      "config");
  ExperimentConfig cfg;
  try {
    require(j.contains("dataset"), ErrorCode::kConfig, "config.dataset is required");
    const auto& ds = j.at("dataset");
    codec::reject_unknown_keys(ds, {"synthetic", "path", "features"}, "config.dataset");
    if (ds.contains("synthetic")) {
      require(!ds.contains("path"), ErrorCode::kConfig,
              "config.dataset: give either synthetic or path");
      cfg.dataset.synthetic = codec::synthetic_spec_from_json(ds.at("synthetic"));
    } else {
      require(ds.contains("path"), ErrorCode::kConfig, "config.dataset: synthetic or path required");
      cfg.dataset.path = ds.at("path").get<std::string>();
      const std::string features = ds.value("features", std::string("raw"));
      require(features == "raw" || features == "precomputed", ErrorCode::kConfig,
              "config.dataset.features must be \"raw\" or \"precomputed\"");
      cfg.dataset.precomputed = features == "precomputed";
    }
    if (j.contains("classes_per_task")) cfg.classes_per_task = j.at("classes_per_task").get<std::size_t>();
    if (j.contains("validation_tasks")) cfg.validation_tasks = j.at("validation_tasks").get<std::size_t>();
    if (j.contains("validation_holdout")) cfg.validation_holdout = j.at("validation_holdout").get<double>();
    if (j.contains("gamma_grid")) cfg.gamma_grid = j.at("gamma_grid").get<std::vector<double>>();
    if (j.contains("expansion_dim")) cfg.expansion_dim = j.at("expansion_dim").get<std::size_t>();
    if (j.contains("expansion_scale") && !j.at("expansion_scale").is_null())
      cfg.expansion_scale = j.at("expansion_scale").get<double>();
    if (j.contains("standardize_features"))
      cfg.standardize_features = j.at("standardize_features").get<bool>();
    if (j.contains("encoder") && !j.at("encoder").is_null())
      cfg.encoder = codec::encoder_spec_from_json(j.at("encoder"));
    if (j.contains("normalization"))
      cfg.normalization = encoder::parse_normalization(j.at("normalization").get<std::string>());
    if (j.contains("ensemble_size")) cfg.ensemble_size = j.at("ensemble_size").get<std::size_t>();
    if (j.contains("run_seeds")) cfg.run_seeds = j.at("run_seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("chunk_size")) cfg.chunk_size = j.at("chunk_size").get<std::size_t>();
    if (j.contains("verify_against_oracle"))
      cfg.verify_against_oracle = j.at("verify_against_oracle").get<bool>();
    if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
  } catch (const json::exception& e) {
    fail(ErrorCode::kConfig, std::string("config: ") + e.what());
  } catch (const Error& e) {
    fail(ErrorCode::kConfig, e.what());
  }
  cfg.validate();
  return cfg;
}

json ExperimentConfig::to_json() const {
  json ds;
  if (dataset.synthetic) {
    ds["synthetic"] = codec::to_json(*dataset.synthetic);
  } else {
    ds["path"] = dataset.path.string();
    ds["features"] = dataset.precomputed ? "precomputed" : "raw";
  }
  return {{"dataset", ds},
          {"classes_per_task", classes_per_task},
          {"validation_tasks", validation_tasks},
          {"validation_holdout", validation_holdout},
          {"gamma_grid", gamma_grid},
          {"expansion_dim", expansion_dim},
          {"expansion_scale", expansion_scale ? json(*expansion_scale) : json(nullptr)},
          {"standardize_features", standardize_features},
          {"encoder", encoder ? codec::to_json(*encoder) : json(nullptr)},
          {"normalization", encoder::normalization_name(normalization)},
          {"ensemble_size", ensemble_size},
          {"run_seeds", run_seeds},
          {"chunk_size", chunk_size},
          {"verify_against_oracle", verify_against_oracle},
          {"output_dir", output_dir.string()}};
}

ExperimentConfig load_config(const fs::path& path) {
  const auto bytes = io::read_bytes(path);
  json j;
  try {
    j = json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    fail(ErrorCode::kConfig, path.string() + ": " + e.what());
  }
  return ExperimentConfig::from_json(j);
}

PreparedData prepare_data(const ExperimentConfig& config) {
  config.validate();
  PreparedData out;
  if (config.dataset.precomputed) {
    const auto& root = config.dataset.path;
    out.train = encoder::load_precomputed_features(root, data::Split::kTrain);
    out.test = encoder::load_precomputed_features(root, data::Split::kTest);
    out.train_labels = encoder::load_labels(root, data::Split::kTrain);
    out.test_labels = encoder::load_labels(root, data::Split::kTest);
    const auto manifest_bytes = io::read_bytes(root / "manifest.json");
    out.num_classes = json::parse(manifest_bytes.begin(), manifest_bytes.end())
                          .at("num_classes")
                          .get<std::size_t>();
    return out;
  }

  data::DatasetPair pair;
  if (config.dataset.synthetic) {
    pair = data::generate_synthetic(*config.dataset.synthetic);
  } else {
    pair.train = data::load_dataset(config.dataset.path, data::Split::kTrain);
    pair.test = data::load_dataset(config.dataset.path, data::Split::kTest);
  }
  const auto spec = config.encoder.value_or(encoder::EncoderSpec::desk_default(pair.train.channels()));
  const auto enc = encoder::build_random_encoder(spec);
  out.train = enc.encode(pair.train, config.normalization);
  out.test = enc.encode(pair.test, config.normalization);
  out.train_labels.assign(pair.train.labels().begin(), pair.train.labels().end());
  out.test_labels.assign(pair.test.labels().begin(), pair.test.labels().end());
  out.num_classes = pair.train.num_classes();
  out.encoder = spec;
  return out;
}

std::vector<std::uint64_t> member_seeds(std::uint64_t run_seed, std::size_t ensemble_size) {
  std::vector<std::uint64_t> seeds(ensemble_size);
  const std::uint64_t base = run_seed * 1000;
  for (std::size_t i = 0; i < ensemble_size; ++i) seeds[i] = base + i;
  return seeds;
}

namespace {

using Clock = std::chrono::steady_clock;

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& m, std::span<const std::size_t> rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

std::vector<std::uint32_t> labels_of(std::span<const std::uint32_t> labels,
                                     std::span<const std::size_t> rows) {
  std::vector<std::uint32_t> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(labels[r]);
  return out;
}

std::size_t feature_dim(const PreparedData& data) { return data.train.dim(); }

std::vector<StreamTask> to_stream_tasks(const data::TaskStream& stream, std::size_t first,
                                        std::size_t last) {
  std::vector<StreamTask> tasks;
  for (std::size_t t = first; t < last; ++t) {
    const auto& spec = stream.tasks[t];
    tasks.push_back({spec.classes, spec.train_indices, spec.test_indices, false});
  }
  return tasks;
}

// Holds out a seeded fraction of each task's training rows for evaluation.
std::vector<StreamTask> holdout_tasks(std::span<const StreamTask> tasks, double fraction,
                                      std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x5bd1e995ULL);
  std::vector<StreamTask> out;
  for (const auto& task : tasks) {
    std::vector<std::size_t> rows = task.train_rows;
    std::shuffle(rows.begin(), rows.end(), rng);
    const auto held = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(rows.size()))), 1,
        rows.size() - 1);
    StreamTask split;
    split.classes = task.classes;
    split.eval_rows.assign(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(held));
    split.train_rows.assign(rows.begin() + static_cast<std::ptrdiff_t>(held), rows.end());
    std::sort(split.eval_rows.begin(), split.eval_rows.end());
    std::sort(split.train_rows.begin(), split.train_rows.end());
    split.eval_on_train = true;
    out.push_back(std::move(split));
  }
  return out;
}

}  // namespace

StreamResult run_stream(const PreparedData& data, std::span<const StreamTask> tasks, double gamma,
                        std::span<const std::uint64_t> rhl_seeds, const ExperimentConfig& config) {
  require(!tasks.empty(), ErrorCode::kInvalidArgument, "run_stream: no tasks");
  require(!rhl_seeds.empty(), ErrorCode::kInvalidArgument, "run_stream: no members");
  const Eigen::MatrixXd train = data.train.matrix.cast<double>();
  const Eigen::MatrixXd test = data.test.matrix.cast<double>();

  std::vector<expansion::RhlProjection> projections;
  for (auto seed : rhl_seeds) {
    projections.push_back(expansion::init_rhl(feature_dim(data), config.expansion_dim, seed,
                                              config.expansion_scale));
  }

  // Evaluation embeddings per task and member, computed outside the timed region.
  std::vector<std::vector<Eigen::MatrixXd>> eval_embeddings(tasks.size());
  std::vector<std::vector<std::uint32_t>> eval_truth(tasks.size());
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const auto& task = tasks[t];
    const Eigen::MatrixXd rows = rows_of(task.eval_on_train ? train : test, task.eval_rows);
    for (const auto& p : projections)
      eval_embeddings[t].push_back(expansion::expand(rows, p, config.standardize_features));
    eval_truth[t] = labels_of(task.eval_on_train ? data.train_labels : data.test_labels,
                              task.eval_rows);
  }

  StreamResult result;
  std::vector<std::optional<analytic::AnalyticClassifier>> classifiers(projections.size());
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const auto& task = tasks[t];
    require(!task.train_rows.empty(), ErrorCode::kInvalidArgument,
            "run_stream: task " + std::to_string(t + 1) + " has no training rows");
    const Eigen::MatrixXd features = rows_of(train, task.train_rows);
    const auto labels = analytic::LabelBlock::from_labels(
        labels_of(data.train_labels, task.train_rows), task.classes);

    const auto start = Clock::now();
    for (std::size_t m = 0; m < projections.size(); ++m) {
      const Eigen::MatrixXd embedded =
          expansion::expand(features, projections[m], config.standardize_features);
      if (t == 0) {
        classifiers[m] = analytic::fit_initial(embedded, labels, gamma);
      } else {
        classifiers[m]->update(embedded, labels, config.chunk_size);
      }
    }
    result.task_seconds.push_back(std::chrono::duration<double>(Clock::now() - start).count());

    std::vector<double> row;
    for (std::size_t i = 0; i <= t; ++i) {
      std::vector<Eigen::MatrixXd> scores;
      for (std::size_t m = 0; m < projections.size(); ++m)
        scores.push_back(classifiers[m]->predict_scores(eval_embeddings[i][m]));
      const auto predicted =
          ensemble::ensemble_predict_scores(scores, classifiers.front()->registry());
      row.push_back(metrics::task_accuracy(predicted, eval_truth[i]));
    }
    result.accuracy.push_row(std::move(row));
  }
  for (std::size_t m = 0; m < projections.size(); ++m)
    result.members.push_back({std::move(projections[m]), std::move(*classifiers[m])});
  return result;
}

namespace {

struct ExperimentStream {
  data::TaskStream stream;
  std::vector<StreamTask> validation;
  std::vector<StreamTask> experiment;
};

ExperimentStream split_stream(const ExperimentConfig& config, const PreparedData& data,
                              std::uint64_t seed) {
  ExperimentStream s;
  s.stream = data::build_task_stream(data.train_labels, data.test_labels, data.num_classes,
                                     config.classes_per_task, seed);
  const std::size_t num_tasks = s.stream.tasks.size();
  require(config.validation_tasks < num_tasks, ErrorCode::kConfig,
          "validation_tasks (" + std::to_string(config.validation_tasks) +
              ") leaves no experiment tasks out of " + std::to_string(num_tasks));
  s.experiment = to_stream_tasks(s.stream, config.validation_tasks, num_tasks);
  if (config.validation_tasks > 0) {
    s.validation = to_stream_tasks(s.stream, 0, config.validation_tasks);
  } else {
    s.validation = holdout_tasks(s.experiment, config.validation_holdout, seed);
  }
  return s;
}

Eigen::MatrixXd stacked_train(const PreparedData& data, std::span<const StreamTask> tasks,
                              std::vector<std::uint32_t>& labels) {
  std::vector<std::size_t> rows;
  for (const auto& t : tasks) rows.insert(rows.end(), t.train_rows.begin(), t.train_rows.end());
  labels = labels_of(data.train_labels, rows);
  return rows_of(data.train.matrix.cast<double>(), rows);
}

OracleCheck oracle_check(const PreparedData& data, std::span<const StreamTask> tasks,
                         std::span<const ensemble::Member> members, const ExperimentConfig& config) {
  std::vector<analytic::LabelBlock> blocks;
  std::vector<std::size_t> rows;
  for (const auto& t : tasks) {
    blocks.push_back(analytic::LabelBlock::from_labels(labels_of(data.train_labels, t.train_rows),
                                                       t.classes));
    rows.insert(rows.end(), t.train_rows.begin(), t.train_rows.end());
  }
  const Eigen::MatrixXd targets = analytic::block_diagonal_labels(blocks);
  const Eigen::MatrixXd train = rows_of(data.train.matrix.cast<double>(), rows);
  const Eigen::MatrixXd test = data.test.matrix.cast<double>();

  OracleCheck check;
  std::vector<Eigen::MatrixXd> oracle_weights;
  for (const auto& m : members) {
    const Eigen::MatrixXd embedded = expansion::expand(train, m.rhl, config.standardize_features);
    oracle_weights.push_back(analytic::joint_fit_oracle(embedded, targets, m.classifier.gamma()));
    const double err = analytic::relative_frobenius(m.classifier.weights(), oracle_weights.back());
    check.weight_relative_errors.push_back(err);
    check.max_weight_relative_error = std::max(check.max_weight_relative_error, err);
  }
  const auto& registry = members.front().classifier.registry();
  std::size_t agree = 0, total = 0;
  double sum = 0.0;
  for (const auto& task : tasks) {
    const Eigen::MatrixXd rows_test = rows_of(test, task.eval_rows);
    std::vector<Eigen::MatrixXd> model_scores, oracle_scores;
    for (std::size_t i = 0; i < members.size(); ++i) {
      const Eigen::MatrixXd e = expansion::expand(rows_test, members[i].rhl, config.standardize_features);
      model_scores.push_back(members[i].classifier.predict_scores(e));
      oracle_scores.push_back(e * oracle_weights[i]);
    }
    const auto model = ensemble::ensemble_predict_scores(model_scores, registry);
    const auto oracle = ensemble::ensemble_predict_scores(oracle_scores, registry);
    for (std::size_t r = 0; r < model.size(); ++r) agree += model[r] == oracle[r];
    total += model.size();
    const double acc = metrics::task_accuracy(oracle, labels_of(data.test_labels, task.eval_rows));
    check.final_row.push_back(acc);
    sum += acc;
  }
  check.prediction_agreement = static_cast<double>(agree) / static_cast<double>(total);
  check.final_average_accuracy = sum / static_cast<double>(tasks.size());
  return check;
}

}  // namespace

RunReport run_experiment(const ExperimentConfig& config) {
  return run_experiment(config, prepare_data(config));
}

RunReport run_experiment(const ExperimentConfig& config, const PreparedData& data) {
  config.validate();
  RunReport report;
  report.config = config.to_json();
  for (auto seed : config.run_seeds) {
    const ExperimentStream s = split_stream(config, data, seed);
    const auto seeds = member_seeds(seed, config.ensemble_size);

    RunRecord run;
    run.seed = seed;
    run.class_order = s.stream.class_order;
    double best = -1.0;
    for (double gamma : config.gamma_grid) {
      const auto val = run_stream(data, s.validation, gamma, seeds, config);
      const double score = metrics::average_accuracy(val.accuracy, val.accuracy.num_tasks());
      run.validation_scores.emplace_back(gamma, score);
      if (score > best) {
        best = score;
        run.selected_gamma = gamma;
      }
    }

    auto result = run_stream(data, s.experiment, run.selected_gamma, seeds, config);
    const std::size_t T = result.accuracy.num_tasks();
    run.accuracy = result.accuracy;
    for (std::size_t t = 1; t <= T; ++t)
      run.average_accuracy.push_back(metrics::average_accuracy(run.accuracy, t));
    run.final_average_accuracy = run.average_accuracy.back();
    if (T >= 2) run.final_forgetting = metrics::forgetting(run.accuracy, T);
    run.task_seconds = result.task_seconds;

    std::vector<std::uint32_t> labels;
    const Eigen::MatrixXd stacked = stacked_train(data, s.experiment, labels);
    run.vr_features = metrics::variance_ratio(stacked, labels);
    run.vr_embeddings = metrics::variance_ratio(
        expansion::expand(stacked, result.members.front().rhl, config.standardize_features),
        labels);

    if (config.verify_against_oracle)
      run.oracle = oracle_check(data, s.experiment, result.members, config);

    auto& meta = run.checkpoint.metadata;
    meta.run_seed = seed;
    meta.encoder = data.encoder;
    meta.normalization = config.normalization;
    meta.feature_dim = data.train.dim();
    meta.expansion_dim = config.expansion_dim;
    meta.expansion_scale = result.members.front().rhl.scale;
    meta.standardize_features = config.standardize_features;
    meta.rhl_seeds = seeds;
    meta.class_order = s.stream.class_order;
    for (auto& m : result.members) run.checkpoint.members.push_back(std::move(m.classifier));

    report.runs.push_back(std::move(run));
  }
  return report;
}

OracleComparison compare_with_oracle(const ExperimentConfig& config, const PreparedData& data,
                                     const checkpoint::Checkpoint& checkpoint) {
  const auto& meta = checkpoint.metadata;
  const ExperimentStream s = split_stream(config, data, meta.run_seed);
  require(s.stream.class_order == meta.class_order, ErrorCode::kInvalidArgument,
          "oracle: checkpoint class order does not match the configured stream");
  require(meta.feature_dim == data.train.dim(), ErrorCode::kDimensionMismatch,
          "oracle: checkpoint feature_dim differs from the data");

  std::vector<ensemble::Member> members;
  for (std::size_t i = 0; i < checkpoint.members.size(); ++i) {
    members.push_back({expansion::init_rhl(meta.feature_dim, meta.expansion_dim, meta.rhl_seeds[i],
                                           meta.expansion_scale),
                       checkpoint.members[i]});
  }
  ExperimentConfig cfg = config;
  cfg.standardize_features = meta.standardize_features;
  const OracleCheck check = oracle_check(data, s.experiment, members, cfg);

  OracleComparison out;
  out.seed = meta.run_seed;
  out.prediction_agreement = check.prediction_agreement;
  out.weight_relative_errors = check.weight_relative_errors;
  return out;
}

}  // namespace tsacl::experiment
