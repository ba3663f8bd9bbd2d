// tsacl: synthetic data generation, experiment runs, checkpoint inspection and
// joint-solve verification.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "tsacl/checkpoint.hpp"
#include "tsacl/dataset.hpp"
#include "tsacl/error.hpp"
#include "tsacl/experiment.hpp"
#include "tsacl/json_codec.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kOracleTolerance = 1e-9;

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) tsacl::fail(tsacl::ErrorCode::kMissingFile, path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    tsacl::fail(tsacl::ErrorCode::kConfig, path.string() + ": " + e.what());
  }
}

int cmd_synth(const fs::path& spec_path, const fs::path& out) {
  const auto spec = tsacl::codec::synthetic_spec_from_json(read_json(spec_path));
  const auto pair = tsacl::data::generate_synthetic(spec);
  tsacl::data::write_dataset(out, pair);
  std::cout << "wrote " << pair.train.size() << " train and " << pair.test.size()
            << " test samples to " << out.string() << "\n";
  return 0;
}

int cmd_run(const fs::path& config_path, const std::string& out_override) {
  auto config = tsacl::experiment::load_config(config_path);
  if (!out_override.empty()) config.output_dir = out_override;
  const auto report = tsacl::experiment::run_experiment(config);
  tsacl::experiment::emit_report(report, config.output_dir);
  tsacl::experiment::save_checkpoints(report, config.output_dir);
  const auto acc = report.accuracy_summary();
  const auto fgt = report.forgetting_summary();
  std::cout << "runs=" << report.runs.size() << " A_T=" << acc.mean << "+-" << acc.stddev
            << " F_T=" << fgt.mean << "+-" << fgt.stddev << " out=" << config.output_dir.string()
            << "\n";
  return 0;
}

int cmd_inspect(const fs::path& path) {
  std::cout << tsacl::checkpoint::read_header(path).dump(2) << "\n";
  return 0;
}

int cmd_oracle(const fs::path& config_path, const std::string& checkpoint_dir) {
  const auto config = tsacl::experiment::load_config(config_path);
  const fs::path dir = checkpoint_dir.empty() ? config.output_dir / "checkpoints"
                                              : fs::path(checkpoint_dir);
  const auto data = tsacl::experiment::prepare_data(config);
  bool ok = true;
  for (auto seed : config.run_seeds) {
    const auto ck = tsacl::checkpoint::load_checkpoint(dir / (std::to_string(seed) + ".ckpt"));
    const auto cmp = tsacl::experiment::compare_with_oracle(config, data, ck);
    const double worst =
        *std::max_element(cmp.weight_relative_errors.begin(), cmp.weight_relative_errors.end());
    const bool pass = worst <= kOracleTolerance && cmp.prediction_agreement == 1.0;
    ok = ok && pass;
    std::cout << json{{"seed", cmp.seed},
                      {"weight_relative_errors", cmp.weight_relative_errors},
                      {"prediction_agreement", cmp.prediction_agreement},
                      {"pass", pass}}
                     .dump()
              << "\n";
  }
  if (!ok) {
    std::cerr << "error code=oracle_mismatch message=recursive weights differ from the joint solve\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gradient-free class-incremental learning for time series"};
  app.require_subcommand(1);

  fs::path synth_spec, synth_out;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset directory");
  synth->add_option("--spec", synth_spec, "Synthetic spec JSON")->required();
  synth->add_option("--out", synth_out, "Output directory")->required();

  fs::path run_config;
  std::string run_out;
  auto* run = app.add_subcommand("run", "Run an experiment from a config file");
  run->add_option("--config", run_config, "Experiment config JSON")->required();
  run->add_option("--out", run_out, "Output directory (overrides config.output_dir)");

  fs::path inspect_path;
  auto* inspect = app.add_subcommand("inspect", "Print checkpoint metadata");
  inspect->add_option("checkpoint", inspect_path, "Checkpoint file")->required();

  fs::path oracle_config;
  std::string oracle_dir;
  auto* oracle = app.add_subcommand("oracle", "Compare saved checkpoints with the joint solve");
  oracle->add_option("--config", oracle_config, "Experiment config JSON")->required();
  oracle->add_option("--checkpoints", oracle_dir, "Checkpoint directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error code=usage message=" << one_line(e.what()) << "\n";
    return 2;
  }

  try {
    if (*synth) return cmd_synth(synth_spec, synth_out);
    if (*run) return cmd_run(run_config, run_out);
    if (*inspect) return cmd_inspect(inspect_path);
    if (*oracle) return cmd_oracle(oracle_config, oracle_dir);
  } catch (const tsacl::Error& e) {
    std::cerr << "error code=" << tsacl::error_code_name(e.code())
              << " message=" << one_line(e.what()) << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error code=internal message=" << one_line(e.what()) << "\n";
    return 1;
  }
  return 0;
}
