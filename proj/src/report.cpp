#include <cmath>
#include <iomanip>
#include <sstream>

#include "binary_io.hpp"
#include "tsacl/error.hpp"
#include "tsacl/experiment.hpp"

namespace tsacl::experiment {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

Summary summarize(const std::vector<double>& values) {
  Summary s;
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

json vr_json(const metrics::VarianceRatio& vr) {
  if (vr.unbounded) return "unbounded";
  return vr.value();
}

std::string vr_csv(const metrics::VarianceRatio& vr) {
  if (vr.unbounded) return "inf";
  std::ostringstream out;
  out << std::setprecision(17) << vr.value();
  return out.str();
}

}  // namespace

Summary RunReport::accuracy_summary() const {
  std::vector<double> values;
  for (const auto& r : runs) values.push_back(r.final_average_accuracy);
  return summarize(values);
}

Summary RunReport::forgetting_summary() const {
  std::vector<double> values;
  for (const auto& r : runs)
    if (r.final_forgetting) values.push_back(*r.final_forgetting);
  return summarize(values);
}

json RunReport::to_json() const {
  json runs_json = json::array();
  for (const auto& r : runs) {
    json scores = json::array();
    for (const auto& [gamma, score] : r.validation_scores)
      scores.push_back({{"gamma", gamma}, {"average_accuracy", score}});
    json oracle = nullptr;
    if (r.oracle) {
      oracle = {{"weight_relative_errors", r.oracle->weight_relative_errors},
                {"max_weight_relative_error", r.oracle->max_weight_relative_error},
                {"prediction_agreement", r.oracle->prediction_agreement},
                {"final_row", r.oracle->final_row},
                {"final_average_accuracy", r.oracle->final_average_accuracy}};
    }
    runs_json.push_back({
        {"seed", r.seed},
        {"selected_gamma", r.selected_gamma},
        {"validation_scores", scores},
        {"class_order", r.class_order},
        {"accuracy_matrix", r.accuracy.rows()},
        {"average_accuracy", r.average_accuracy},
        {"final_average_accuracy", r.final_average_accuracy},
        {"final_forgetting", r.final_forgetting ? json(*r.final_forgetting) : json(nullptr)},
        {"variance_ratio", {{"features", vr_json(r.vr_features)},
                            {"embeddings", vr_json(r.vr_embeddings)}}},
        {"task_seconds", r.task_seconds},
        {"oracle", oracle},
    });
  }
  const Summary acc = accuracy_summary();
  const Summary fgt = forgetting_summary();
  return {{"format_version", kReportFormatVersion},
          {"config", config},
          {"runs", runs_json},
          {"summary",
           {{"final_average_accuracy", {{"mean", acc.mean}, {"std", acc.stddev}}},
            {"final_forgetting", {{"mean", fgt.mean}, {"std", fgt.stddev}}}}}};
}

void emit_report(const RunReport& report, const fs::path& dir) {
  require(!report.runs.empty(), ErrorCode::kInvalidArgument, "report has no runs");
  for (const auto& r : report.runs) {
    require(r.final_average_accuracy >= 0.0 && r.final_average_accuracy <= 1.0,
            ErrorCode::kInvalidArgument, "report: A_T outside [0, 1]");
  }
  const std::string body = report.to_json().dump(2) + "\n";

  std::ostringstream csv;
  csv << std::setprecision(17);
  csv << "seed,gamma,final_average_accuracy,final_forgetting,vr_features,vr_embeddings,task_seconds\n";
  for (const auto& r : report.runs) {
    csv << r.seed << ',' << r.selected_gamma << ',' << r.final_average_accuracy << ',';
    if (r.final_forgetting) csv << *r.final_forgetting;
    csv << ',' << vr_csv(r.vr_features) << ',' << vr_csv(r.vr_embeddings) << ',';
    for (std::size_t t = 0; t < r.task_seconds.size(); ++t)
      csv << (t ? ";" : "") << r.task_seconds[t];
    csv << '\n';
  }

  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec, ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
  io::write_bytes(dir / "report.json", body);
  io::write_bytes(dir / "summary.csv", csv.str());
}

void save_checkpoints(const RunReport& report, const fs::path& dir) {
  for (const auto& r : report.runs)
    checkpoint::save_checkpoint(dir / "checkpoints" / (std::to_string(r.seed) + ".ckpt"),
                                r.checkpoint);
}

}  // namespace tsacl::experiment
