#include "tsacl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include <boost/multiprecision/cpp_int.hpp>

#include "tsacl/error.hpp"

namespace tsacl::metrics {

namespace {

using Rational = boost::multiprecision::cpp_rational;
using boost::multiprecision::cpp_int;

// Accuracies are hit counts over test-set sizes; denominators beyond this are
// not expected from any realistic split.
constexpr std::int64_t kMaxDenominator = std::int64_t{1} << 24;

Rational exact_value(double x) {
  int exponent = 0;
  const double mantissa = std::frexp(x, &exponent);
  const auto scaled = static_cast<std::int64_t>(std::ldexp(mantissa, 53));
  Rational r{cpp_int{scaled}};
  exponent -= 53;
  if (exponent >= 0) return r * Rational(cpp_int(1) << exponent);
  return r / Rational(cpp_int(1) << -exponent);
}

// Best rational approximation with bounded denominator (continued fractions);
// used only when it reproduces x to the last bit.
Rational as_count_ratio(double x) {
  const Rational exact = exact_value(x);
  std::int64_t p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  double rest = x;
  for (int iter = 0; iter < 64; ++iter) {
    const double whole = std::floor(rest);
    const auto a = static_cast<std::int64_t>(whole);
    const std::int64_t q2 = q0 + a * q1;
    if (q2 > kMaxDenominator) break;
    const std::int64_t p2 = p0 + a * p1;
    p0 = p1; q0 = q1; p1 = p2; q1 = q2;
    if (static_cast<double>(p1) / static_cast<double>(q1) == x) {
      return Rational(cpp_int(p1), cpp_int(q1));
    }
    const double frac = rest - whole;
    if (frac == 0.0) break;
    rest = 1.0 / frac;
  }
  return exact;
}

// Nearest double to r.
double round_to_double(const Rational& r) {
  const double guess = boost::multiprecision::numerator(r).convert_to<double>() /
                       boost::multiprecision::denominator(r).convert_to<double>();
  double best = guess;
  Rational best_err = abs(exact_value(guess) - r);
  for (double d : {std::nextafter(guess, -HUGE_VAL), std::nextafter(guess, HUGE_VAL)}) {
    const Rational err = abs(exact_value(d) - r);
    if (err < best_err) {
      best = d;
      best_err = err;
    }
  }
  return best;
}

}  // namespace

void AccuracyMatrix::push_row(std::vector<double> row) {
  require(row.size() == rows_.size() + 1, ErrorCode::kDimensionMismatch,
          "accuracy matrix: row " + std::to_string(rows_.size() + 1) + " must have " +
              std::to_string(rows_.size() + 1) + " entries, got " + std::to_string(row.size()));
  for (double v : row) {
    require(v >= 0.0 && v <= 1.0, ErrorCode::kInvalidArgument,
            "accuracy matrix: entry outside [0, 1]");
  }
  rows_.push_back(std::move(row));
}

double AccuracyMatrix::at(std::size_t t, std::size_t i) const {
  require(t >= 1 && t <= rows_.size() && i >= 1 && i <= t, ErrorCode::kInvalidArgument,
          "accuracy matrix: no entry (" + std::to_string(t) + ", " + std::to_string(i) + ")");
  return rows_[t - 1][i - 1];
}

double task_accuracy(std::span<const std::uint32_t> predictions,
                     std::span<const std::uint32_t> truth) {
  require(!truth.empty(), ErrorCode::kInvalidArgument, "task_accuracy: empty input");
  require(predictions.size() == truth.size(), ErrorCode::kDimensionMismatch,
          "task_accuracy: length mismatch");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predictions[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

double average_accuracy(const AccuracyMatrix& matrix, std::size_t t) {
  require(t >= 1 && t <= matrix.num_tasks(), ErrorCode::kInvalidArgument,
          "average_accuracy: row " + std::to_string(t) + " not populated");
  Rational sum = 0;
  for (std::size_t i = 1; i <= t; ++i) sum += as_count_ratio(matrix.at(t, i));
  return round_to_double(sum / Rational(static_cast<long long>(t)));
}

double forgetting(const AccuracyMatrix& matrix, std::size_t t) {
  require(t >= 2, ErrorCode::kInvalidArgument, "forgetting: requires t >= 2");
  require(t <= matrix.num_tasks(), ErrorCode::kInvalidArgument,
          "forgetting: row " + std::to_string(t) + " not populated");
  Rational sum = 0;
  for (std::size_t i = 1; i < t; ++i) {
    double best = matrix.at(i, i);
    for (std::size_t j = i + 1; j < t; ++j) best = std::max(best, matrix.at(j, i));
    sum += as_count_ratio(best) - as_count_ratio(matrix.at(t, i));
  }
  return round_to_double(sum / Rational(static_cast<long long>(t - 1)));
}

double VarianceRatio::value() const {
  if (unbounded) return std::numeric_limits<double>::infinity();
  if (within_trace == 0.0) return 0.0;
  return between_trace / within_trace;
}

VarianceRatio variance_ratio(const Eigen::MatrixXd& features,
                             std::span<const std::uint32_t> labels) {
  require(static_cast<std::size_t>(features.rows()) == labels.size(),
          ErrorCode::kDimensionMismatch, "variance_ratio: row/label count mismatch");
  std::map<std::uint32_t, std::vector<Eigen::Index>> members;
  for (std::size_t i = 0; i < labels.size(); ++i)
    members[labels[i]].push_back(static_cast<Eigen::Index>(i));
  require(members.size() >= 2, ErrorCode::kInvalidArgument,
          "variance_ratio: at least two classes required");

  const double n = static_cast<double>(features.rows());
  const Eigen::RowVectorXd mean = features.colwise().mean();
  VarianceRatio vr;
  for (const auto& [label, rows] : members) {
    Eigen::RowVectorXd class_mean = Eigen::RowVectorXd::Zero(features.cols());
    for (auto r : rows) class_mean += features.row(r);
    class_mean /= static_cast<double>(rows.size());
    double spread = 0.0;
    for (auto r : rows) spread += (features.row(r) - class_mean).squaredNorm();
    const double weight = static_cast<double>(rows.size()) / n;
    vr.between_trace += weight * (class_mean - mean).squaredNorm();
    vr.within_trace += weight * spread / static_cast<double>(rows.size());
  }
  vr.unbounded = vr.within_trace == 0.0 && vr.between_trace > 0.0;
  return vr;
}

}  // namespace tsacl::metrics
