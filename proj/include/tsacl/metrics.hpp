#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace tsacl::metrics {

/// Lower-triangular record: row t (1-based) holds accuracy on tasks 1..t after
/// learning task t.
class AccuracyMatrix {
 public:
  /// Appends the next row; its length must equal the new row count and every
  /// entry must be in [0, 1].
  void push_row(std::vector<double> row);

  std::size_t num_tasks() const noexcept { return rows_.size(); }
  /// A_{t,i}, both 1-based, i <= t.
  double at(std::size_t t, std::size_t i) const;
  const std::vector<std::vector<double>>& rows() const noexcept { return rows_; }

 private:
  std::vector<std::vector<double>> rows_;
};

double task_accuracy(std::span<const std::uint32_t> predictions,
                     std::span<const std::uint32_t> truth);

/// A_t = mean of row t.
double average_accuracy(const AccuracyMatrix& matrix, std::size_t t);

/// F_t = mean over i < t of (max_{i <= j <= t-1} A_{j,i}) - A_{t,i}. Requires t >= 2.
double forgetting(const AccuracyMatrix& matrix, std::size_t t);

struct VarianceRatio {
  double between_trace = 0.0;  // trace of class-size weighted between-class scatter
  double within_trace = 0.0;   // trace of class-size weighted within-class covariance
  bool unbounded = false;      // within_trace == 0 and between_trace > 0

  /// between/within; +inf when unbounded, 0 when both traces vanish.
  double value() const;
};

VarianceRatio variance_ratio(const Eigen::MatrixXd& features,
                             std::span<const std::uint32_t> labels);

}  // namespace tsacl::metrics
