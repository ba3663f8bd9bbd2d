#include "tsacl/expansion.hpp"

#include <cmath>
#include <random>
#include <string>

#include "tsacl/error.hpp"

namespace tsacl::expansion {

double default_scale(std::size_t d_stack) {
  return 1.0 / std::sqrt(static_cast<double>(d_stack));
}

RhlProjection init_rhl(std::size_t d_stack, std::size_t d_expanded, std::uint64_t seed,
                       std::optional<double> scale) {
  require(d_stack >= 1 && d_expanded >= 1, ErrorCode::kInvalidArgument,
          "init_rhl: dimensions must be >= 1");
  const double sigma = scale.value_or(default_scale(d_stack));
  require(std::isfinite(sigma) && sigma > 0.0, ErrorCode::kInvalidArgument,
          "init_rhl: scale must be positive");
  RhlProjection rhl;
  rhl.seed = seed;
  rhl.scale = sigma;
  rhl.weights.resize(static_cast<Eigen::Index>(d_stack), static_cast<Eigen::Index>(d_expanded));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, sigma);
  // Row-major fill order so the stream layout does not depend on Eigen storage.
  for (Eigen::Index r = 0; r < rhl.weights.rows(); ++r)
    for (Eigen::Index c = 0; c < rhl.weights.cols(); ++c) rhl.weights(r, c) = gauss(rng);
  return rhl;
}

Eigen::MatrixXd expand(const Eigen::MatrixXd& features, const RhlProjection& rhl,
                       bool standardize_rows) {
  require(static_cast<std::size_t>(features.cols()) == rhl.input_dim(),
          ErrorCode::kDimensionMismatch,
          "expand: features have width " + std::to_string(features.cols()) +
              ", projection expects " + std::to_string(rhl.input_dim()));
  if (!standardize_rows) return (features * rhl.weights).cwiseMax(0.0);
  Eigen::MatrixXd centered = features.colwise() - features.rowwise().mean();
  const Eigen::VectorXd sd =
      (centered.rowwise().squaredNorm() / static_cast<double>(features.cols())).cwiseSqrt();
  for (Eigen::Index i = 0; i < centered.rows(); ++i)
    if (sd(i) > 1e-12) centered.row(i) /= sd(i);
  return (centered * rhl.weights).cwiseMax(0.0);
}

Eigen::MatrixXd expand(const encoder::FeatureStack& features, const RhlProjection& rhl,
                       bool standardize_rows) {
  return expand(Eigen::MatrixXd(features.matrix.cast<double>()), rhl, standardize_rows);
}

}  // namespace tsacl::expansion
