#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>

#include <Eigen/Core>

#include "tsacl/encoder.hpp"

namespace tsacl::expansion {

/// Seeded random projection Phi^E [d_stack x d_E]. Only (seed, d_stack, d_E,
/// scale) is ever persisted; the matrix is regenerated bit-exactly from it.
struct RhlProjection {
  Eigen::MatrixXd weights;
  std::uint64_t seed = 0;
  double scale = 0.0;

  std::size_t input_dim() const { return static_cast<std::size_t>(weights.rows()); }
  std::size_t output_dim() const { return static_cast<std::size_t>(weights.cols()); }
};

/// 1/sqrt(d_stack): unit-variance pre-activations for unit-norm-per-coordinate input.
double default_scale(std::size_t d_stack);

/// Entries i.i.d. N(0, scale^2). `scale` defaults to default_scale(d_stack).
RhlProjection init_rhl(std::size_t d_stack, std::size_t d_expanded, std::uint64_t seed,
                       std::optional<double> scale = std::nullopt);

/// max(0, U_stack * Phi^E). With `standardize_rows`, each feature row is first
/// shifted and scaled to zero mean, unit variance across its coordinates.
Eigen::MatrixXd expand(const encoder::FeatureStack& features, const RhlProjection& rhl,
                       bool standardize_rows = false);
Eigen::MatrixXd expand(const Eigen::MatrixXd& features, const RhlProjection& rhl,
                       bool standardize_rows = false);

}  // namespace tsacl::expansion
