#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "tsacl/analytic_classifier.hpp"
#include "tsacl/encoder.hpp"
#include "tsacl/expansion.hpp"

namespace tsacl::ensemble {

/// Max-subtracted exponentials normalized to sum to one.
Eigen::RowVectorXd softmax(const Eigen::RowVectorXd& scores);
/// Row-wise softmax.
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& scores);

/// One RHL projection with the classifier trained on its embeddings.
struct Member {
  expansion::RhlProjection rhl;
  analytic::AnalyticClassifier classifier;
};

/// Per-member softmax probabilities averaged over members; argmax mapped through
/// the shared registry, ties to the lowest column. The average is accumulated
/// in sorted order per entry so the result does not depend on member order.
std::vector<std::uint32_t> ensemble_predict(std::span<const Member> members,
                                            const encoder::FeatureStack& features,
                                            bool standardize_rows = false);

/// Same rule on precomputed per-member score matrices.
std::vector<std::uint32_t> ensemble_predict_scores(std::span<const Eigen::MatrixXd> member_scores,
                                                   std::span<const std::uint32_t> registry);

}  // namespace tsacl::ensemble
