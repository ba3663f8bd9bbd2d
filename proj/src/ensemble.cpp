#include "tsacl/ensemble.hpp"

#include <algorithm>
#include <cmath>

#include "tsacl/error.hpp"

namespace tsacl::ensemble {

Eigen::RowVectorXd softmax(const Eigen::RowVectorXd& scores) {
  require(scores.size() >= 1, ErrorCode::kInvalidArgument, "softmax: empty input");
  require(scores.allFinite(), ErrorCode::kNonFinite, "softmax: non-finite score");
  const Eigen::RowVectorXd e = (scores.array() - scores.maxCoeff()).exp().matrix();
  return e / e.sum();
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& scores) {
  Eigen::MatrixXd out(scores.rows(), scores.cols());
  for (Eigen::Index r = 0; r < scores.rows(); ++r) out.row(r) = softmax(scores.row(r));
  return out;
}

std::vector<std::uint32_t> ensemble_predict_scores(std::span<const Eigen::MatrixXd> member_scores,
                                                   std::span<const std::uint32_t> registry) {
  require(!member_scores.empty(), ErrorCode::kInvalidArgument, "ensemble: no members");
  const Eigen::Index rows = member_scores.front().rows();
  const Eigen::Index cols = member_scores.front().cols();
  require(static_cast<std::size_t>(cols) == registry.size(), ErrorCode::kDimensionMismatch,
          "ensemble: score width differs from registry");
  std::vector<Eigen::MatrixXd> probs;
  probs.reserve(member_scores.size());
  for (const auto& s : member_scores) {
    require(s.rows() == rows && s.cols() == cols, ErrorCode::kDimensionMismatch,
            "ensemble: member score shapes differ");
    probs.push_back(softmax_rows(s));
  }

  const double n = static_cast<double>(probs.size());
  std::vector<double> column(probs.size());
  std::vector<std::uint32_t> out(static_cast<std::size_t>(rows));
  for (Eigen::Index r = 0; r < rows; ++r) {
    Eigen::Index best = 0;
    double best_p = -1.0;
    for (Eigen::Index c = 0; c < cols; ++c) {
      for (std::size_t m = 0; m < probs.size(); ++m) column[m] = probs[m](r, c);
      std::sort(column.begin(), column.end());
      double sum = 0.0;
      for (double p : column) sum += p;
      const double mean = sum / n;
      if (mean > best_p) {
        best_p = mean;
        best = c;
      }
    }
    out[static_cast<std::size_t>(r)] = registry[static_cast<std::size_t>(best)];
  }
  return out;
}

std::vector<std::uint32_t> ensemble_predict(std::span<const Member> members,
                                            const encoder::FeatureStack& features,
                                            bool standardize_rows) {
  require(!members.empty(), ErrorCode::kInvalidArgument, "ensemble: no members");
  const auto& registry = members.front().classifier.registry();
  for (const auto& m : members) {
    require(m.classifier.registry() == registry, ErrorCode::kRegistryMismatch,
            "ensemble: members have different class registries");
  }
  std::vector<Eigen::MatrixXd> scores;
  scores.reserve(members.size());
  for (const auto& m : members) {
    scores.push_back(
        m.classifier.predict_scores(expansion::expand(features, m.rhl, standardize_rows)));
  }
  return ensemble_predict_scores(scores, registry);
}

}  // namespace tsacl::ensemble
