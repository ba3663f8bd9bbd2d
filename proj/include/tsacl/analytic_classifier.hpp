#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace tsacl::analytic {

inline constexpr std::size_t kDefaultChunkSize = 256;

/// One-hot targets for a single task: one column per class of the task, in
/// `classes` order.
struct LabelBlock {
  Eigen::MatrixXd one_hot;              // [N_t x |classes|]
  std::vector<std::uint32_t> classes;   // global id of each column

  /// Builds the block from per-row global labels. Every label must be in
  /// `classes`; columns follow `classes` order.
  static LabelBlock from_labels(std::span<const std::uint32_t> labels,
                                std::span<const std::uint32_t> classes);

  std::size_t rows() const { return static_cast<std::size_t>(one_hot.rows()); }
  void validate() const;
};

/// Ridge-regression read-out over expanded embeddings, trained in closed form
/// on the first task and recursively on every later one.
///
/// State after task t:
///   psi     = (sum_i U_i^T U_i + gamma I)^-1             [d_E x d_E]
///   weights = psi * sum_i U_i^T V_i (block-diagonal V)   [d_E x D_t]
///
/// update() reads only (psi, weights) and the new task's data; it never needs
/// earlier embeddings, yet produces the same weights as solving the ridge
/// problem over all tasks jointly.
class AnalyticClassifier {
 public:
  /// psi = (U^T U + gamma I)^-1, weights = psi U^T V. gamma == 0 is accepted only
  /// when U^T U is numerically invertible.
  static AnalyticClassifier fit_initial(const Eigen::MatrixXd& embeddings,
                                        const LabelBlock& labels, double gamma);

  /// Rebuilds a classifier from persisted state, validating every invariant.
  static AnalyticClassifier from_state(Eigen::MatrixXd weights, Eigen::MatrixXd psi, double gamma,
                                       std::vector<std::uint32_t> registry,
                                       std::size_t tasks_seen);

  /// Absorbs task t. psi is updated by the Woodbury recursion over row chunks of
  /// at most `chunk_size`; then, with the end-of-task psi,
  ///   weights <- [ weights - psi U^T U weights | psi U^T V ].
  /// Chunking changes only how psi is computed, not the result.
  void update(const Eigen::MatrixXd& embeddings, const LabelBlock& labels,
              std::size_t chunk_size = kDefaultChunkSize);

  Eigen::MatrixXd predict_scores(const Eigen::MatrixXd& embeddings) const;
  /// Row-wise argmax mapped through the registry; ties go to the lowest column.
  std::vector<std::uint32_t> predict_labels(const Eigen::MatrixXd& embeddings) const;

  const Eigen::MatrixXd& weights() const noexcept { return weights_; }
  const Eigen::MatrixXd& inverse_correlation() const noexcept { return psi_; }
  double gamma() const noexcept { return gamma_; }
  const std::vector<std::uint32_t>& registry() const noexcept { return registry_; }
  std::size_t tasks_seen() const noexcept { return tasks_seen_; }
  std::size_t embedding_dim() const noexcept { return static_cast<std::size_t>(psi_.rows()); }
  std::size_t num_outputs() const noexcept { return registry_.size(); }

 private:
  AnalyticClassifier() = default;

  Eigen::MatrixXd weights_;
  Eigen::MatrixXd psi_;
  double gamma_ = 0.0;
  std::vector<std::uint32_t> registry_;
  std::size_t tasks_seen_ = 0;
};

inline AnalyticClassifier fit_initial(const Eigen::MatrixXd& embeddings, const LabelBlock& labels,
                                      double gamma) {
  return AnalyticClassifier::fit_initial(embeddings, labels, gamma);
}

/// psi <- psi - psi U^T (I + U psi U^T)^-1 U psi, applied chunk by chunk. The
/// inner system is solved by Cholesky and psi is re-symmetrized after each chunk.
void absorb_into_inverse_correlation(Eigen::MatrixXd& psi, const Eigen::MatrixXd& embeddings,
                                     std::size_t chunk_size);

/// Stacks per-task one-hot blocks into the block-diagonal joint target matrix.
Eigen::MatrixXd block_diagonal_labels(std::span<const LabelBlock> blocks);

/// Direct regularized normal-equations solve (U^T U + gamma I)^-1 U^T V over all
/// data at once, via a full-pivoting LU. Reference path for equivalence tests.
Eigen::MatrixXd joint_fit_oracle(const Eigen::MatrixXd& embeddings, const Eigen::MatrixXd& labels,
                                 double gamma);

/// Relative Frobenius residual between (A + U C V)^-1 and its Woodbury
/// expansion A^-1 - A^-1 U (C^-1 + V A^-1 U)^-1 V A^-1.
double woodbury_check(const Eigen::MatrixXd& a, const Eigen::MatrixXd& u, const Eigen::MatrixXd& c,
                      const Eigen::MatrixXd& v);

/// ||a - b||_F / max(||b||_F, tiny).
double relative_frobenius(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

}  // namespace tsacl::analytic
