#include "tsacl/analytic_classifier.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_set>

#include "tsacl/error.hpp"

namespace tsacl::analytic {

namespace {

constexpr double kSymmetryTolerance = 1e-9;
// Below this reciprocal condition estimate an unregularized Gram is treated as singular.
constexpr double kSingularRcond = 1e-13;

void require_finite(const Eigen::MatrixXd& m, const char* what) {
  require(m.allFinite(), ErrorCode::kNonFinite, std::string(what) + " contains non-finite values");
}

void symmetrize(Eigen::MatrixXd& m) {
  m = 0.5 * (m + m.transpose()).eval();
}

}  // namespace

double relative_frobenius(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double denom = std::max(b.norm(), std::numeric_limits<double>::min());
  return (a - b).norm() / denom;
}

LabelBlock LabelBlock::from_labels(std::span<const std::uint32_t> labels,
                                   std::span<const std::uint32_t> classes) {
  LabelBlock block;
  block.classes.assign(classes.begin(), classes.end());
  block.one_hot = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(labels.size()),
                                        static_cast<Eigen::Index>(classes.size()));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto it = std::find(classes.begin(), classes.end(), labels[i]);
    require(it != classes.end(), ErrorCode::kLabelOutOfRange,
            "label " + std::to_string(labels[i]) + " at row " + std::to_string(i) +
                " is not one of the task's classes");
    block.one_hot(static_cast<Eigen::Index>(i), it - classes.begin()) = 1.0;
  }
  block.validate();
  return block;
}

void LabelBlock::validate() const {
  require(static_cast<std::size_t>(one_hot.cols()) == classes.size(),
          ErrorCode::kDimensionMismatch, "label block: column count differs from class list");
  std::unordered_set<std::uint32_t> unique(classes.begin(), classes.end());
  require(unique.size() == classes.size(), ErrorCode::kInvalidArgument,
          "label block: duplicate class ids");
  for (Eigen::Index r = 0; r < one_hot.rows(); ++r) {
    int ones = 0;
    for (Eigen::Index c = 0; c < one_hot.cols(); ++c) {
      const double v = one_hot(r, c);
      require(v == 0.0 || v == 1.0, ErrorCode::kInvalidArgument,
              "label block: row " + std::to_string(r) + " is not one-hot");
      ones += v == 1.0;
    }
    require(ones == 1, ErrorCode::kInvalidArgument,
            "label block: row " + std::to_string(r) + " is not one-hot");
  }
}

AnalyticClassifier AnalyticClassifier::fit_initial(const Eigen::MatrixXd& embeddings,
                                                   const LabelBlock& labels, double gamma) {
  require(embeddings.rows() >= 1, ErrorCode::kInvalidArgument, "fit_initial: no samples");
  require(std::isfinite(gamma) && gamma >= 0.0, ErrorCode::kInvalidArgument,
          "fit_initial: gamma must be finite and non-negative");
  require(embeddings.rows() == labels.one_hot.rows(), ErrorCode::kDimensionMismatch,
          "fit_initial: embeddings and labels have different row counts");
  require_finite(embeddings, "fit_initial: embeddings");
  labels.validate();

  const Eigen::Index dim = embeddings.cols();
  Eigen::MatrixXd gram = embeddings.transpose() * embeddings;
  gram.diagonal().array() += gamma;
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success || (gamma == 0.0 && llt.rcond() < kSingularRcond)) {
    fail(ErrorCode::kSingular, "fit_initial: regularized Gram matrix is singular (gamma = " +
                                   std::to_string(gamma) + ")");
  }

  AnalyticClassifier clf;
  clf.psi_ = llt.solve(Eigen::MatrixXd::Identity(dim, dim));
  symmetrize(clf.psi_);
  clf.weights_ = clf.psi_ * (embeddings.transpose() * labels.one_hot);
  clf.gamma_ = gamma;
  clf.registry_ = labels.classes;
  clf.tasks_seen_ = 1;
  require_finite(clf.psi_, "fit_initial: inverse correlation");
  return clf;
}

AnalyticClassifier AnalyticClassifier::from_state(Eigen::MatrixXd weights, Eigen::MatrixXd psi,
                                                  double gamma,
                                                  std::vector<std::uint32_t> registry,
                                                  std::size_t tasks_seen) {
  require(psi.rows() == psi.cols() && psi.rows() >= 1, ErrorCode::kDimensionMismatch,
          "classifier state: psi must be square");
  require(weights.rows() == psi.rows(), ErrorCode::kDimensionMismatch,
          "classifier state: weights rows differ from psi size");
  require(static_cast<std::size_t>(weights.cols()) == registry.size(),
          ErrorCode::kDimensionMismatch, "classifier state: registry length differs from weights");
  require(std::isfinite(gamma) && gamma >= 0.0, ErrorCode::kInvalidArgument,
          "classifier state: bad gamma");
  require(tasks_seen >= 1, ErrorCode::kInvalidArgument, "classifier state: tasks_seen must be >= 1");
  require_finite(weights, "classifier state: weights");
  require_finite(psi, "classifier state: psi");
  require(relative_frobenius(psi.transpose(), psi) <= kSymmetryTolerance,
          ErrorCode::kInvalidArgument, "classifier state: psi is not symmetric");
  std::unordered_set<std::uint32_t> unique(registry.begin(), registry.end());
  require(unique.size() == registry.size(), ErrorCode::kInvalidArgument,
          "classifier state: duplicate registry entries");

  AnalyticClassifier clf;
  clf.weights_ = std::move(weights);
  clf.psi_ = std::move(psi);
  clf.gamma_ = gamma;
  clf.registry_ = std::move(registry);
  clf.tasks_seen_ = tasks_seen;
  return clf;
}

void absorb_into_inverse_correlation(Eigen::MatrixXd& psi, const Eigen::MatrixXd& embeddings,
                                     std::size_t chunk_size) {
  require(chunk_size >= 1, ErrorCode::kInvalidArgument, "chunk_size must be positive");
  require(embeddings.cols() == psi.rows(), ErrorCode::kDimensionMismatch,
          "inverse update: embedding width differs from psi");
  const Eigen::Index n = embeddings.rows();
  const auto step = static_cast<Eigen::Index>(chunk_size);
  for (Eigen::Index start = 0; start < n; start += step) {
    const Eigen::Index m = std::min(step, n - start);
    const auto chunk = embeddings.middleRows(start, m);
    const Eigen::MatrixXd gain = psi * chunk.transpose();  // [d x m]
    Eigen::MatrixXd inner = chunk * gain;                   // U psi U^T
    inner.diagonal().array() += 1.0;
    Eigen::LLT<Eigen::MatrixXd> llt(inner);
    require(llt.info() == Eigen::Success, ErrorCode::kSingular,
            "inverse update: I + U psi U^T is not positive definite");
    psi.noalias() -= gain * llt.solve(gain.transpose());
    symmetrize(psi);
  }
}

void AnalyticClassifier::update(const Eigen::MatrixXd& embeddings, const LabelBlock& labels,
                                std::size_t chunk_size) {
  require(embeddings.rows() >= 1, ErrorCode::kInvalidArgument, "update: task has no samples");
  require(embeddings.cols() == psi_.rows(), ErrorCode::kDimensionMismatch,
          "update: embedding width " + std::to_string(embeddings.cols()) +
              " differs from classifier width " + std::to_string(psi_.rows()));
  require(embeddings.rows() == labels.one_hot.rows(), ErrorCode::kDimensionMismatch,
          "update: embeddings and labels have different row counts");
  require(chunk_size >= 1, ErrorCode::kInvalidArgument, "update: chunk_size must be positive");
  require_finite(embeddings, "update: embeddings");
  labels.validate();
  for (auto c : labels.classes) {
    require(std::find(registry_.begin(), registry_.end(), c) == registry_.end(),
            ErrorCode::kClassCollision,
            "update: class " + std::to_string(c) + " is already registered");
  }

  Eigen::MatrixXd psi = psi_;
  absorb_into_inverse_correlation(psi, embeddings, chunk_size);

  // U^T (U W) keeps the cost at O(N d D) instead of forming the d x d Gram.
  const Eigen::MatrixXd correction = psi * (embeddings.transpose() * (embeddings * weights_));
  const Eigen::MatrixXd fresh = psi * (embeddings.transpose() * labels.one_hot);

  Eigen::MatrixXd weights(weights_.rows(), weights_.cols() + fresh.cols());
  weights.leftCols(weights_.cols()) = weights_ - correction;
  weights.rightCols(fresh.cols()) = fresh;

  psi_ = std::move(psi);
  weights_ = std::move(weights);
  registry_.insert(registry_.end(), labels.classes.begin(), labels.classes.end());
  ++tasks_seen_;
}

Eigen::MatrixXd AnalyticClassifier::predict_scores(const Eigen::MatrixXd& embeddings) const {
  require(embeddings.cols() == weights_.rows(), ErrorCode::kDimensionMismatch,
          "predict: embedding width " + std::to_string(embeddings.cols()) +
              " differs from classifier width " + std::to_string(weights_.rows()));
  return embeddings * weights_;
}

std::vector<std::uint32_t> AnalyticClassifier::predict_labels(
    const Eigen::MatrixXd& embeddings) const {
  const Eigen::MatrixXd scores = predict_scores(embeddings);
  std::vector<std::uint32_t> out(static_cast<std::size_t>(scores.rows()));
  for (Eigen::Index r = 0; r < scores.rows(); ++r) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < scores.cols(); ++c)
      if (scores(r, c) > scores(r, best)) best = c;
    out[static_cast<std::size_t>(r)] = registry_[static_cast<std::size_t>(best)];
  }
  return out;
}

Eigen::MatrixXd block_diagonal_labels(std::span<const LabelBlock> blocks) {
  Eigen::Index rows = 0, cols = 0;
  for (const auto& b : blocks) {
    rows += b.one_hot.rows();
    cols += b.one_hot.cols();
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows, cols);
  Eigen::Index r = 0, c = 0;
  for (const auto& b : blocks) {
    out.block(r, c, b.one_hot.rows(), b.one_hot.cols()) = b.one_hot;
    r += b.one_hot.rows();
    c += b.one_hot.cols();
  }
  return out;
}

Eigen::MatrixXd joint_fit_oracle(const Eigen::MatrixXd& embeddings, const Eigen::MatrixXd& labels,
                                 double gamma) {
  require(embeddings.rows() == labels.rows(), ErrorCode::kDimensionMismatch,
          "joint_fit_oracle: embeddings and labels have different row counts");
  require(std::isfinite(gamma) && gamma >= 0.0, ErrorCode::kInvalidArgument,
          "joint_fit_oracle: gamma must be finite and non-negative");
  Eigen::MatrixXd gram = embeddings.transpose() * embeddings;
  gram.diagonal().array() += gamma;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
  require(lu.isInvertible(), ErrorCode::kSingular, "joint_fit_oracle: singular system");
  return lu.solve(embeddings.transpose() * labels);
}

double woodbury_check(const Eigen::MatrixXd& a, const Eigen::MatrixXd& u, const Eigen::MatrixXd& c,
                      const Eigen::MatrixXd& v) {
  const Eigen::Index n = a.rows();
  const Eigen::Index m = c.rows();
  require(a.cols() == n && c.cols() == m && u.rows() == n && u.cols() == m && v.rows() == m &&
              v.cols() == n,
          ErrorCode::kDimensionMismatch, "woodbury_check: incompatible shapes");
  Eigen::FullPivLU<Eigen::MatrixXd> a_lu(a);
  Eigen::FullPivLU<Eigen::MatrixXd> c_lu(c);
  require(a_lu.isInvertible(), ErrorCode::kSingular, "woodbury_check: A is singular");
  require(c_lu.isInvertible(), ErrorCode::kSingular, "woodbury_check: C is singular");

  const Eigen::MatrixXd direct = Eigen::MatrixXd(a + u * c * v).fullPivLu().inverse();
  const Eigen::MatrixXd a_inv = a_lu.inverse();
  const Eigen::MatrixXd core = c_lu.inverse() + v * a_inv * u;
  const Eigen::MatrixXd expansion = a_inv - a_inv * u * core.fullPivLu().solve(v * a_inv);
  return relative_frobenius(expansion, direct);
}

}  // namespace tsacl::analytic
