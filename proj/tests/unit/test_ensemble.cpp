#include <doctest.h>

#include <algorithm>
#include <random>

#include "test_support.hpp"
#include "tsacl/ensemble.hpp"
#include "tsacl/error.hpp"

using namespace tsacl;
using namespace tsacl::ensemble;
using tsacl::testing::random_embeddings;
using tsacl::testing::random_matrix;

namespace {

std::vector<std::uint32_t> cyclic(std::size_t n, const std::vector<std::uint32_t>& classes) {
  std::vector<std::uint32_t> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = classes[i % classes.size()];
  return out;
}

// Member trained on two tasks of the given stack with its own RHL seed.
Member train_member(const Eigen::MatrixXd& stack, std::uint64_t seed, double scale = 0.0) {
  auto rhl = expansion::init_rhl(static_cast<std::size_t>(stack.cols()), 32, seed,
                                 scale > 0.0 ? std::optional<double>(scale) : std::nullopt);
  const Eigen::MatrixXd u = expansion::expand(stack, rhl);
  const std::vector<std::uint32_t> first = {0, 1}, second = {2, 3};
  auto clf = analytic::fit_initial(u.topRows(20),
                                   analytic::LabelBlock::from_labels(cyclic(20, first), first), 1.0);
  clf.update(u.bottomRows(20), analytic::LabelBlock::from_labels(cyclic(20, second), second));
  return Member{std::move(rhl), std::move(clf)};
}

encoder::FeatureStack stack_of(const Eigen::MatrixXd& m) {
  encoder::FeatureStack fs;
  fs.matrix = m.cast<float>();
  return fs;
}

}  // namespace

TEST_CASE("softmax") {
  CHECK(softmax(Eigen::RowVector2d(0, 0)).isApprox(Eigen::RowVector2d(0.5, 0.5), 1e-15));
  const Eigen::RowVectorXd third = softmax(Eigen::RowVector3d(4.2, 4.2, 4.2));
  for (Eigen::Index i = 0; i < 3; ++i) CHECK(third(i) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  const Eigen::RowVectorXd s = random_matrix(1, 7, 1, 5.0);
  const Eigen::RowVectorXd p = softmax(s);
  CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK((p.array() > 0.0).all());
  for (double shift : {-1000.0, -3.0, 0.5, 700.0}) {
    const Eigen::RowVectorXd q = softmax((s.array() + shift).matrix());
    CHECK((q - p).cwiseAbs().maxCoeff() <= 1e-12);
  }
  // Large magnitudes would overflow a naive exp.
  CHECK(softmax(Eigen::RowVector2d(1000.0, 1000.0)).isApprox(Eigen::RowVector2d(0.5, 0.5), 1e-15));
  CHECK_THROWS_AS(softmax(Eigen::RowVector2d(0.0, std::numeric_limits<double>::infinity())), Error);
  CHECK_THROWS_AS(softmax(Eigen::RowVectorXd(0)), Error);

  const Eigen::MatrixXd rows = random_matrix(5, 3, 2);
  const Eigen::MatrixXd pr = softmax_rows(rows);
  for (Eigen::Index r = 0; r < 5; ++r) CHECK(pr.row(r).isApprox(softmax(rows.row(r)), 1e-15));
}

TEST_CASE("ensemble_predict_scores") {
  // Log-probabilities make each member's softmax the stated distribution.
  Eigen::MatrixXd a(1, 2), b(1, 2);
  a << std::log(0.6), std::log(0.4);
  b << std::log(0.1), std::log(0.9);
  const std::vector<std::uint32_t> registry = {7, 3};
  const std::vector<Eigen::MatrixXd> both = {a, b};
  CHECK(ensemble_predict_scores(both, registry) == std::vector<std::uint32_t>{3});
  const std::vector<Eigen::MatrixXd> only_a = {a};
  CHECK(ensemble_predict_scores(only_a, registry) == std::vector<std::uint32_t>{7});

  Eigen::MatrixXd tie(1, 2);
  tie << 0.0, 0.0;
  const std::vector<Eigen::MatrixXd> tied = {tie};
  CHECK(ensemble_predict_scores(tied, registry) == std::vector<std::uint32_t>{7});

  CHECK_THROWS_AS(ensemble_predict_scores(std::vector<Eigen::MatrixXd>{}, registry), Error);
  const std::vector<Eigen::MatrixXd> ragged = {a, Eigen::MatrixXd::Zero(2, 2)};
  CHECK_THROWS_AS(ensemble_predict_scores(ragged, registry), Error);
}

TEST_CASE("ensemble_predict") {
  const Eigen::MatrixXd train = random_matrix(40, 12, 1);
  const Eigen::MatrixXd test = random_matrix(200, 12, 2);
  const auto features = stack_of(test);
  std::vector<Member> members;
  for (std::uint64_t seed = 0; seed < 5; ++seed) members.push_back(train_member(train, 100 + seed));

  SUBCASE("a single member matches its own classifier") {
    const std::span<const Member> one(members.data(), 1);
    const Eigen::MatrixXd u = expansion::expand(features, members[0].rhl);
    CHECK(ensemble_predict(one, features) == members[0].classifier.predict_labels(u));
  }
  SUBCASE("member order does not matter") {
    const auto base = ensemble_predict(members, features);
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 10; ++trial) {
      auto shuffled = members;
      std::shuffle(shuffled.begin(), shuffled.end(), rng);
      CHECK(ensemble_predict(shuffled, features) == base);
    }
  }
  SUBCASE("n copies of one member equal that member") {
    for (std::size_t n : {2u, 3u, 5u, 7u}) {
      const std::vector<Member> copies(n, members[2]);
      const std::span<const Member> one(members.data() + 2, 1);
      CHECK(ensemble_predict(copies, features) == ensemble_predict(one, features));
    }
  }
  SUBCASE("registry mismatch") {
    auto other = members;
    const std::vector<std::uint32_t> first = {0, 1};
    const Eigen::MatrixXd u = expansion::expand(train, other[1].rhl);
    other[1].classifier = analytic::fit_initial(
        u.topRows(20), analytic::LabelBlock::from_labels(cyclic(20, first), first), 1.0);
    try {
      ensemble_predict(other, features);
      FAIL("expected registry mismatch");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kRegistryMismatch);
    }
  }
  SUBCASE("empty ensemble") {
    CHECK_THROWS_AS(ensemble_predict(std::span<const Member>{}, features), Error);
  }
}
