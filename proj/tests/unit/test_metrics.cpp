#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "test_support.hpp"
#include "tsacl/error.hpp"
#include "tsacl/metrics.hpp"

using namespace tsacl;
using namespace tsacl::metrics;

namespace {

AccuracyMatrix matrix_of(const std::vector<std::vector<double>>& rows) {
  AccuracyMatrix m;
  for (const auto& r : rows) m.push_row(r);
  return m;
}

// Scans every defined earlier row for each past task, with no shortcuts.
double forgetting_by_scan(const std::vector<std::vector<double>>& rows, std::size_t t) {
  long double total = 0.0L;
  for (std::size_t i = 0; i + 1 < t; ++i) {
    double best = -1.0;
    for (std::size_t j = 0; j + 1 < t; ++j) {
      if (i < rows[j].size()) best = std::max(best, rows[j][i]);
    }
    total += static_cast<long double>(best) - rows[t - 1][i];
  }
  return static_cast<double>(total / static_cast<long double>(t - 1));
}

}  // namespace

TEST_CASE("task_accuracy") {
  const std::vector<std::uint32_t> truth = {0, 1, 2, 3};
  CHECK(task_accuracy(truth, truth) == 1.0);
  CHECK(task_accuracy(std::vector<std::uint32_t>{1, 2, 3, 0}, truth) == 0.0);
  CHECK(task_accuracy(std::vector<std::uint32_t>{0, 1, 2, 0}, truth) == 0.75);
  CHECK_THROWS_AS(task_accuracy(std::vector<std::uint32_t>{}, std::vector<std::uint32_t>{}), Error);
  CHECK_THROWS_AS(task_accuracy(std::vector<std::uint32_t>{0}, truth), Error);
}

TEST_CASE("AccuracyMatrix shape") {
  AccuracyMatrix m;
  CHECK_THROWS_AS(m.push_row({0.5, 0.5}), Error);
  m.push_row({1.0});
  CHECK_THROWS_AS(m.push_row({1.0}), Error);
  CHECK_THROWS_AS(m.push_row({1.0, 1.5}), Error);
  CHECK_THROWS_AS(m.push_row({1.0, std::nan("")}), Error);
  m.push_row({0.8, 1.0});
  CHECK(m.num_tasks() == 2);
  CHECK(m.at(2, 1) == 0.8);
  CHECK_THROWS_AS(m.at(1, 2), Error);
  CHECK_THROWS_AS(m.at(3, 1), Error);
}

TEST_CASE("average_accuracy") {
  const auto m = matrix_of({{0.6}, {0.8, 1.0}});
  CHECK(average_accuracy(m, 1) == 0.6);
  CHECK(average_accuracy(m, 2) == 0.9);
  CHECK(average_accuracy(matrix_of({{0.5}, {0.5, 0.5}, {0.5, 0.7, 0.9}}), 3) == 0.7);
  CHECK_THROWS_AS(average_accuracy(m, 3), Error);
  CHECK_THROWS_AS(average_accuracy(m, 0), Error);
}

TEST_CASE("forgetting") {
  CHECK(forgetting(matrix_of({{1.0}, {0.9, 1.0}}), 2) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(forgetting(matrix_of({{0.7}, {0.9, 1.0}}), 2) < 0.0);

  const std::vector<std::vector<double>> rows = {{1.0}, {0.8, 0.9}, {0.7, 0.95, 1.0}};
  const auto m = matrix_of(rows);
  CHECK(forgetting(m, 3) == 0.125);
  CHECK(forgetting_by_scan(rows, 3) == doctest::Approx(0.125).epsilon(1e-15));
  CHECK_THROWS_AS(forgetting(m, 1), Error);
  CHECK_THROWS_AS(forgetting(m, 4), Error);
}

TEST_CASE("forgetting agrees with a brute-force scan on random matrices") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> correct(0, 40);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t tasks = 2 + trial % 7;
    std::vector<std::vector<double>> rows;
    for (std::size_t t = 1; t <= tasks; ++t) {
      std::vector<double> row;
      for (std::size_t i = 0; i < t; ++i) row.push_back(correct(rng) / 40.0);
      rows.push_back(row);
    }
    const auto m = matrix_of(rows);
    for (std::size_t t = 2; t <= tasks; ++t) {
      CHECK(forgetting(m, t) == doctest::Approx(forgetting_by_scan(rows, t)).epsilon(1e-12));
    }
  }
}

TEST_CASE("relabeling classes leaves the metrics unchanged") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::uint32_t> cls(0, 5);
  std::vector<std::uint32_t> perm = {3, 0, 5, 1, 4, 2};
  AccuracyMatrix plain, relabeled;
  for (std::size_t t = 1; t <= 4; ++t) {
    std::vector<double> a, b;
    for (std::size_t i = 0; i < t; ++i) {
      std::vector<std::uint32_t> pred(30), truth(30), pred2(30), truth2(30);
      for (std::size_t k = 0; k < 30; ++k) {
        pred[k] = cls(rng);
        truth[k] = cls(rng);
        pred2[k] = perm[pred[k]];
        truth2[k] = perm[truth[k]];
      }
      a.push_back(task_accuracy(pred, truth));
      b.push_back(task_accuracy(pred2, truth2));
    }
    plain.push_row(a);
    relabeled.push_row(b);
  }
  for (std::size_t t = 1; t <= 4; ++t) {
    CHECK(average_accuracy(plain, t) == average_accuracy(relabeled, t));
    if (t >= 2) CHECK(forgetting(plain, t) == forgetting(relabeled, t));
  }
}

TEST_CASE("a perfect model has no forgetting") {
  AccuracyMatrix m;
  for (std::size_t t = 1; t <= 10; ++t) {
    m.push_row(std::vector<double>(t, 1.0));
    CHECK(average_accuracy(m, t) == 1.0);
    if (t >= 2) CHECK(forgetting(m, t) == 0.0);
  }
}

TEST_CASE("variance_ratio") {
  SUBCASE("identical class means") {
    Eigen::MatrixXd x(4, 1);
    x << -1, 1, -1, 1;
    const auto vr = variance_ratio(x, std::vector<std::uint32_t>{0, 0, 1, 1});
    CHECK(vr.between_trace == 0.0);
    CHECK(vr.within_trace > 0.0);
    CHECK(vr.value() == 0.0);
  }
  SUBCASE("point masses are unbounded") {
    Eigen::MatrixXd x(4, 2);
    x << 1, 2, 1, 2, 3, 4, 3, 4;
    const auto vr = variance_ratio(x, std::vector<std::uint32_t>{0, 0, 1, 1});
    CHECK(vr.unbounded);
    CHECK(std::isinf(vr.value()));
  }
  SUBCASE("hand-computed weighted traces") {
    // class 0: {0, 2} mean 1, var 1; class 1: {10} mean 10. overall mean 4.
    Eigen::MatrixXd x(3, 1);
    x << 0, 2, 10;
    const auto vr = variance_ratio(x, std::vector<std::uint32_t>{0, 0, 1});
    CHECK(vr.between_trace == doctest::Approx((2.0 / 3.0) * 9.0 + (1.0 / 3.0) * 36.0));
    CHECK(vr.within_trace == doctest::Approx((2.0 / 3.0) * 1.0));
  }
  SUBCASE("Gaussian classes at +-1 with unit variance") {
    std::mt19937_64 rng(99);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const Eigen::Index n = 10000;
    Eigen::MatrixXd x(2 * n, 1);
    std::vector<std::uint32_t> labels(2 * n);
    for (Eigen::Index i = 0; i < 2 * n; ++i) {
      const bool second = i >= n;
      x(i, 0) = (second ? 1.0 : -1.0) + gauss(rng);
      labels[static_cast<std::size_t>(i)] = second ? 1 : 0;
    }
    CHECK(std::abs(variance_ratio(x, labels).value() - 1.0) <= 0.05);
  }
  SUBCASE("translation invariance and quadratic scaling") {
    const Eigen::MatrixXd x = testing::random_matrix(60, 5, 3);
    std::vector<std::uint32_t> labels(60);
    for (std::size_t i = 0; i < 60; ++i) labels[i] = static_cast<std::uint32_t>(i % 3);
    const auto base = variance_ratio(x, labels);
    Eigen::RowVectorXd shift = testing::random_matrix(1, 5, 4, 10.0);
    const auto moved = variance_ratio(x.rowwise() + shift, labels);
    CHECK(moved.value() == doctest::Approx(base.value()).epsilon(1e-10));
    const double alpha = 3.5;
    const auto scaled = variance_ratio(alpha * x, labels);
    CHECK(scaled.between_trace == doctest::Approx(alpha * alpha * base.between_trace).epsilon(1e-12));
    CHECK(scaled.within_trace == doctest::Approx(alpha * alpha * base.within_trace).epsilon(1e-12));
    CHECK(scaled.value() == doctest::Approx(base.value()).epsilon(1e-12));
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(variance_ratio(Eigen::MatrixXd::Ones(3, 2), std::vector<std::uint32_t>{0, 0, 0}), Error);
    CHECK_THROWS_AS(variance_ratio(Eigen::MatrixXd::Ones(3, 2), std::vector<std::uint32_t>{0, 1}), Error);
  }
}
