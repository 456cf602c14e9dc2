#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "qoe/error.hpp"
#include "qoe/models_classical.hpp"

using namespace qoe;

namespace {

struct Problem {
  Matrix x;
  std::vector<double> y;
};

// Small integer grids produce plenty of duplicate values and exact ties.
Problem random_problem(std::mt19937_64& rng, bool coarse) {
  std::uniform_int_distribution<std::size_t> nd(2, 50), dd(1, 5);
  const std::size_t n = nd(rng), d = dd(rng);
  std::uniform_int_distribution<int> grid(0, 4);
  std::normal_distribution<double> g(0.0, 1.0);
  Problem p{Matrix(n, d), std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) p.x(i, j) = coarse ? grid(rng) : g(rng);
    p.y[i] = coarse ? grid(rng) : g(rng);
  }
  return p;
}

}  // namespace

TEST_CASE("root split matches the brute-force minimizer") {
  std::mt19937_64 rng(101);
  for (int inst = 0; inst < 200; ++inst) {
    const auto p = random_problem(rng, inst % 2 == 0);
    const TreeModel t = fit_tree(p.x, p.y, {1, 1});
    std::vector<std::size_t> rows(p.x.rows());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    const auto s = oracle::best_split(p.x, p.y, rows, 1);
    const bool constant = std::all_of(p.y.begin(), p.y.end(), [&](double v) { return v == p.y[0]; });
    if (constant || s.feature < 0) {
      CHECK(t.nodes[0].is_leaf());
      continue;
    }
    REQUIRE_FALSE(t.nodes[0].is_leaf());
    CHECK(t.nodes[0].feature == s.feature);
    CHECK(t.nodes[0].threshold == s.threshold);
  }
}

TEST_CASE("full trees match the oracle tree") {
  std::mt19937_64 rng(202);
  for (int inst = 0; inst < 200; ++inst) {
    const auto p = random_problem(rng, inst % 2 == 1);
    const int depth = inst % 3 == 0 ? kUnlimitedDepth : 1 + inst % 4;
    const std::size_t leaf = std::min<std::size_t>(1 + inst % 3, p.x.rows() / 2);
    const TreeModel t = fit_tree(p.x, p.y, {depth, leaf});
    const auto o = oracle::build_tree(p.x, p.y, depth, leaf);
    CHECK(t.nodes.size() == o.nodes.size());
    for (std::size_t i = 0; i < p.x.rows(); ++i) CHECK(t.predict_one(p.x.row(i)) == o.predict(p.x.row(i)));
    const Matrix q = oracle::random_matrix(10, p.x.cols(), rng, 2.0);
    for (std::size_t i = 0; i < q.rows(); ++i) CHECK(t.predict_one(q.row(i)) == o.predict(q.row(i)));
  }
}

TEST_CASE("tree stopping rules") {
  std::mt19937_64 rng(3);
  const Matrix x = oracle::random_matrix(64, 3, rng);
  std::vector<double> y(64);
  for (std::size_t i = 0; i < 64; ++i) y[i] = x(i, 0) * 2 + x(i, 1);
  CHECK(fit_tree(x, y, {3, 1}).depth() <= 3);
  CHECK(fit_tree(x, y, {1, 1}).nodes.size() == 3);
  const TreeModel big_leaf = fit_tree(x, y, {kUnlimitedDepth, 20});
  for (const auto& n : big_leaf.nodes) CHECK((n.is_leaf() || n.left >= 0));
  const std::vector<double> flat(64, 3.0);
  const TreeModel stump = fit_tree(x, flat, {});
  CHECK(stump.nodes.size() == 1);
  CHECK(stump.nodes[0].value == 3.0);
  CHECK_THROWS_AS(fit_tree(Matrix(3, 1), std::vector<double>{1, 2, 3}, {4, 2}), Error);
}

TEST_CASE("unlimited tree interpolates distinct rows") {
  std::mt19937_64 rng(4);
  const Matrix x = oracle::random_matrix(40, 2, rng);
  std::vector<double> y(40);
  for (auto& v : y) v = std::normal_distribution<double>(0, 1)(rng);
  const TreeModel t = fit_tree(x, y, {kUnlimitedDepth, 1});
  const auto pred = t.predict(x);
  for (std::size_t i = 0; i < y.size(); ++i) CHECK(pred[i] == y[i]);
}

TEST_CASE("forest with one full-feature tree and no bootstrap is a tree") {
  std::mt19937_64 rng(5);
  for (int inst = 0; inst < 30; ++inst) {
    const auto p = random_problem(rng, inst % 2 == 0);
    ForestParams fp;
    fp.n_trees = 1;
    fp.bootstrap = false;
    fp.max_features = p.x.cols();
    fp.tree = {4, 1};
    const ForestModel f = fit_forest(p.x, p.y, fp, 77);
    const TreeModel t = fit_tree(p.x, p.y, fp.tree);
    CHECK(f.trees[0].nodes == t.nodes);
    CHECK(f.predict(p.x) == t.predict(p.x));
  }
}

TEST_CASE("forest defaults and determinism") {
  std::mt19937_64 rng(6);
  const Matrix x = oracle::random_matrix(80, 7, rng);
  std::vector<double> y(80);
  for (std::size_t i = 0; i < 80; ++i) y[i] = x(i, 0) - x(i, 3);
  ForestParams fp;
  fp.n_trees = 10;
  const ForestModel a = fit_forest(x, y, fp, 1);
  CHECK(a.trees.size() == 10);
  CHECK(a.max_features == 2);
  CHECK(a.predict(x) == fit_forest(x, y, fp, 1).predict(x));
  CHECK(a.predict(x) != fit_forest(x, y, fp, 2).predict(x));
  // The forest average equals the mean of the member trees.
  const auto pred = a.predict(x);
  double m = 0;
  for (const auto& t : a.trees) m += t.predict_one(x.row(0));
  CHECK(pred[0] == doctest::Approx(m / 10).epsilon(1e-12));
}

TEST_CASE("single full-depth boosting stage fits the training data") {
  std::mt19937_64 rng(7);
  const Matrix x = oracle::random_matrix(50, 3, rng);
  std::vector<double> y(50);
  for (auto& v : y) v = std::normal_distribution<double>(10, 3)(rng);
  const BoostedModel b = fit_boosted(x, y, {1, 1.0, {kUnlimitedDepth, 1}});
  const auto pred = b.predict(x);
  for (std::size_t i = 0; i < y.size(); ++i)
    CHECK(std::abs(pred[i] - y[i]) <= 2.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(y[i]), std::abs(b.initial)));
}

TEST_CASE("boosting starts at the mean and training loss never rises") {
  std::mt19937_64 rng(8);
  const Matrix x = oracle::random_matrix(120, 4, rng);
  std::vector<double> y(120);
  for (std::size_t i = 0; i < 120; ++i) y[i] = std::sin(x(i, 0)) + x(i, 1) * x(i, 2);
  const BoostedModel b = fit_boosted(x, y, {50, 0.1, {3, 1}});
  CHECK(b.initial == doctest::Approx(std::accumulate(y.begin(), y.end(), 0.0) / 120.0));
  const auto curve = staged_mse(b, x, y);
  REQUIRE(curve.size() == 51);
  for (std::size_t m = 1; m < curve.size(); ++m) CHECK(curve[m] <= curve[m - 1] + 1e-12);
  CHECK(curve.back() < 0.5 * curve.front());
}

TEST_CASE("knn with k = n predicts the mean") {
  std::mt19937_64 rng(9);
  const Matrix x = oracle::random_matrix(25, 3, rng);
  std::vector<double> y(25);
  for (auto& v : y) v = std::normal_distribution<double>(0, 5)(rng);
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / 25.0;
  const KnnModel m = fit_knn(x, y, {25});
  for (double p : m.predict(oracle::random_matrix(10, 3, rng))) CHECK(p == doctest::Approx(mean).epsilon(1e-14));
}

TEST_CASE("knn matches the sort-everything oracle") {
  std::mt19937_64 rng(10);
  std::uniform_int_distribution<int> grid(0, 3);
  for (int inst = 0; inst < 50; ++inst) {
    Matrix x(30, 2);
    std::vector<double> y(30);
    for (std::size_t i = 0; i < 30; ++i) {
      x(i, 0) = grid(rng);  // many equidistant neighbours
      x(i, 1) = grid(rng);
      y[i] = static_cast<double>(i);
    }
    const std::size_t k = 1 + inst % 7;
    const KnnModel m = fit_knn(x, y, {k});
    Matrix q(5, 2);
    for (std::size_t i = 0; i < 5; ++i) q(i, 0) = grid(rng), q(i, 1) = grid(rng);
    const auto pred = m.predict(q);
    for (std::size_t i = 0; i < 5; ++i) CHECK(pred[i] == oracle::knn_predict(x, y, q.row(i), k));
  }
  CHECK_THROWS_AS(fit_knn(Matrix(3, 1), std::vector<double>{1, 2, 3}, {4}), Error);
}

TEST_CASE("linear regression recovers a planted model") {
  std::mt19937_64 rng(11);
  const std::size_t n = 200, d = 6;
  const Matrix x = oracle::random_matrix(n, d, rng, 3.0);
  const std::vector<double> w{1.5, -2.0, 0.25, 4.0, 0.0, -0.75};
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = 7.0;
    for (std::size_t j = 0; j < d; ++j) y[i] += w[j] * x(i, j);
  }
  const LinearModel m = fit_linear(x, y);
  for (std::size_t j = 0; j < d; ++j) CHECK(std::abs(m.coef[j] - w[j]) < 1e-6);
  CHECK(std::abs(m.intercept - 7.0) < 1e-6);
  CHECK_THROWS_AS(fit_linear(Matrix(3, 5), std::vector<double>{1, 2, 3}), Error);
}
