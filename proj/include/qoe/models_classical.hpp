#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qoe/matrix.hpp"

namespace qoe {

// ---------------------------------------------------------------------------
// Linear regression

struct LinearParams {
  double ridge_jitter = 1e-8;
};

struct LinearModel {
  std::vector<double> coef;
  double intercept = 0.0;

  std::vector<double> predict(const Matrix& x) const;
};

// Least squares via the normal equations; the jitter is added to the feature
// part of the Gram diagonal only. Needs n >= d + 1.
LinearModel fit_linear(const Matrix& x, std::span<const double> y, const LinearParams& params = {});

// ---------------------------------------------------------------------------
// Regression tree

inline constexpr int kUnlimitedDepth = 0;

struct TreeParams {
  int max_depth = 12;  // kUnlimitedDepth (or any value <= 0) disables the limit
  std::size_t min_samples_leaf = 2;
};

// Internal node when feature >= 0 (x[feature] <= threshold goes left),
// leaf otherwise.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  double value = 0.0;

  bool is_leaf() const noexcept { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct TreeModel {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  std::size_t n_features = 0;

  double predict_one(std::span<const double> row) const;
  std::vector<double> predict(const Matrix& x) const;
  std::size_t depth() const;
};

// Exhaustive CART split search: every feature, every midpoint between
// consecutive distinct values, two-region SSE criterion. Equal losses go to
// the lower feature index, then the lower threshold.
TreeModel fit_tree(const Matrix& x, std::span<const double> y, const TreeParams& params = {});

// ---------------------------------------------------------------------------
// Random forest

struct ForestParams {
  std::size_t n_trees = 100;
  std::size_t max_features = 0;  // 0 selects max(1, d / 3)
  bool bootstrap = true;
  TreeParams tree;
};

struct ForestModel {
  std::vector<TreeModel> trees;
  std::vector<std::uint64_t> tree_seeds;
  std::size_t max_features = 0;

  std::vector<double> predict(const Matrix& x) const;
};

ForestModel fit_forest(const Matrix& x, std::span<const double> y, const ForestParams& params,
                       std::uint64_t seed);

// ---------------------------------------------------------------------------
// Gradient boosting (squared loss)

struct BoostingParams {
  std::size_t n_stages = 200;
  double learning_rate = 0.1;
  TreeParams tree{3, 1};
};

struct BoostedModel {
  double initial = 0.0;
  double learning_rate = 0.1;
  std::vector<TreeModel> stages;

  std::vector<double> predict(const Matrix& x) const;
};

BoostedModel fit_boosted(const Matrix& x, std::span<const double> y, const BoostingParams& params);

// Training MSE after 0, 1, ..., M stages.
std::vector<double> staged_mse(const BoostedModel& model, const Matrix& x, std::span<const double> y);

// ---------------------------------------------------------------------------
// k nearest neighbours

struct KnnParams {
  std::size_t k = 5;
};

struct KnnModel {
  Matrix x;
  std::vector<double> y;
  std::size_t k = 5;

  // Exact Euclidean search; equal distances prefer the lower training row.
  std::vector<double> predict(const Matrix& queries) const;
};

KnnModel fit_knn(const Matrix& x, std::span<const double> y, const KnnParams& params = {});

}  // namespace qoe
