#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "qoe/error.hpp"
#include "tree_builder.hpp"

namespace qoe {

namespace {

struct Candidate {
  int feature = -1;
  double threshold = 0.0;
  double loss = std::numeric_limits<double>::infinity();
  std::size_t n_left = 0;
};

class Builder {
 public:
  Builder(const Matrix& x, std::span<const double> y, const TreeParams& params,
          std::size_t max_features, Rng* rng)
      : x_(x), y_(y), params_(params), max_features_(max_features), rng_(rng) {
    all_features_.resize(x.cols());
    std::iota(all_features_.begin(), all_features_.end(), std::size_t{0});
  }

  TreeModel build(std::vector<std::size_t> rows) {
    TreeModel tree;
    tree.n_features = x_.cols();
    nodes_ = &tree.nodes;
    grow(rows, 0);
    return tree;
  }

 private:
  std::int32_t grow(std::vector<std::size_t>& rows, int depth) {
    const auto id = static_cast<std::int32_t>(nodes_->size());
    nodes_->emplace_back();

    const double n = static_cast<double>(rows.size());
    double sum = 0.0;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (auto r : rows) {
      sum += y_[r];
      lo = std::min(lo, y_[r]);
      hi = std::max(hi, y_[r]);
    }
    const double mean = sum / n;
    (*nodes_)[id].value = mean;

    const bool depth_ok = params_.max_depth <= 0 || depth < params_.max_depth;
    if (!depth_ok || rows.size() < 2 * params_.min_samples_leaf || lo == hi) return id;

    const Candidate best = find_split(rows, mean);
    if (best.feature < 0) return id;

    std::vector<std::size_t> left, right;
    left.reserve(best.n_left);
    right.reserve(rows.size() - best.n_left);
    const auto j = static_cast<std::size_t>(best.feature);
    for (auto r : rows) (x_(r, j) <= best.threshold ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();

    const std::int32_t l = grow(left, depth + 1);
    const std::int32_t rr = grow(right, depth + 1);
    TreeNode& node = (*nodes_)[id];
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.left = l;
    node.right = rr;
    return id;
  }

  std::vector<std::size_t> candidate_features() {
    if (max_features_ >= x_.cols() || rng_ == nullptr) return all_features_;
    std::vector<std::size_t> pool = all_features_;
    for (std::size_t i = 0; i < max_features_; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
      std::swap(pool[i], pool[pick(*rng_)]);
    }
    pool.resize(max_features_);
    std::sort(pool.begin(), pool.end());
    return pool;
  }

  Candidate find_split(const std::vector<std::size_t>& rows, double mean) {
    const std::size_t n = rows.size();
    const std::size_t min_leaf = std::max<std::size_t>(params_.min_samples_leaf, 1);
    // Centred targets keep the prefix-sum SSE well conditioned.
    double total_sq = 0.0;
    for (auto r : rows) total_sq += (y_[r] - mean) * (y_[r] - mean);
    const double tie_tol = 1e-12 * total_sq;

    Candidate best;
    std::vector<std::size_t> order(n);
    for (std::size_t j : candidate_features()) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return x_(rows[a], j) < x_(rows[b], j);
      });
      double s_left = 0.0, q_left = 0.0;
      double s_total = 0.0;
      for (auto r : rows) s_total += y_[r] - mean;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        const double v = y_[rows[order[i]]] - mean;
        s_left += v;
        q_left += v * v;
        const std::size_t n_left = i + 1;
        const std::size_t n_right = n - n_left;
        if (n_left < min_leaf) continue;
        if (n_right < min_leaf) break;
        const double a = x_(rows[order[i]], j);
        const double b = x_(rows[order[i + 1]], j);
        if (!(a < b)) continue;
        const double s_right = s_total - s_left;
        const double q_right = total_sq - q_left;
        const double loss = (q_left - s_left * s_left / static_cast<double>(n_left)) +
                            (q_right - s_right * s_right / static_cast<double>(n_right));
        if (loss < best.loss - tie_tol) {
          double t = a + 0.5 * (b - a);
          if (!(t < b)) t = a;
          best = {static_cast<int>(j), t, loss, n_left};
        }
      }
    }
    return best;
  }

  const Matrix& x_;
  std::span<const double> y_;
  TreeParams params_;
  std::size_t max_features_;
  Rng* rng_;
  std::vector<std::size_t> all_features_;
  std::vector<TreeNode>* nodes_ = nullptr;
};

void check_xy(const Matrix& x, std::span<const double> y, std::string_view who) {
  if (x.rows() != y.size())
    fail(ErrorKind::shape, std::string(who) + ": X has " + std::to_string(x.rows()) +
                               " rows but y has " + std::to_string(y.size()));
  if (x.rows() == 0) fail(ErrorKind::invalid_argument, std::string(who) + ": no training rows");
}

}  // namespace

namespace detail {

TreeModel grow_tree(const Matrix& x, std::span<const double> y, std::vector<std::size_t> rows,
                    const TreeParams& params, std::size_t max_features, Rng* rng) {
  return Builder(x, y, params, max_features, rng).build(std::move(rows));
}

}  // namespace detail

double TreeModel::predict_one(std::span<const double> row) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const TreeNode& node = nodes[i];
    i = static_cast<std::size_t>(row[static_cast<std::size_t>(node.feature)] <= node.threshold
                                     ? node.left
                                     : node.right);
  }
  return nodes[i].value;
}

std::vector<double> TreeModel::predict(const Matrix& x) const {
  if (x.cols() != n_features)
    fail(ErrorKind::shape, "tree expects " + std::to_string(n_features) + " features, got " +
                               std::to_string(x.cols()));
  std::vector<double> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) out[i] = predict_one(x.row(i));
  return out;
}

std::size_t TreeModel::depth() const {
  std::vector<std::size_t> d(nodes.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, d[i]);
    if (!nodes[i].is_leaf()) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    }
  }
  return deepest;
}

TreeModel fit_tree(const Matrix& x, std::span<const double> y, const TreeParams& params) {
  check_xy(x, y, "fit_tree");
  if (params.min_samples_leaf == 0)
    fail(ErrorKind::invalid_argument, "fit_tree: min_samples_leaf must be >= 1");
  if (x.rows() < 2 * params.min_samples_leaf)
    fail(ErrorKind::invalid_argument, "fit_tree: need at least 2*min_samples_leaf = " +
                                          std::to_string(2 * params.min_samples_leaf) +
                                          " rows, got " + std::to_string(x.rows()));
  std::vector<std::size_t> rows(x.rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return detail::grow_tree(x, y, std::move(rows), params, x.cols(), nullptr);
}

ForestModel fit_forest(const Matrix& x, std::span<const double> y, const ForestParams& params,
                       std::uint64_t seed) {
  check_xy(x, y, "fit_forest");
  if (params.n_trees == 0) fail(ErrorKind::invalid_argument, "fit_forest: n_trees must be >= 1");
  if (params.tree.min_samples_leaf == 0)
    fail(ErrorKind::invalid_argument, "fit_forest: min_samples_leaf must be >= 1");
  if (x.rows() < 2 * params.tree.min_samples_leaf)
    fail(ErrorKind::invalid_argument, "fit_forest: too few rows for min_samples_leaf");
  const std::size_t d = x.cols();
  ForestModel forest;
  forest.max_features =
      params.max_features == 0 ? std::max<std::size_t>(1, d / 3) : std::min(params.max_features, d);
  const std::size_t n = x.rows();
  for (std::size_t t = 0; t < params.n_trees; ++t) {
    const std::uint64_t tree_seed = derive_seed(seed, tag_of("tree"), t);
    Rng rng(tree_seed);
    std::vector<std::size_t> rows(n);
    if (params.bootstrap) {
      std::uniform_int_distribution<std::size_t> draw(0, n - 1);
      for (auto& r : rows) r = draw(rng);
    } else {
      std::iota(rows.begin(), rows.end(), std::size_t{0});
    }
    forest.trees.push_back(
        detail::grow_tree(x, y, std::move(rows), params.tree, forest.max_features, &rng));
    forest.tree_seeds.push_back(tree_seed);
  }
  return forest;
}

std::vector<double> ForestModel::predict(const Matrix& x) const {
  std::vector<double> out(x.rows(), 0.0);
  for (const auto& tree : trees) {
    const auto p = tree.predict(x);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += p[i];
  }
  const double t = static_cast<double>(trees.size());
  for (auto& v : out) v /= t;
  return out;
}

BoostedModel fit_boosted(const Matrix& x, std::span<const double> y, const BoostingParams& params) {
  check_xy(x, y, "fit_boosted");
  if (params.n_stages == 0) fail(ErrorKind::invalid_argument, "fit_boosted: n_stages must be >= 1");
  if (!(params.learning_rate > 0.0 && params.learning_rate <= 1.0))
    fail(ErrorKind::invalid_argument, "fit_boosted: learning_rate must lie in (0,1]");
  if (params.tree.min_samples_leaf == 0 || x.rows() < 2 * params.tree.min_samples_leaf)
    fail(ErrorKind::invalid_argument, "fit_boosted: too few rows for min_samples_leaf");

  BoostedModel model;
  model.learning_rate = params.learning_rate;
  model.initial = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  std::vector<double> current(y.size(), model.initial);
  std::vector<double> residual(y.size());
  std::vector<std::size_t> rows(x.rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  for (std::size_t m = 0; m < params.n_stages; ++m) {
    for (std::size_t i = 0; i < y.size(); ++i) residual[i] = y[i] - current[i];
    TreeModel stage = detail::grow_tree(x, residual, rows, params.tree, x.cols(), nullptr);
    for (std::size_t i = 0; i < y.size(); ++i)
      current[i] += params.learning_rate * stage.predict_one(x.row(i));
    model.stages.push_back(std::move(stage));
  }
  return model;
}

std::vector<double> BoostedModel::predict(const Matrix& x) const {
  std::vector<double> out(x.rows(), initial);
  for (const auto& stage : stages) {
    const auto p = stage.predict(x);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += learning_rate * p[i];
  }
  return out;
}

std::vector<double> staged_mse(const BoostedModel& model, const Matrix& x, std::span<const double> y) {
  std::vector<double> current(x.rows(), model.initial);
  auto mse = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < current.size(); ++i) s += (y[i] - current[i]) * (y[i] - current[i]);
    return s / static_cast<double>(current.size());
  };
  std::vector<double> curve{mse()};
  for (const auto& stage : model.stages) {
    const auto p = stage.predict(x);
    for (std::size_t i = 0; i < current.size(); ++i) current[i] += model.learning_rate * p[i];
    curve.push_back(mse());
  }
  return curve;
}

KnnModel fit_knn(const Matrix& x, std::span<const double> y, const KnnParams& params) {
  check_xy(x, y, "fit_knn");
  if (params.k < 1 || params.k > x.rows())
    fail(ErrorKind::invalid_argument, "fit_knn: k = " + std::to_string(params.k) +
                                          " must lie in [1, " + std::to_string(x.rows()) + "]");
  return KnnModel{x, std::vector<double>(y.begin(), y.end()), params.k};
}

std::vector<double> KnnModel::predict(const Matrix& queries) const {
  if (queries.cols() != x.cols())
    fail(ErrorKind::shape, "knn expects " + std::to_string(x.cols()) + " features, got " +
                               std::to_string(queries.cols()));
  const std::size_t n = x.rows();
  std::vector<std::pair<double, std::size_t>> dist(n);
  std::vector<double> out(queries.rows());
  for (std::size_t q = 0; q < queries.rows(); ++q) {
    const auto qr = queries.row(q);
    for (std::size_t i = 0; i < n; ++i) {
      const auto xr = x.row(i);
      double d2 = 0.0;
      for (std::size_t j = 0; j < xr.size(); ++j) d2 += (xr[j] - qr[j]) * (xr[j] - qr[j]);
      dist[i] = {d2, i};
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i) s += y[dist[i].second];
    out[q] = s / static_cast<double>(k);
  }
  return out;
}

}  // namespace qoe
