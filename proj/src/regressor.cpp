#include "qoe/regressor.hpp"

#include <cmath>

#include "qoe/error.hpp"

namespace qoe {

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::linear_regression: return "linear_regression";
    case ModelKind::decision_tree: return "decision_tree";
    case ModelKind::random_forest: return "random_forest";
    case ModelKind::gradient_boosting: return "gradient_boosting";
    case ModelKind::knn: return "knn";
    case ModelKind::mlp: return "mlp";
    case ModelKind::attention_mlp: return "attention_mlp";
    case ModelKind::tabnet: return "tabnet";
  }
  return "unknown";
}

std::optional<ModelKind> parse_model_kind(std::string_view name) {
  for (auto k : kAllModelKinds)
    if (to_string(k) == name) return k;
  return std::nullopt;
}

std::vector<double> Regressor::predict(const Matrix& x) const {
  auto out = std::visit([&](const auto& m) { return m.predict(x); }, state);
  for (double v : out)
    if (!std::isfinite(v))
      fail(ErrorKind::numerical, std::string(to_string(kind)) + " produced a non-finite prediction");
  return out;
}

Regressor train_regressor(ModelKind kind, const ModelParams& p, const Matrix& x,
                          std::span<const double> y, std::uint64_t seed) {
  Regressor r;
  r.kind = kind;
  switch (kind) {
    case ModelKind::linear_regression: r.state = fit_linear(x, y, p.linear); break;
    case ModelKind::decision_tree: r.state = fit_tree(x, y, p.tree); break;
    case ModelKind::random_forest: r.state = fit_forest(x, y, p.forest, seed); break;
    case ModelKind::gradient_boosting: r.state = fit_boosted(x, y, p.boosting); break;
    case ModelKind::knn: r.state = fit_knn(x, y, p.knn); break;
    case ModelKind::mlp: r.state = train_mlp(x, y, p.mlp, seed); break;
    case ModelKind::attention_mlp: r.state = train_attention_mlp(x, y, p.attention_mlp, seed); break;
    case ModelKind::tabnet: r.state = train_tabnet_lite(x, y, p.tabnet, seed); break;
  }
  return r;
}

}  // namespace qoe
