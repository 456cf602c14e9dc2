#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "qoe/matrix.hpp"
#include "qoe/models_classical.hpp"
#include "qoe/models_deep.hpp"

namespace qoe {

enum class ModelKind {
  linear_regression,
  decision_tree,
  random_forest,
  gradient_boosting,
  knn,
  mlp,
  attention_mlp,
  tabnet,
};

inline constexpr std::array<ModelKind, 8> kAllModelKinds = {
    ModelKind::linear_regression, ModelKind::decision_tree, ModelKind::random_forest,
    ModelKind::gradient_boosting, ModelKind::knn,           ModelKind::mlp,
    ModelKind::attention_mlp,     ModelKind::tabnet,
};

std::string_view to_string(ModelKind kind);
std::optional<ModelKind> parse_model_kind(std::string_view name);

// Hyperparameters for every model kind; only the entry for the kind being
// trained is read.
struct ModelParams {
  LinearParams linear;
  TreeParams tree;
  ForestParams forest;
  BoostingParams boosting;
  KnnParams knn;
  MlpConfig mlp;
  MlpConfig attention_mlp;
  TabNetConfig tabnet;
};

// A trained predictor of any kind.
struct Regressor {
  ModelKind kind = ModelKind::linear_regression;
  std::variant<LinearModel, TreeModel, ForestModel, BoostedModel, KnnModel, MlpModel, TabNetModel>
      state;

  std::vector<double> predict(const Matrix& x) const;
};

Regressor train_regressor(ModelKind kind, const ModelParams& params, const Matrix& x,
                          std::span<const double> y, std::uint64_t seed);

}  // namespace qoe
