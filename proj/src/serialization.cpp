#include "qoe/serialization.hpp"

#include "qoe/error.hpp"

namespace qoe {

namespace {

template <typename F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const Json::exception& e) {
    fail(ErrorKind::parse, std::string(what) + ": malformed document: " + e.what());
  }
}

Json tree_params(const TreeParams& p) {
  return {{"max_depth", p.max_depth}, {"min_samples_leaf", p.min_samples_leaf}};
}

Json mlp_params(const MlpConfig& c) {
  return {{"hidden", c.hidden},          {"attention_hidden", c.attention_hidden},
          {"dropout", c.dropout},        {"learning_rate", c.learning_rate},
          {"batch_size", c.batch_size},  {"epochs", c.epochs}};
}
MlpConfig mlp_params_from(const Json& j) {
  MlpConfig c;
  c.hidden = j.at("hidden").get<std::vector<std::size_t>>();
  c.attention_hidden = j.at("attention_hidden").get<std::size_t>();
  c.dropout = j.at("dropout").get<double>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.epochs = j.at("epochs").get<std::size_t>();
  return c;
}

Json tabnet_params(const TabNetConfig& c) {
  return {{"n_steps", c.n_steps},
          {"gamma", c.gamma},
          {"sparsity", c.sparsity},
          {"step_width", c.step_width},
          {"batch_size", c.batch_size},
          {"virtual_batch", c.virtual_batch},
          {"max_epochs", c.max_epochs},
          {"patience", c.patience},
          {"learning_rate", c.learning_rate},
          {"momentum", c.momentum},
          {"validation_fraction", c.validation_fraction}};
}
TabNetConfig tabnet_params_from(const Json& j) {
  TabNetConfig c;
  c.n_steps = j.at("n_steps").get<std::size_t>();
  c.gamma = j.at("gamma").get<double>();
  c.sparsity = j.at("sparsity").get<double>();
  c.step_width = j.at("step_width").get<std::size_t>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.virtual_batch = j.at("virtual_batch").get<std::size_t>();
  c.max_epochs = j.at("max_epochs").get<std::size_t>();
  c.patience = j.at("patience").get<std::size_t>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.momentum = j.at("momentum").get<double>();
  c.validation_fraction = j.at("validation_fraction").get<double>();
  return c;
}

Json tree_state(const TreeModel& t) {
  std::vector<int> feature, left, right;
  std::vector<double> threshold, value;
  for (const auto& n : t.nodes) {
    feature.push_back(n.feature);
    threshold.push_back(n.threshold);
    left.push_back(n.left);
    right.push_back(n.right);
    value.push_back(n.value);
  }
  return {{"n_features", t.n_features}, {"feature", feature}, {"threshold", threshold},
          {"left", left},               {"right", right},     {"value", value}};
}

TreeModel tree_from(const Json& j) {
  TreeModel t;
  t.n_features = j.at("n_features").get<std::size_t>();
  const auto feature = j.at("feature").get<std::vector<int>>();
  const auto threshold = j.at("threshold").get<std::vector<double>>();
  const auto left = j.at("left").get<std::vector<int>>();
  const auto right = j.at("right").get<std::vector<int>>();
  const auto value = j.at("value").get<std::vector<double>>();
  const std::size_t n = feature.size();
  if (n == 0 || threshold.size() != n || left.size() != n || right.size() != n || value.size() != n)
    fail(ErrorKind::parse, "tree: inconsistent node arrays");
  for (std::size_t i = 0; i < n; ++i) {
    if (feature[i] >= 0) {
      if (static_cast<std::size_t>(feature[i]) >= t.n_features || left[i] <= static_cast<int>(i) ||
          right[i] <= static_cast<int>(i) || static_cast<std::size_t>(left[i]) >= n ||
          static_cast<std::size_t>(right[i]) >= n)
        fail(ErrorKind::parse, "tree: invalid node " + std::to_string(i));
    }
    t.nodes.push_back({feature[i], threshold[i], left[i], right[i], value[i]});
  }
  return t;
}

Json matrices(const std::vector<Matrix>& ms) {
  Json arr = Json::array();
  for (const auto& m : ms) arr.push_back(to_json(m));
  return arr;
}

std::vector<Matrix> matrices_from(const Json& j) {
  std::vector<Matrix> out;
  for (const auto& m : j) out.push_back(matrix_from_json(m));
  return out;
}

}  // namespace

Json to_json(const Matrix& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}};
}

Matrix matrix_from_json(const Json& j) {
  return Matrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
                j.at("data").get<std::vector<double>>());
}

Json params_to_json(ModelKind kind, const ModelParams& p) {
  switch (kind) {
    case ModelKind::linear_regression: return {{"ridge_jitter", p.linear.ridge_jitter}};
    case ModelKind::decision_tree: return tree_params(p.tree);
    case ModelKind::random_forest:
      return {{"n_trees", p.forest.n_trees},
              {"max_features", p.forest.max_features},
              {"bootstrap", p.forest.bootstrap},
              {"tree", tree_params(p.forest.tree)}};
    case ModelKind::gradient_boosting:
      return {{"n_stages", p.boosting.n_stages},
              {"learning_rate", p.boosting.learning_rate},
              {"tree", tree_params(p.boosting.tree)}};
    case ModelKind::knn: return {{"k", p.knn.k}};
    case ModelKind::mlp: return mlp_params(p.mlp);
    case ModelKind::attention_mlp: return mlp_params(p.attention_mlp);
    case ModelKind::tabnet: return tabnet_params(p.tabnet);
  }
  return Json::object();
}

Json to_json(const Regressor& model) {
  Json doc;
  doc["schema_version"] = kModelSchemaVersion;
  doc["kind"] = std::string(to_string(model.kind));
  Json params = Json::object();
  Json state = Json::object();
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LinearModel>) {
          state = {{"coef", m.coef}, {"intercept", m.intercept}};
        } else if constexpr (std::is_same_v<T, TreeModel>) {
          state = tree_state(m);
        } else if constexpr (std::is_same_v<T, ForestModel>) {
          params = {{"max_features", m.max_features}};
          Json trees = Json::array();
          for (const auto& t : m.trees) trees.push_back(tree_state(t));
          state = {{"tree_seeds", m.tree_seeds}, {"trees", trees}};
        } else if constexpr (std::is_same_v<T, BoostedModel>) {
          params = {{"learning_rate", m.learning_rate}};
          Json stages = Json::array();
          for (const auto& t : m.stages) stages.push_back(tree_state(t));
          state = {{"initial", m.initial}, {"stages", stages}};
        } else if constexpr (std::is_same_v<T, KnnModel>) {
          params = {{"k", m.k}};
          state = {{"x", to_json(m.x)}, {"y", m.y}};
        } else if constexpr (std::is_same_v<T, MlpModel>) {
          params = mlp_params(m.config);
          state = {{"attention", m.attention},       {"n_features", m.n_features},
                   {"target_mean", m.target_mean},   {"target_scale", m.target_scale},
                   {"params", matrices(m.params)},   {"loss_history", m.loss_history}};
        } else if constexpr (std::is_same_v<T, TabNetModel>) {
          params = tabnet_params(m.config);
          Json norms = Json::array();
          for (const auto& s : m.norms)
            norms.push_back({{"running_mean", to_json(s.running_mean)},
                             {"running_var", to_json(s.running_var)}});
          state = {{"n_features", m.n_features},
                   {"target_mean", m.target_mean},
                   {"target_scale", m.target_scale},
                   {"params", matrices(m.params)},
                   {"norms", norms},
                   {"loss_history", m.loss_history},
                   {"validation_history", m.validation_history},
                   {"best_epoch", m.best_epoch}};
        }
      },
      model.state);
  doc["params"] = params;
  doc["state"] = state;
  return doc;
}

Regressor regressor_from_json(const Json& j) {
  return guarded("model", [&] {
    if (j.at("schema_version").get<int>() != kModelSchemaVersion)
      fail(ErrorKind::parse, "model: unsupported schema_version");
    const auto kind = parse_model_kind(j.at("kind").get<std::string>());
    if (!kind) fail(ErrorKind::parse, "model: unknown kind '" + j.at("kind").get<std::string>() + "'");
    const Json& p = j.at("params");
    const Json& s = j.at("state");
    Regressor r;
    r.kind = *kind;
    switch (*kind) {
      case ModelKind::linear_regression:
        r.state = LinearModel{s.at("coef").get<std::vector<double>>(), s.at("intercept").get<double>()};
        break;
      case ModelKind::decision_tree: r.state = tree_from(s); break;
      case ModelKind::random_forest: {
        ForestModel f;
        f.max_features = p.at("max_features").get<std::size_t>();
        f.tree_seeds = s.at("tree_seeds").get<std::vector<std::uint64_t>>();
        for (const auto& t : s.at("trees")) f.trees.push_back(tree_from(t));
        if (f.trees.empty()) fail(ErrorKind::parse, "forest: no trees");
        r.state = std::move(f);
        break;
      }
      case ModelKind::gradient_boosting: {
        BoostedModel b;
        b.learning_rate = p.at("learning_rate").get<double>();
        b.initial = s.at("initial").get<double>();
        for (const auto& t : s.at("stages")) b.stages.push_back(tree_from(t));
        r.state = std::move(b);
        break;
      }
      case ModelKind::knn:
        r.state = KnnModel{matrix_from_json(s.at("x")), s.at("y").get<std::vector<double>>(),
                           p.at("k").get<std::size_t>()};
        break;
      case ModelKind::mlp:
      case ModelKind::attention_mlp: {
        MlpModel m;
        m.config = mlp_params_from(p);
        m.attention = s.at("attention").get<bool>();
        m.n_features = s.at("n_features").get<std::size_t>();
        m.target_mean = s.at("target_mean").get<double>();
        m.target_scale = s.at("target_scale").get<double>();
        m.params = matrices_from(s.at("params"));
        m.loss_history = s.at("loss_history").get<std::vector<double>>();
        r.state = std::move(m);
        break;
      }
      case ModelKind::tabnet: {
        TabNetModel m;
        m.config = tabnet_params_from(p);
        m.n_features = s.at("n_features").get<std::size_t>();
        m.target_mean = s.at("target_mean").get<double>();
        m.target_scale = s.at("target_scale").get<double>();
        m.params = matrices_from(s.at("params"));
        for (const auto& n : s.at("norms")) {
          ad::BatchNormState st;
          st.running_mean = matrix_from_json(n.at("running_mean"));
          st.running_var = matrix_from_json(n.at("running_var"));
          m.norms.push_back(std::move(st));
        }
        m.loss_history = s.at("loss_history").get<std::vector<double>>();
        m.validation_history = s.at("validation_history").get<std::vector<double>>();
        m.best_epoch = s.at("best_epoch").get<std::size_t>();
        r.state = std::move(m);
        break;
      }
    }
    return r;
  });
}

Json to_json(const Preprocessor& pre) {
  Json schema = Json::array();
  for (const auto& c : pre.schema)
    schema.push_back({{"name", c.name}, {"kind", std::string(to_string(c.kind))}});
  Json features = Json::array();
  for (const auto& f : pre.features) {
    Json jf = {{"column", f.column}, {"categorical", f.categorical},
               {"mean", f.mean},     {"stddev", f.stddev}};
    if (f.categorical) jf["labels"] = f.encoder.labels;
    features.push_back(jf);
  }
  return {{"schema", schema},
          {"features", features},
          {"dropped_constant", pre.dropped_constant},
          {"include_demographic", pre.include_demographic}};
}

Preprocessor preprocessor_from_json(const Json& j) {
  return guarded("preprocessor", [&] {
    Preprocessor pre;
    for (const auto& c : j.at("schema")) {
      const auto kind = c.at("kind").get<std::string>();
      ColumnKind k = ColumnKind::meta;
      if (kind == "numeric") k = ColumnKind::numeric;
      else if (kind == "categorical") k = ColumnKind::categorical;
      else if (kind == "target") k = ColumnKind::target;
      else if (kind == "group") k = ColumnKind::group;
      else if (kind != "meta") fail(ErrorKind::parse, "preprocessor: unknown column kind " + kind);
      pre.schema.push_back({c.at("name").get<std::string>(), k});
    }
    for (const auto& jf : j.at("features")) {
      FeatureScaling f;
      f.column = jf.at("column").get<std::string>();
      f.categorical = jf.at("categorical").get<bool>();
      f.mean = jf.at("mean").get<double>();
      f.stddev = jf.at("stddev").get<double>();
      f.encoder.column = f.column;
      if (f.categorical) f.encoder.labels = jf.at("labels").get<std::vector<std::string>>();
      if (!(f.stddev > 0.0)) fail(ErrorKind::parse, "preprocessor: non-positive stddev");
      pre.features.push_back(std::move(f));
    }
    pre.dropped_constant = j.at("dropped_constant").get<std::vector<std::string>>();
    pre.include_demographic = j.at("include_demographic").get<bool>();
    return pre;
  });
}

Json to_json(const MetricBlock& m) {
  return {{"rmse", m.rmse}, {"mae", m.mae}, {"r2", m.r2},
          {"plcc", m.plcc}, {"srcc", m.srcc}, {"n", m.n}};
}

}  // namespace qoe
