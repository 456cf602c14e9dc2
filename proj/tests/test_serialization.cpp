#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "qoe/error.hpp"
#include "qoe/serialization.hpp"

using namespace qoe;

namespace {

ModelParams quick_params() {
  ModelParams p;
  p.forest.n_trees = 5;
  p.boosting.n_stages = 10;
  for (auto* m : {&p.mlp, &p.attention_mlp}) {
    m->hidden = {8, 4};
    m->attention_hidden = 6;
    m->epochs = 3;
    m->batch_size = 16;
  }
  p.tabnet.step_width = 4;
  p.tabnet.batch_size = 32;
  p.tabnet.virtual_batch = 16;
  p.tabnet.max_epochs = 3;
  return p;
}

}  // namespace

TEST_CASE("every model kind survives a JSON round trip") {
  std::mt19937_64 rng(1);
  const Matrix x = oracle::random_matrix(60, 4, rng);
  std::vector<double> y(60);
  for (std::size_t i = 0; i < 60; ++i) y[i] = 3 * x(i, 0) - x(i, 2) + 0.5 * x(i, 1) * x(i, 3);
  const Matrix q = oracle::random_matrix(15, 4, rng);
  const ModelParams params = quick_params();
  for (ModelKind kind : kAllModelKinds) {
    CAPTURE(to_string(kind));
    const Regressor r = train_regressor(kind, params, x, y, 42);
    const Json doc = to_json(r);
    CHECK(doc.at("schema_version") == kModelSchemaVersion);
    CHECK(doc.at("kind") == std::string(to_string(kind)));
    const Regressor back = regressor_from_json(Json::parse(doc.dump()));
    CHECK(back.kind == kind);
    CHECK(back.predict(q) == r.predict(q));
    CHECK(to_json(back).dump() == doc.dump());
  }
}

TEST_CASE("preprocessor round trip") {
  const Dataset d = generate_base_dataset(50, 2);
  auto [dm, pre] = fit_transform(d);
  const Preprocessor back = preprocessor_from_json(Json::parse(to_json(pre).dump()));
  CHECK(transform(d, back).x == dm.x);
  CHECK(back.feature_names() == pre.feature_names());
}

TEST_CASE("malformed documents are parse errors") {
  try {
    regressor_from_json(Json::parse(R"({"schema_version": 1, "kind": "knn"})"));
    FAIL("expected parse error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::parse);
  }
  CHECK_THROWS_AS(regressor_from_json(Json::parse(R"({"schema_version": 99, "kind": "knn", "params": {}, "state": {}})")),
                  Error);
  CHECK_THROWS_AS(regressor_from_json(Json::parse(R"({"schema_version": 1, "kind": "svr", "params": {}, "state": {}})")),
                  Error);
  CHECK_THROWS_AS(preprocessor_from_json(Json::parse("[]")), Error);
}

TEST_CASE("model kind names") {
  for (ModelKind k : kAllModelKinds) CHECK(parse_model_kind(to_string(k)) == k);
  CHECK_FALSE(parse_model_kind("svr").has_value());
}
