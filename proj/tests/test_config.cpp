#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "qoe/config.hpp"
#include "qoe/error.hpp"

using namespace qoe;

namespace {

ErrorKind kind_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::invalid_argument;
}

}  // namespace

TEST_CASE("key value parsing with sections and comments") {
  const auto kv = KeyValueConfig::parse(
      "# experiment file\n"
      "experiment.seed = 7\n"
      "[random_forest]\n"
      "n_trees = 12   ; fewer trees\n"
      "[data]\n"
      "path = \"some dir/base.csv\"\n");
  CHECK(kv.get("experiment.seed") == "7");
  CHECK(kv.get("random_forest.n_trees") == "12");
  CHECK(kv.get("data.path") == "some dir/base.csv");
  CHECK_FALSE(kv.get("n_trees").has_value());
  CHECK(kind_of([] { KeyValueConfig::parse("just words\n"); }) == ErrorKind::parse);
  CHECK(kind_of([] { KeyValueConfig::parse("[open\n"); }) == ErrorKind::parse);
  CHECK(kind_of([] { KeyValueConfig::load("/nonexistent/exp.cfg"); }) == ErrorKind::io);
}

TEST_CASE("defaults") {
  const ExperimentConfig c = experiment_from_config(KeyValueConfig{});
  CHECK(c.seed == 42);
  CHECK(c.data.n == 450);
  CHECK(c.roster.size() == 8);
  CHECK(c.augmentation.noise_sigma == 2.0);
  CHECK(c.augmentation.adjustment_scale == 12.0);
  CHECK(c.split.test_fraction == 0.2);
  CHECK(c.split.mode == SplitMode::grouped_by_session);
  CHECK(c.params.forest.n_trees == 100);
  CHECK(c.params.knn.k == 5);
  CHECK(c.params.tabnet.n_steps == 3);
  CHECK(c.include_demographic);
  CHECK_FALSE(c.record_timing);
}

TEST_CASE("global seed feeds unset sub-seeds") {
  KeyValueConfig kv;
  kv.set("experiment.seed", "9");
  kv.set("split.seed", "100");
  const ExperimentConfig c = experiment_from_config(kv);
  CHECK(c.seed == 9);
  CHECK(c.data.seed == 9);
  CHECK(c.augmentation.seed == 9);
  CHECK(c.split.seed == 100);
  const ExperimentConfig o = experiment_from_config(kv, 5);
  CHECK(o.seed == 5);
  CHECK(o.data.seed == 5);
  CHECK(o.split.seed == 100);
}

TEST_CASE("every documented key is accepted and echoed") {
  const auto ref = config_reference();
  const auto echo = config_echo(ExperimentConfig{});
  REQUIRE(ref.size() == echo.size());
  KeyValueConfig kv;
  std::set<std::string> keys;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    CHECK(ref[i].key == echo[i].first);
    CHECK(ref[i].default_value == echo[i].second);
    CHECK_FALSE(ref[i].description.empty());
    CHECK(keys.insert(ref[i].key).second);
    kv.set(ref[i].key, ref[i].default_value);
  }
  // Feeding the defaults back in changes nothing.
  CHECK(config_echo(experiment_from_config(kv)) == echo);
  CHECK(keys.count("profiles.gamer_sports.w_rebuff"));
  CHECK(keys.count("tabnet.virtual_batch"));
  CHECK(keys.count("attention_mlp.attention_hidden"));
}

TEST_CASE("overrides reach the right fields") {
  KeyValueConfig kv;
  kv.set("experiment.roster", "knn, linear_regression");
  kv.set("mlp.hidden", "32,16");
  kv.set("decision_tree.max_depth", "0");
  kv.set("profiles.elderly_user.w_consistency", "3.5");
  kv.set("split.mode", "iid");
  kv.set("random_forest.bootstrap", "false");
  kv.set("data.path", "base.csv");
  const ExperimentConfig c = experiment_from_config(kv);
  CHECK(c.roster == std::vector<ModelKind>{ModelKind::knn, ModelKind::linear_regression});
  CHECK(c.params.mlp.hidden == std::vector<std::size_t>{32, 16});
  CHECK(c.params.tree.max_depth == 0);
  CHECK(c.augmentation.profiles[4].w_consistency == 3.5);
  CHECK(c.split.mode == SplitMode::iid);
  CHECK_FALSE(c.params.forest.bootstrap);
  CHECK(c.data.path == std::filesystem::path("base.csv"));
}

TEST_CASE("bad configs are validation errors") {
  auto bad = [](std::string key, std::string value) {
    KeyValueConfig kv;
    kv.set(std::move(key), std::move(value));
    return kind_of([&] { experiment_from_config(kv); });
  };
  CHECK(bad("experiment.colour", "red") == ErrorKind::validation);
  CHECK(bad("knn.k", "five") == ErrorKind::validation);
  CHECK(bad("knn.k", "-1") == ErrorKind::validation);
  CHECK(bad("experiment.roster", "svr") == ErrorKind::validation);
  CHECK(bad("experiment.roster", "knn,knn") == ErrorKind::validation);
  CHECK(bad("split.test_fraction", "1.5") == ErrorKind::validation);
  CHECK(bad("data.n", "0") == ErrorKind::validation);
  CHECK(bad("random_forest.bootstrap", "maybe") == ErrorKind::validation);
}

TEST_CASE("environment seed") {
  ::setenv("QOE_FORGE_SEED", "123", 1);
  CHECK(seed_from_environment() == 123u);
  ::setenv("QOE_FORGE_SEED", "abc", 1);
  CHECK_FALSE(seed_from_environment().has_value());
  ::unsetenv("QOE_FORGE_SEED");
  CHECK_FALSE(seed_from_environment().has_value());
}
