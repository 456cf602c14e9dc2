#include <doctest.h>

#include <cmath>
#include <set>

#include "fixtures.hpp"
#include "qoe/demographics.hpp"
#include "qoe/error.hpp"
#include "qoe/preprocessing.hpp"

using namespace qoe;

namespace {

Dataset augmented(std::size_t n, std::uint64_t seed) {
  AugmentationConfig cfg;
  cfg.seed = seed;
  return augment_dataset(generate_base_dataset(n, seed), cfg);
}

}  // namespace

TEST_CASE("fitted features are standardized") {
  const Dataset d = generate_base_dataset(300, 1);
  auto [dm, pre] = fit_transform(d);
  CHECK(dm.x.rows() == 300);
  CHECK(dm.x.cols() == pre.features.size());
  CHECK(dm.y.size() == 300);
  for (std::size_t j = 0; j < dm.x.cols(); ++j) {
    const auto col = dm.x.column(j);
    double m = 0, s = 0;
    for (double v : col) m += v;
    m /= col.size();
    for (double v : col) s += (v - m) * (v - m);
    CHECK(std::abs(m) < 1e-12);
    CHECK(std::sqrt(s / col.size()) == doctest::Approx(1.0).epsilon(1e-12));
  }
  for (std::size_t i = 0; i < d.size(); ++i) CHECK(dm.y[i] == d.rows()[i].session.mos);
}

TEST_CASE("meta, group and target columns never become features") {
  const Dataset a = augmented(30, 2);
  auto [dm, pre] = fit_transform(a);
  const auto names = pre.feature_names();
  const std::set<std::string> set(names.begin(), names.end());
  CHECK_FALSE(set.count("session_id"));
  CHECK_FALSE(set.count("base_session_id"));
  CHECK_FALSE(set.count("mos"));
  CHECK(set.count("demographic"));
  CHECK(set.count("device"));
  CHECK(set.count("vmaf_mean"));
}

TEST_CASE("demographic can be excluded") {
  const Dataset a = augmented(30, 2);
  auto [dm, pre] = fit_transform(a, {false});
  const auto names = pre.feature_names();
  CHECK(std::find(names.begin(), names.end(), "demographic") == names.end());
  auto [dm2, pre2] = fit_transform(a, {true});
  CHECK(dm2.x.cols() == dm.x.cols() + 1);
}

TEST_CASE("label codes follow first appearance") {
  const Dataset d = generate_base_dataset(50, 3);
  auto [dm, pre] = fit_transform(d);
  for (const auto& f : pre.features) {
    if (!f.categorical) continue;
    std::vector<std::string> seen;
    for (const auto& r : d.rows()) {
      const auto& label = categorical_field(r, f.column);
      if (std::find(seen.begin(), seen.end(), label) == seen.end()) seen.push_back(label);
    }
    CHECK(f.encoder.labels == seen);
    CHECK(f.encoder.code(seen[0]) == 0u);
    CHECK_FALSE(f.encoder.code("no-such-label").has_value());
  }
}

TEST_CASE("transform reuses training statistics") {
  const Dataset d = generate_base_dataset(200, 4);
  SplitSpec spec;
  spec.seed = 4;
  const Split s = split(d, spec);
  auto [train_dm, pre] = fit_transform(s.train);
  const DesignMatrix test_dm = transform(s.test, pre);
  CHECK(test_dm.x.cols() == train_dm.x.cols());
  std::size_t j = 0;
  while (pre.features[j].categorical) ++j;
  const auto& f = pre.features[j];
  const double raw = numeric_field(s.test.rows()[0], f.column);
  CHECK(test_dm.x(0, j) == doctest::Approx((raw - f.mean) / f.stddev));
  CHECK(transform(s.train, pre).x == train_dm.x);
}

TEST_CASE("unseen labels map to the reserved code with a warning") {
  auto a = fixture::session(1), b = fixture::session(2), c = fixture::session(3);
  b.device = "phone";
  b.vmaf_mean = 60;
  c.vmaf_mean = 70;
  auto [dm, pre] = fit_transform(fixture::plain({a, b, c}));
  auto odd = fixture::session(9);
  odd.device = "smartwatch";
  const DesignMatrix t = transform(fixture::plain({odd}), pre);
  REQUIRE_FALSE(t.warnings.empty());
  CHECK(t.warnings[0].find("smartwatch") != std::string::npos);
  const auto names = pre.feature_names();
  const auto j = std::find(names.begin(), names.end(), "device") - names.begin();
  const auto& f = pre.features[j];
  CHECK(t.x(0, j) == doctest::Approx((static_cast<double>(f.encoder.reserved_code()) - f.mean) / f.stddev));
}

TEST_CASE("constant columns are dropped with a warning") {
  auto a = fixture::session(1), b = fixture::session(2), c = fixture::session(3);
  b.vmaf_mean = 60;
  c.vmaf_mean = 70;
  auto [dm, pre] = fit_transform(fixture::plain({a, b, c}));
  const auto names = pre.feature_names();
  CHECK(names == std::vector<std::string>{"vmaf_mean"});
  CHECK_FALSE(dm.warnings.empty());
  CHECK(std::find(pre.dropped_constant.begin(), pre.dropped_constant.end(), "device") !=
        pre.dropped_constant.end());
  CHECK_THROWS_AS(fit_transform(fixture::plain({a})), Error);
}

TEST_CASE("transform rejects a schema without a fitted column") {
  const Dataset a = augmented(20, 5);
  auto [dm, pre] = fit_transform(a);
  CHECK_THROWS_AS(transform(generate_base_dataset(10, 5), pre), Error);
}

TEST_CASE("grouped split keeps sessions together") {
  const Dataset a = augmented(100, 6);
  SplitSpec spec;
  spec.seed = 6;
  const Split s = split(a, spec);
  CHECK(s.test_groups.size() == 20);
  CHECK(s.test.size() == 120);
  CHECK(s.train.size() == 480);
  std::set<std::int64_t> train_groups, test_groups;
  for (const auto& r : s.train.rows()) train_groups.insert(*r.base_session_id);
  for (const auto& r : s.test.rows()) test_groups.insert(*r.base_session_id);
  for (auto g : test_groups) CHECK_FALSE(train_groups.count(g));
  CHECK(std::vector<std::int64_t>(test_groups.begin(), test_groups.end()) == s.test_groups);
}

TEST_CASE("split is deterministic and seed dependent") {
  const Dataset d = generate_base_dataset(100, 7);
  SplitSpec spec;
  spec.seed = 1;
  CHECK(split(d, spec).test_groups == split(d, spec).test_groups);
  SplitSpec other = spec;
  other.seed = 2;
  CHECK(split(d, spec).test_groups != split(d, other).test_groups);
}

TEST_CASE("iid split sizes") {
  const Dataset a = augmented(50, 8);
  SplitSpec spec{0.25, SplitMode::iid, 3};
  const Split s = split(a, spec);
  CHECK(s.test.size() == 75);
  CHECK(s.train.size() == 225);
  CHECK(s.train.provenance().source != DataSource::augmented);
}

TEST_CASE("split_by_groups reproduces a grouped split") {
  const Dataset base = generate_base_dataset(60, 9);
  const Dataset a = augment_dataset(base, AugmentationConfig{});
  SplitSpec spec;
  spec.seed = 9;
  const Split sb = split(base, spec);
  const Split sa = split_by_groups(a, sb.test_groups);
  CHECK(sa.test.size() == 6 * sb.test.size());
  for (const auto& r : sa.test.rows())
    CHECK(std::binary_search(sb.test_groups.begin(), sb.test_groups.end(), *r.base_session_id));
}

TEST_CASE("split argument checks") {
  const Dataset d = generate_base_dataset(10, 1);
  CHECK_THROWS_AS(split(d, SplitSpec{0.0, SplitMode::iid, 1}), Error);
  CHECK_THROWS_AS(split(d, SplitSpec{1.0, SplitMode::iid, 1}), Error);
  CHECK_THROWS_AS(split(generate_base_dataset(3, 1), SplitSpec{}), Error);
  CHECK(parse_split_mode("grouped_by_session") == SplitMode::grouped_by_session);
  CHECK(parse_split_mode("iid") == SplitMode::iid);
  CHECK_FALSE(parse_split_mode("random").has_value());
}
