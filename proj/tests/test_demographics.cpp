#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "fixtures.hpp"
#include "qoe/demographics.hpp"
#include "qoe/error.hpp"

using namespace qoe;

namespace {

// The four factor formulas written out independently.
double rebuff_oracle(double stall) { return stall >= 2.0 ? 1.0 : stall / 2.0; }
double quality_oracle(double vmaf, double ssim) { return (vmaf / 100.0 + ssim) / 2.0; }
double variance_oracle(const StreamingSession& s) {
  return (s.vmaf_std / s.vmaf_mean + s.bitrate_std_kbps / s.bitrate_mean_kbps) / 2.0;
}
double smooth_oracle(double qv) { return qv > 1.0 ? 0.0 : 1.0 - qv; }

AugmentationConfig quiet() {
  AugmentationConfig c;
  c.noise_sigma = 0.0;
  return c;
}

// Session whose factors sit at the neutral point: quality_boost = 1/2,
// no stalls, smoothness = 1/2, bitrate_norm = 1/2.
StreamingSession neutral_session(std::int64_t id) {
  auto s = fixture::session(id);
  s.vmaf_mean = 50.0;
  s.ssim_mean = 0.5;
  s.vmaf_std = 25.0;                                       // cv 0.5
  s.bitrate_mean_kbps = 300.0 * std::sqrt(20000.0 / 300.0);  // log midpoint
  s.bitrate_std_kbps = 0.5 * s.bitrate_mean_kbps;
  return s;
}

}  // namespace

TEST_CASE("profile table") {
  const auto& t = builtin_profiles();
  CHECK(t[static_cast<int>(DemographicId::gamer_sports)].w_rebuff == 2.8);
  CHECK(t[static_cast<int>(DemographicId::elderly_user)].w_rebuff == 0.5);
  for (std::size_t k = 0; k < kDemographicCount; ++k) {
    CHECK(t[k].id == kAllDemographics[k]);
    CHECK(parse_demographic(to_string(t[k].id)) == t[k].id);
  }
  CHECK_FALSE(parse_demographic("teenager").has_value());
}

TEST_CASE("impact factors against formula oracles") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    auto s = fixture::session(i);
    s.vmaf_mean = 1.0 + 99.0 * u(rng);
    s.vmaf_std = 30.0 * u(rng);
    s.ssim_mean = u(rng);
    s.bitrate_mean_kbps = 100.0 + 30000.0 * u(rng);
    s.bitrate_std_kbps = 5000.0 * u(rng);
    s.stall_duration_s = 5.0 * u(rng);
    const auto f = compute_impact_factors(s);
    CHECK(std::abs(f.rebuff_impact - rebuff_oracle(s.stall_duration_s)) <= 1e-12);
    CHECK(std::abs(f.quality_boost - quality_oracle(s.vmaf_mean, s.ssim_mean)) <= 1e-12);
    const double qv = variance_oracle(s);
    CHECK(std::abs(f.quality_variance - qv) <= 1e-12);
    CHECK(std::abs(f.smoothness - smooth_oracle(qv)) <= 1e-12);
    CHECK(f.bitrate_norm >= 0.0);
    CHECK(f.bitrate_norm <= 1.0);
  }
}

TEST_CASE("rebuff saturates at two seconds") {
  auto s = fixture::session(1);
  s.stall_count = 1;
  for (double stall : {2.0, 2.5, 10.0, 1e6}) {
    s.stall_duration_s = stall;
    CHECK(compute_impact_factors(s).rebuff_impact == 1.0);
  }
  s.stall_duration_s = 1.0;
  CHECK(compute_impact_factors(s).rebuff_impact == 0.5);
}

TEST_CASE("degenerate sessions") {
  auto s = fixture::session(1);
  s.vmaf_mean = 0.0;
  CHECK_THROWS_AS(compute_impact_factors(s), Error);
  s = fixture::session(1);
  s.bitrate_mean_kbps = 0.0;
  CHECK_THROWS_AS(compute_impact_factors(s), Error);
}

TEST_CASE("neutral factors leave the score unchanged") {
  const auto f = compute_impact_factors(neutral_session(1));
  CHECK(f.quality_boost == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(f.smoothness == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(f.bitrate_norm == doctest::Approx(0.5).epsilon(1e-12));
  for (const auto& p : builtin_profiles()) CHECK(adjust_mos(63.0, f, p, quiet()) == doctest::Approx(63.0));
}

TEST_CASE("adjustment clips to the MOS range") {
  ImpactFactors best{0.0, 1.0, 0.0, 1.0, 1.0};
  ImpactFactors worst{1.0, 0.0, 1.0, 0.0, 0.0};
  for (const auto& p : builtin_profiles()) {
    CHECK(adjust_mos(99.0, best, p, quiet()) == 100.0);
    CHECK(adjust_mos(1.0, worst, p, quiet()) == 0.0);
  }
}

TEST_CASE("adjustment is monotone in each factor") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto cfg = quiet();
  for (int i = 0; i < 500; ++i) {
    ImpactFactors f{u(rng), u(rng), u(rng), u(rng), u(rng)};
    const double base = 100.0 * u(rng);
    for (const auto& p : builtin_profiles()) {
      const double y = adjust_mos(base, f, p, cfg);
      auto g = f;
      g.rebuff_impact = std::min(1.0, f.rebuff_impact + 0.1);
      CHECK(adjust_mos(base, g, p, cfg) <= y);
      g = f;
      g.quality_boost = std::min(1.0, f.quality_boost + 0.1);
      CHECK(adjust_mos(base, g, p, cfg) >= y);
      g = f;
      g.smoothness = std::min(1.0, f.smoothness + 0.1);
      CHECK(adjust_mos(base, g, p, cfg) >= y);
      g = f;
      g.bitrate_norm = std::min(1.0, f.bitrate_norm + 0.1);
      CHECK(adjust_mos(base, g, p, cfg) >= y);
    }
  }
}

TEST_CASE("stall gap follows the rebuff weights") {
  auto a = fixture::session(1);
  auto b = a;
  b.stall_count = 1;
  b.stall_duration_s = 1.0;
  const auto fa = compute_impact_factors(a), fb = compute_impact_factors(b);
  std::map<DemographicId, double> gap;
  for (const auto& p : builtin_profiles()) {
    gap[p.id] = adjust_mos(50.0, fa, p, quiet()) - adjust_mos(50.0, fb, p, quiet());
    CHECK(gap[p.id] >= 0.0);
  }
  // Exact because the adjustment is linear in rebuff_impact: beta * w * 0.5.
  CHECK(gap[DemographicId::gamer_sports] == doctest::Approx(12.0 * 2.8 * 0.5));
  CHECK(gap[DemographicId::elderly_user] == doctest::Approx(12.0 * 0.5 * 0.5));
  const auto [lo, hi] = std::minmax_element(gap.begin(), gap.end(),
                                            [](auto& x, auto& y) { return x.second < y.second; });
  CHECK(hi->first == DemographicId::gamer_sports);
  CHECK(lo->first == DemographicId::elderly_user);
}

TEST_CASE("augmentation cardinality, ids and ordering") {
  AugmentationConfig cfg;
  cfg.seed = 7;
  const Dataset base = generate_base_dataset(450, 42);
  const Dataset aug = augment_dataset(base, cfg);
  REQUIRE(aug.size() == 2700);
  CHECK(aug.has_demographic());
  CHECK(aug.provenance().source == DataSource::augmented);
  CHECK(aug.provenance().parent_hash == base.content_hash());
  for (std::size_t i = 0; i < aug.size(); ++i) {
    const auto& r = aug.rows()[i];
    const auto& src = base.rows()[i / 6].session;
    CHECK(*r.base_session_id == src.session_id);
    CHECK(*r.demographic == to_string(kAllDemographics[i % 6]));
    CHECK(r.session.session_id == 6 * src.session_id + static_cast<std::int64_t>(i % 6));
    CHECK(r.session.vmaf_mean == src.vmaf_mean);
    CHECK(r.session.stall_duration_s == src.stall_duration_s);
    CHECK(r.session.mos >= 0.0);
    CHECK(r.session.mos <= 100.0);
  }
}

TEST_CASE("noise-free augmentation of a neutral session copies the score") {
  const Dataset base = fixture::plain({neutral_session(5)});
  const Dataset aug = augment_dataset(base, quiet());
  REQUIRE(aug.size() == 6);
  for (const auto& r : aug.rows()) CHECK(r.session.mos == doctest::Approx(70.0).epsilon(1e-12));
}

TEST_CASE("augmentation noise has the configured spread") {
  AugmentationConfig noisy;
  noisy.seed = 99;
  const Dataset base = generate_base_dataset(2000, 8);
  const Dataset a = augment_dataset(base, noisy);
  const Dataset q = augment_dataset(base, quiet());
  double s = 0, ss = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double clean = q.rows()[i].session.mos;
    if (clean < 10.0 || clean > 90.0) continue;  // away from the clip
    const double e = a.rows()[i].session.mos - clean;
    s += e;
    ss += e * e;
    ++n;
  }
  const double mean = s / n;
  const double sd = std::sqrt(ss / n - mean * mean);
  CHECK(std::abs(mean) < 0.1);
  CHECK(sd == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("augmentation is deterministic and order independent") {
  AugmentationConfig cfg;
  cfg.seed = 21;
  const Dataset base = generate_base_dataset(30, 2);
  const Dataset a1 = augment_dataset(base, cfg);
  CHECK(to_csv_string(a1) == to_csv_string(augment_dataset(base, cfg)));

  auto rows = base.rows();
  std::reverse(rows.begin(), rows.end());
  const Dataset permuted(base.schema(), rows, base.provenance());
  const Dataset a2 = augment_dataset(permuted, cfg);
  REQUIRE(a2.size() == a1.size());
  for (std::size_t i = 0; i < a1.size(); ++i) CHECK(a1.rows()[i] == a2.rows()[i]);

  cfg.seed = 22;
  CHECK(to_csv_string(augment_dataset(base, cfg)) != to_csv_string(a1));
}

TEST_CASE("augmentation rejects bad input") {
  CHECK_THROWS_AS(augment_dataset(generate_base_dataset(3, 1).with_rows({}), AugmentationConfig{}), Error);
  const Dataset aug = augment_dataset(generate_base_dataset(3, 1), AugmentationConfig{});
  CHECK_THROWS_AS(augment_dataset(aug, AugmentationConfig{}), Error);
  AugmentationConfig bad;
  bad.noise_sigma = -1;
  CHECK_THROWS_AS(validate(bad), Error);
  bad = {};
  bad.profiles[2].w_quality = -0.5;
  CHECK_THROWS_AS(validate(bad), Error);
}
