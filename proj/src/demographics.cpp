#include "qoe/demographics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "qoe/error.hpp"
#include "qoe/rng.hpp"

namespace qoe {

std::string_view to_string(DemographicId id) {
  switch (id) {
    case DemographicId::casual_viewer: return "casual_viewer";
    case DemographicId::quality_enthusiast: return "quality_enthusiast";
    case DemographicId::mobile_user: return "mobile_user";
    case DemographicId::gamer_sports: return "gamer_sports";
    case DemographicId::elderly_user: return "elderly_user";
    case DemographicId::professional_critical: return "professional_critical";
  }
  return "unknown";
}

std::optional<DemographicId> parse_demographic(std::string_view name) {
  for (auto id : kAllDemographics)
    if (to_string(id) == name) return id;
  return std::nullopt;
}

const ProfileTable& builtin_profiles() {
  // (w_rebuff, w_quality, w_bitrate, w_consistency)
  static const ProfileTable table = {{
      {DemographicId::casual_viewer, 1.0, 1.0, 1.0, 1.0},
      {DemographicId::quality_enthusiast, 1.2, 2.5, 1.2, 1.5},
      {DemographicId::mobile_user, 1.5, 0.7, 0.6, 1.0},
      {DemographicId::gamer_sports, 2.8, 1.0, 1.8, 0.8},
      {DemographicId::elderly_user, 0.5, 0.8, 0.5, 2.0},
      {DemographicId::professional_critical, 0.8, 2.2, 1.2, 1.5},
  }};
  return table;
}

ImpactFactors compute_impact_factors(const StreamingSession& s) {
  if (!(s.vmaf_mean > 0.0))
    fail(ErrorKind::degenerate_input, "session " + std::to_string(s.session_id) +
                                          ": vmaf_mean must be > 0 for impact factors");
  if (!(s.bitrate_mean_kbps > 0.0))
    fail(ErrorKind::degenerate_input, "session " + std::to_string(s.session_id) +
                                          ": bitrate_mean_kbps must be > 0 for impact factors");
  ImpactFactors f;
  f.rebuff_impact = std::min(s.stall_duration_s / 2.0, 1.0);
  f.quality_boost = 0.5 * (s.vmaf_mean / 100.0 + s.ssim_mean);
  f.quality_variance = 0.5 * (s.vmaf_std / s.vmaf_mean + s.bitrate_std_kbps / s.bitrate_mean_kbps);
  f.smoothness = 1.0 - std::min(f.quality_variance, 1.0);
  f.bitrate_norm =
      std::clamp(std::log2(s.bitrate_mean_kbps / 300.0) / std::log2(20000.0 / 300.0), 0.0, 1.0);
  return f;
}

void validate(const AugmentationConfig& cfg) {
  if (!(cfg.noise_sigma >= 0.0))
    fail(ErrorKind::invalid_argument, "noise_sigma must be >= 0");
  if (!(cfg.adjustment_scale > 0.0))
    fail(ErrorKind::invalid_argument, "adjustment_scale must be > 0");
  for (std::size_t k = 0; k < kDemographicCount; ++k) {
    const auto& p = cfg.profiles[k];
    if (p.id != kAllDemographics[k])
      fail(ErrorKind::invalid_argument, "profile table out of enum order");
    if (!(p.w_rebuff >= 0 && p.w_quality >= 0 && p.w_bitrate >= 0 && p.w_consistency >= 0))
      fail(ErrorKind::invalid_argument,
           "profile " + std::string(to_string(p.id)) + ": weights must be >= 0");
  }
}

double adjust_mos(double base_mos, const ImpactFactors& f, const DemographicProfile& p,
                  const AugmentationConfig& cfg) {
  const double shift = p.w_quality * (f.quality_boost - 0.5) - p.w_rebuff * f.rebuff_impact +
                       p.w_consistency * (f.smoothness - 0.5) +
                       p.w_bitrate * (f.bitrate_norm - 0.5);
  return std::clamp(base_mos + cfg.adjustment_scale * shift, 0.0, 100.0);
}

Dataset augment_dataset(const Dataset& base, const AugmentationConfig& cfg) {
  validate(cfg);
  if (base.empty()) fail(ErrorKind::invalid_argument, "augment_dataset: base dataset is empty");
  if (base.has_demographic() || base.provenance().source == DataSource::augmented)
    fail(ErrorKind::invalid_argument, "augment_dataset: input is already augmented");

  std::vector<const Record*> ordered;
  ordered.reserve(base.size());
  for (const auto& r : base.rows()) ordered.push_back(&r);
  std::sort(ordered.begin(), ordered.end(), [](const Record* a, const Record* b) {
    return a->session.session_id < b->session.session_id;
  });

  // Schema: base columns, then the two augmentation columns.
  std::vector<ColumnSpec> schema = base.schema();
  schema.push_back({std::string(kDemographicColumn), ColumnKind::categorical});
  schema.push_back({std::string(kBaseSessionColumn), ColumnKind::group});

  std::vector<Record> rows;
  rows.reserve(base.size() * kDemographicCount);
  for (const Record* src : ordered) {
    const std::int64_t base_id = src->session.session_id;
    const ImpactFactors factors = compute_impact_factors(src->session);
    for (std::size_t k = 0; k < kDemographicCount; ++k) {
      const DemographicProfile& profile = cfg.profiles[k];
      double mos = adjust_mos(src->session.mos, factors, profile, cfg);
      if (cfg.noise_sigma > 0.0) {
        Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(base_id), k));
        std::normal_distribution<double> noise(0.0, cfg.noise_sigma);
        mos = std::clamp(mos + noise(rng), 0.0, 100.0);
      }
      Record out = *src;
      out.session.session_id = base_id * static_cast<std::int64_t>(kDemographicCount) +
                               static_cast<std::int64_t>(k);
      out.session.mos = mos;
      out.demographic = std::string(to_string(profile.id));
      out.base_session_id = base_id;
      rows.push_back(std::move(out));
    }
  }
  return Dataset(std::move(schema), std::move(rows),
                 Provenance{DataSource::augmented, cfg.seed, base.content_hash()});
}

}  // namespace qoe
