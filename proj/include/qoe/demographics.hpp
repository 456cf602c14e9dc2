#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

#include "qoe/data_model.hpp"

namespace qoe {

enum class DemographicId {
  casual_viewer,
  quality_enthusiast,
  mobile_user,
  gamer_sports,
  elderly_user,
  professional_critical,
};

inline constexpr std::size_t kDemographicCount = 6;

inline constexpr std::array<DemographicId, kDemographicCount> kAllDemographics = {
    DemographicId::casual_viewer, DemographicId::quality_enthusiast,
    DemographicId::mobile_user,   DemographicId::gamer_sports,
    DemographicId::elderly_user,  DemographicId::professional_critical,
};

std::string_view to_string(DemographicId id);
std::optional<DemographicId> parse_demographic(std::string_view name);

// Sensitivity of one synthetic user group to each impact factor.
struct DemographicProfile {
  DemographicId id = DemographicId::casual_viewer;
  double w_rebuff = 1.0;
  double w_quality = 1.0;
  double w_bitrate = 1.0;
  double w_consistency = 1.0;
};

// Profiles indexed by DemographicId, in enum order.
using ProfileTable = std::array<DemographicProfile, kDemographicCount>;

const ProfileTable& builtin_profiles();

// Session-derived quantities that drive the per-profile MOS adjustment.
struct ImpactFactors {
  double rebuff_impact = 0.0;     // [0,1], saturates at 2 s of stalling
  double quality_boost = 0.0;     // [0,1]
  double quality_variance = 0.0;  // >= 0, mean coefficient of variation
  double smoothness = 0.0;        // 1 - min(quality_variance, 1)
  double bitrate_norm = 0.0;      // log-scaled bitrate in [0,1]
};

// Throws degenerate-input when vmaf_mean or bitrate_mean_kbps is not positive.
ImpactFactors compute_impact_factors(const StreamingSession& session);

struct AugmentationConfig {
  double noise_sigma = 2.0;
  double adjustment_scale = 12.0;
  std::uint64_t seed = 0;
  ProfileTable profiles = builtin_profiles();
};

void validate(const AugmentationConfig& cfg);

// Pre-noise adjusted score, clipped to [0,100]. Linear in every factor and
// centred so that a neutral session keeps its base score.
double adjust_mos(double base_mos, const ImpactFactors& factors,
                  const DemographicProfile& profile, const AugmentationConfig& cfg);

// Expands each base row into one row per profile. Output is ordered by
// ascending base session id, then profile enum order; augmented rows get
// session_id = 6 * base_session_id + profile index. Noise for each
// (session, profile) pair is drawn from its own derived seed, so the result
// does not depend on input row order.
Dataset augment_dataset(const Dataset& base, const AugmentationConfig& cfg);

}  // namespace qoe
