#pragma once

#include <vector>

#include <json.hpp>

#include "jetflight/math.hpp"

namespace jetflight {

enum class GustShape { kOneMinusCosine, kTrapezoid };

struct GustSpec {
  double start = 0.0;     ///< s
  double duration = 1.0;  ///< s
  double peak = 0.0;      ///< m/s
  Vec3 direction = Vec3::UnitX();
  GustShape shape = GustShape::kOneMinusCosine;

  double end() const { return start + duration; }
};

/// Uniform wind field: a constant component plus superposed gusts.
struct WindProfile {
  Vec3 constant = Vec3::Zero();
  std::vector<GustSpec> gusts;
};

/// Fraction of the gust duration spent ramping up (and down) in a trapezoid.
inline constexpr double kTrapezoidRampFraction = 0.1;

/// Throws ValidationError on non-positive duration, negative peak,
/// non-unit direction or non-finite values.
void validate(const WindProfile& profile);

/// Scalar gust intensity (m/s) at time t.
double gust_magnitude(const GustSpec& gust, double t);

Vec3 wind_velocity(const WindProfile& profile, double t);

/// 3 m/s frontal wind, a 10 m/s one-minus-cosine gust at 10 s and a 15 m/s
/// trapezoid gust at 25 s, both lasting 4 s.
WindProfile hovering_scenario_wind();

/// Same schedule blowing laterally.
WindProfile high_speed_scenario_wind();

WindProfile wind_from_json(const nlohmann::json& j);
nlohmann::json wind_to_json(const WindProfile& profile);

}  // namespace jetflight
