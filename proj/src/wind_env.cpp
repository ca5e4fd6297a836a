#include "jetflight/wind_env.hpp"

#include <cmath>

#include "jetflight/errors.hpp"

namespace jetflight {

using nlohmann::json;

namespace {

WindProfile scenario_wind(const Vec3& direction) {
  WindProfile w;
  w.constant = 3.0 * direction;
  w.gusts.push_back({10.0, 4.0, 10.0, direction, GustShape::kOneMinusCosine});
  w.gusts.push_back({25.0, 4.0, 15.0, direction, GustShape::kTrapezoid});
  return w;
}

Vec3 read_vec3(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw ValidationError(std::string(what) + ": expected a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

void validate(const WindProfile& p) {
  if (!p.constant.allFinite()) throw ValidationError("wind: constant component is not finite");
  for (const auto& g : p.gusts) {
    if (!std::isfinite(g.start) || !std::isfinite(g.duration) || !std::isfinite(g.peak))
      throw ValidationError("wind gust: non-finite field");
    if (!(g.duration > 0.0)) throw ValidationError("wind gust: duration must be positive");
    if (g.peak < 0.0) throw ValidationError("wind gust: peak must be non-negative");
    if (std::abs(g.direction.norm() - 1.0) > 1e-9) throw ValidationError("wind gust: direction must be unit-norm");
  }
}

double gust_magnitude(const GustSpec& g, double t) {
  const double tau = t - g.start;
  if (tau < 0.0 || tau > g.duration) return 0.0;
  switch (g.shape) {
    case GustShape::kOneMinusCosine:
      return 0.5 * g.peak * (1.0 - std::cos(kTwoPi * tau / g.duration));
    case GustShape::kTrapezoid: {
      const double ramp = kTrapezoidRampFraction * g.duration;
      if (tau < ramp) return g.peak * tau / ramp;
      if (tau > g.duration - ramp) return g.peak * (g.duration - tau) / ramp;
      return g.peak;
    }
  }
  return 0.0;
}

Vec3 wind_velocity(const WindProfile& p, double t) {
  Vec3 w = p.constant;
  for (const auto& g : p.gusts) {
    const double m = gust_magnitude(g, t);
    if (m != 0.0) w += m * g.direction;
  }
  return w;
}

WindProfile hovering_scenario_wind() { return scenario_wind(-Vec3::UnitX()); }

WindProfile high_speed_scenario_wind() { return scenario_wind(Vec3::UnitY()); }

WindProfile wind_from_json(const json& j) {
  WindProfile w;
  try {
    if (j.contains("constant")) w.constant = read_vec3(j.at("constant"), "wind.constant");
    if (j.contains("gusts")) {
      for (const auto& jg : j.at("gusts")) {
        GustSpec g;
        g.start = jg.at("start").get<double>();
        g.duration = jg.at("duration").get<double>();
        g.peak = jg.at("peak").get<double>();
        g.direction = read_vec3(jg.at("direction"), "wind.gusts.direction");
        const std::string shape = jg.value("shape", "one_minus_cosine");
        if (shape == "one_minus_cosine") {
          g.shape = GustShape::kOneMinusCosine;
        } else if (shape == "trapezoid") {
          g.shape = GustShape::kTrapezoid;
        } else {
          throw ValidationError("wind gust: unknown shape '" + shape + "'");
        }
        w.gusts.push_back(g);
      }
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("wind section: ") + e.what());
  }
  validate(w);
  return w;
}

json wind_to_json(const WindProfile& p) {
  json j;
  j["constant"] = {p.constant.x(), p.constant.y(), p.constant.z()};
  j["gusts"] = json::array();
  for (const auto& g : p.gusts) {
    j["gusts"].push_back({{"start", g.start},
                          {"duration", g.duration},
                          {"peak", g.peak},
                          {"direction", {g.direction.x(), g.direction.y(), g.direction.z()}},
                          {"shape", g.shape == GustShape::kTrapezoid ? "trapezoid" : "one_minus_cosine"}});
  }
  return j;
}

}  // namespace jetflight
