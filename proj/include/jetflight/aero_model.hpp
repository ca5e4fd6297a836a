#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "jetflight/math.hpp"

namespace jetflight {

/// Weights of the drag and normal-force coefficient models
///   C_D = c0 + c1 sin^2(a) sin^2(b) + c2 sin^2(a) + c3 sin^2(b)
///   C_N = d0 + d1 sin^2(a) sin(2a) sin^2(b)
struct AeroCoefficients {
  double c0 = 0.1274;
  double c1 = 0.0903;
  double c2 = 0.0141;
  double c3 = 0.0147;
  double d0 = 0.0007;
  double d1 = 0.0938;

  friend bool operator==(const AeroCoefficients&, const AeroCoefficients&) = default;
};

/// Angle of attack measured from the negative k axis and sideslip measured
/// from +i in the (i, j) plane, both in radians.
struct FlowAngles {
  double alpha = 0.0;  ///< [0, pi]
  double beta = 0.0;   ///< [0, 2 pi)
  bool degenerate = false;
};

struct AeroForce {
  Vec3 total = Vec3::Zero();
  Vec3 drag = Vec3::Zero();
  Vec3 lift = Vec3::Zero();
};

/// Pitot-style measurement corruption: multiplicative uniform noise on the
/// airspeed and a fixed fractional calibration error on both flow angles.
struct MeasurementCorruption {
  double noise = 0.0;
  double calibration = 0.0;
  std::uint64_t seed = 0;
};

inline constexpr double kAeroGain = 1.0;  ///< rho * A_ref / 2
inline constexpr double kDegenerateSpeed = 1e-9;
inline constexpr double kDegenerateSinAlpha = 1e-6;

FlowAngles flow_angles(const Vec3& v_body);

double drag_coefficient(const AeroCoefficients& c, double alpha, double beta);
double normal_coefficient(const AeroCoefficients& c, double alpha, double beta);
/// Lift is identified with the normal force.
inline double lift_coefficient(const AeroCoefficients& c, double alpha, double beta) {
  return normal_coefficient(c, alpha, beta);
}

/// Aerodynamic force at the CoM for relative velocity `v_a` (inertial frame).
/// `body_rotation` is the orientation of the aerodynamic body frame in the
/// inertial frame. Throws ValidationError if it is not a rotation.
AeroForce aero_force(const AeroCoefficients& c, const Vec3& v_a, const Mat3& body_rotation);

/// Same force built from airspeed and flow angles instead of a velocity vector.
AeroForce aero_force_from_angles(const AeroCoefficients& c, double speed, const FlowAngles& angles,
                                 const Mat3& body_rotation);

/// Unit vector in the body frame with the given flow angles.
Vec3 flow_direction(const FlowAngles& angles);

struct CorruptedFlow {
  double speed = 0.0;
  FlowAngles angles;
};

/// Applies `corruption` to a measured airspeed and flow angles. The generator
/// is consumed by value and the advanced state is returned alongside.
std::pair<CorruptedFlow, Rng> corrupt_flow_measurement(double speed, const FlowAngles& angles,
                                                       const MeasurementCorruption& corruption, Rng rng);

struct CoefficientProvenance {
  std::string fit_date;
  std::string dataset_hash;
  std::string source;
};

AeroCoefficients load_coefficients(std::string_view json_text);
AeroCoefficients load_coefficients_file(const std::string& path);
std::string serialize_coefficients(const AeroCoefficients& c, const CoefficientProvenance& provenance);

}  // namespace jetflight
