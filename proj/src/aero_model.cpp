#include "jetflight/aero_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "jetflight/errors.hpp"

namespace jetflight {

using nlohmann::json;

FlowAngles flow_angles(const Vec3& v) {
  FlowAngles out;
  const double speed = v.norm();
  if (speed < kDegenerateSpeed) {
    out.degenerate = true;
    return out;
  }
  const double cos_alpha = std::clamp(-v.z() / speed, -1.0, 1.0);
  out.alpha = std::acos(cos_alpha);
  const double planar = std::hypot(v.x(), v.y());
  if (planar / speed < kDegenerateSinAlpha) {
    out.degenerate = true;
    out.beta = 0.0;
    return out;
  }
  double beta = std::atan2(v.y(), v.x());
  if (beta < 0.0) beta += kTwoPi;
  if (beta >= kTwoPi) beta = 0.0;
  out.beta = beta;
  return out;
}

double drag_coefficient(const AeroCoefficients& c, double alpha, double beta) {
  const double sa = std::sin(alpha);
  const double sb = std::sin(beta);
  const double sa2 = sa * sa;
  const double sb2 = sb * sb;
  return c.c0 + c.c1 * sa2 * sb2 + c.c2 * sa2 + c.c3 * sb2;
}

double normal_coefficient(const AeroCoefficients& c, double alpha, double beta) {
  const double sa = std::sin(alpha);
  const double sb = std::sin(beta);
  return c.d0 + c.d1 * sa * sa * std::sin(2.0 * alpha) * sb * sb;
}

Vec3 flow_direction(const FlowAngles& a) {
  const double sa = std::sin(a.alpha);
  return {sa * std::cos(a.beta), sa * std::sin(a.beta), -std::cos(a.alpha)};
}

namespace {

AeroForce force_from(const AeroCoefficients& c, const Vec3& v_a, double speed, const FlowAngles& angles,
                     const Mat3& body_rotation) {
  AeroForce f;
  if (speed == 0.0) return f;
  f.drag = -kAeroGain * speed * drag_coefficient(c, angles.alpha, angles.beta) * v_a;
  if (!angles.degenerate) {
    const Vec3 r_body(-std::sin(angles.beta), std::cos(angles.beta), 0.0);
    const Vec3 r = body_rotation * r_body;
    f.lift = kAeroGain * speed * lift_coefficient(c, angles.alpha, angles.beta) * r.cross(v_a);
  }
  f.total = f.drag + f.lift;
  return f;
}

}  // namespace

AeroForce aero_force(const AeroCoefficients& c, const Vec3& v_a, const Mat3& body_rotation) {
  if (!is_rotation(body_rotation, 1e-9)) throw ValidationError("aero_force: body rotation is not orthonormal");
  const Vec3 v_body = body_rotation.transpose() * v_a;
  return force_from(c, v_a, v_a.norm(), flow_angles(v_body), body_rotation);
}

AeroForce aero_force_from_angles(const AeroCoefficients& c, double speed, const FlowAngles& angles,
                                 const Mat3& body_rotation) {
  if (!is_rotation(body_rotation, 1e-9)) throw ValidationError("aero_force: body rotation is not orthonormal");
  const Vec3 v_a = speed * (body_rotation * flow_direction(angles));
  return force_from(c, v_a, speed, angles, body_rotation);
}

std::pair<CorruptedFlow, Rng> corrupt_flow_measurement(double speed, const FlowAngles& angles,
                                                       const MeasurementCorruption& corruption, Rng rng) {
  if (corruption.noise < 0.0 || corruption.calibration < 0.0)
    throw ValidationError("measurement corruption amplitudes must be non-negative");
  CorruptedFlow out{speed, angles};
  if (corruption.noise > 0.0) {
    const double eta = corruption.noise * (2.0 * rng.uniform01() - 1.0);
    out.speed = speed * (1.0 + eta);
  }
  if (corruption.calibration > 0.0) {
    const double scale = 1.0 + corruption.calibration;
    out.angles.alpha = std::clamp(angles.alpha * scale, 0.0, kPi);
    out.angles.beta = std::clamp(angles.beta * scale, 0.0, kTwoPi);
  }
  return {out, rng};
}

AeroCoefficients load_coefficients(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw IoError(std::string("coefficient file is not valid JSON: ") + e.what());
  }
  AeroCoefficients c;
  try {
    c.c0 = doc.at("c0").get<double>();
    c.c1 = doc.at("c1").get<double>();
    c.c2 = doc.at("c2").get<double>();
    c.c3 = doc.at("c3").get<double>();
    c.d0 = doc.at("d0").get<double>();
    c.d1 = doc.at("d1").get<double>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("coefficient file: ") + e.what());
  }
  return c;
}

AeroCoefficients load_coefficients_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open coefficient file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return load_coefficients(ss.str());
}

std::string serialize_coefficients(const AeroCoefficients& c, const CoefficientProvenance& p) {
  json doc;
  doc["c0"] = c.c0;
  doc["c1"] = c.c1;
  doc["c2"] = c.c2;
  doc["c3"] = c.c3;
  doc["d0"] = c.d0;
  doc["d1"] = c.d1;
  doc["provenance"] = {{"fit_date", p.fit_date}, {"dataset_hash", p.dataset_hash}, {"source", p.source}};
  return doc.dump(2);
}

}  // namespace jetflight
