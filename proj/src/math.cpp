#include "jetflight/math.hpp"

#include <cmath>

namespace jetflight {

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Mat3 exp_so3(const Vec3& phi) {
  const double theta2 = phi.squaredNorm();
  const Mat3 k = skew(phi);
  double a;
  double b;
  if (theta2 < 1e-16) {
    a = 1.0 - theta2 / 6.0;
    b = 0.5 - theta2 / 24.0;
  } else {
    const double theta = std::sqrt(theta2);
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / theta2;
  }
  return Mat3::Identity() + a * k + b * k * k;
}

Vec3 log_so3(const Mat3& r) {
  const Eigen::AngleAxisd aa(r);
  return aa.angle() * aa.axis();
}

Mat3 axis_rotation(const Vec3& axis, double angle) {
  return exp_so3(axis * angle);
}

Vec3 dexp_inv(const Vec3& phi, const Vec3& omega) {
  const double theta2 = phi.squaredNorm();
  double c;
  if (theta2 < 1e-8) {
    // series of (1 - (t/2) cot(t/2)) / t^2
    c = 1.0 / 12.0 + theta2 / 720.0;
  } else {
    const double theta = std::sqrt(theta2);
    const double half = 0.5 * theta;
    c = (1.0 - half * std::cos(half) / std::sin(half)) / theta2;
  }
  const Vec3 pxw = phi.cross(omega);
  return omega - 0.5 * pxw + c * phi.cross(pxw);
}

bool is_rotation(const Mat3& r, double tol) {
  if (!r.allFinite()) return false;
  if ((r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(r.determinant() - 1.0) <= tol;
}

std::uint64_t Rng::next_u64() {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double Rng::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

}  // namespace jetflight
