#pragma once

#include <Eigen/Dense>

#include <cstdint>

namespace jetflight {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;
using Mat6X = Eigen::Matrix<double, 6, Eigen::Dynamic>;
using Mat3X = Eigen::Matrix<double, 3, Eigen::Dynamic>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;
inline constexpr double kGravity = 9.81;

/// Rigid transform; rotation maps child-frame coordinates into the parent.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static Pose identity() { return {}; }

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  Pose operator*(const Pose& rhs) const {
    return {rotation * rhs.rotation, rotation * rhs.translation + translation};
  }
};

Mat3 skew(const Vec3& v);

/// Rodrigues formula; exact for any rotation vector.
Mat3 exp_so3(const Vec3& phi);

/// Principal rotation vector, angle in [0, pi].
Vec3 log_so3(const Mat3& r);

/// Rotation of `angle` about unit `axis`.
Mat3 axis_rotation(const Vec3& axis, double angle);

/// Inverse of the left-trivialized differential of exp on SO(3):
/// if R = exp(phi) R0 and dR/dt = omega^ R then dphi/dt = dexp_inv(phi, omega).
Vec3 dexp_inv(const Vec3& phi, const Vec3& omega);

/// R^T R = I and det R = +1, both within `tol`.
bool is_rotation(const Mat3& r, double tol = 1e-10);

/// Deterministic SplitMix64 stream. A plain value: copying it forks the
/// stream, so reproducibility is owned by whoever holds the state.
struct Rng {
  std::uint64_t state = 0;

  explicit Rng(std::uint64_t seed = 0) : state(seed) {}

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform01();
  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
};

}  // namespace jetflight
