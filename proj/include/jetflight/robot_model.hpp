#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "jetflight/math.hpp"

namespace jetflight {

/// Solid cylinder, symmetry axis given in the link frame.
struct Cylinder {
  double radius = 0.0;
  double length = 0.0;
  Vec3 axis = Vec3::UnitZ();
};

struct Link {
  std::string name;
  int parent_joint = -1;   ///< -1 only for the base link
  Vec3 mount_position = Vec3::Zero();
  Vec3 mount_rotation = Vec3::Zero();  ///< rotation vector (axis * angle), as written in the file
  double mass = 0.0;
  Vec3 com = Vec3::Zero();             ///< link frame
  std::optional<Cylinder> cylinder;
  std::optional<Mat3> inertia_override;

  // Derived on load.
  Pose mount;
  Mat3 inertia = Mat3::Zero();  ///< rotational inertia about the link CoM, link frame
};

struct Joint {
  std::string name;
  int parent_link = -1;
  Vec3 axis = Vec3::UnitZ();  ///< in the joint (= child mount) frame
  double lower = 0.0;
  double upper = 0.0;
  int child_link = -1;  ///< derived
};

struct Jet {
  std::string name;
  int link = -1;
  Vec3 mount_position = Vec3::Zero();
  Vec3 mount_rotation = Vec3::Zero();
  Vec3 direction = Vec3::UnitZ();  ///< thrust force direction l_k in the jet frame
  double thrust_min = 0.0;
  double thrust_max = 0.0;
  double rate_min = 0.0;
  double rate_max = 0.0;

  Pose mount;  ///< derived
};

/// Kinematic tree of cylinder links carrying jet engines.
class RobotModel {
 public:
  std::string name;
  std::string version;
  std::vector<Link> links;
  std::vector<Joint> joints;
  std::vector<Jet> jets;
  /// Orientation of the aerodynamic body frame relative to the base link.
  Vec3 aero_frame_rotation = Vec3::Zero();
  std::optional<double> total_mass_check;

  int dof() const { return static_cast<int>(joints.size()); }
  int jet_count() const { return static_cast<int>(jets.size()); }
  double total_mass() const { return total_mass_; }
  const Mat3& aero_frame() const { return aero_frame_; }
  /// Links ordered so that every parent precedes its children.
  const std::vector<int>& topological_order() const { return order_; }
  /// Joint indices on the path from the base to `link`.
  const std::vector<int>& supporting_joints(int link) const { return support_[link]; }

  /// Recomputes derived quantities and checks every invariant.
  /// Throws ValidationError.
  void finalize();

 private:
  double total_mass_ = 0.0;
  Mat3 aero_frame_ = Mat3::Identity();
  std::vector<int> order_;
  std::vector<std::vector<int>> support_;
};

RobotModel load_model(std::string_view json_text);
RobotModel load_model_file(const std::string& path);
std::string serialize_model(const RobotModel& model);

/// Solid-cylinder inertia about its centroid.
Mat3 cylinder_inertia(double mass, const Cylinder& c);

struct Configuration {
  Pose base;
  VecX joints;
};

/// Base twist (linear, angular; both in the inertial frame) plus joint rates.
struct SystemVelocity {
  Vec6 base = Vec6::Zero();
  VecX joints;

  VecX stacked() const;
};

struct CentroidalMomentum {
  Vec3 linear = Vec3::Zero();
  Vec3 angular = Vec3::Zero();

  Vec6 stacked() const;
  Vec3 com_velocity(double mass) const { return linear / mass; }
  static CentroidalMomentum from(const Vec6& h);
};

enum class LimitMode { kStrict, kPermissive };

/// Dimension check always; joint-limit check throws in strict mode.
/// Returns the number of joints outside their limits.
int validate_configuration(const RobotModel& model, const Configuration& q,
                           LimitMode mode = LimitMode::kPermissive);

struct Kinematics {
  std::vector<Pose> links;  ///< world poses, indexed like model.links
  std::vector<Pose> jets;
  std::vector<Vec3> link_coms;
  Vec3 com = Vec3::Zero();
};

Kinematics forward_kinematics(const RobotModel& model, const Configuration& q);

/// 3x(6+n) linear / angular velocity Jacobian of a point rigidly attached to `link`.
Mat3X point_jacobian(const RobotModel& model, const Kinematics& kin, int link, const Vec3& point);
Mat3X angular_jacobian(const RobotModel& model, const Kinematics& kin, int link);

struct ComJacobian {
  Vec3 com;
  Mat3X jacobian;
};

ComJacobian com_and_jacobian(const RobotModel& model, const Configuration& q);

Mat6X centroidal_momentum_matrix(const RobotModel& model, const Configuration& q);

/// Unit-thrust wrenches of each jet expressed at the CoM with inertial orientation.
Mat6X thrust_map(const RobotModel& model, const Configuration& q);

struct ThrustMapRate {
  Vec6 a_dot_t = Vec6::Zero();  ///< d/dt (A(q) T)
  Mat6X lambda_s;               ///< 6 x n
  Mat6X lambda_t;               ///< 6 x jets, equals A(q)
  Vec6 b = Vec6::Zero();        ///< base-velocity part of d/dt(A) T
};

ThrustMapRate thrust_map_rate(const RobotModel& model, const Configuration& q,
                              const SystemVelocity& v, const VecX& thrust);

/// Rotational inertia about the CoM of the system frozen at q.
Mat3 locked_inertia(const RobotModel& model, const Configuration& q);

/// Base twist that reproduces momentum h given the joint rates (exact CMM solve).
Vec6 base_velocity_from_momentum(const RobotModel& model, const Configuration& q,
                                 const Vec6& h, const VecX& joint_rates);

/// Least-squares thrusts with A(q) T = -m g_bar.
VecX hover_thrust(const RobotModel& model, const Configuration& q);

/// Gravity wrench m * g_bar.
Vec6 gravity_wrench(double mass);

}  // namespace jetflight
