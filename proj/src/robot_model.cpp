#include "jetflight/robot_model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "jetflight/errors.hpp"

namespace jetflight {

using nlohmann::json;

namespace {

constexpr double kUnitTol = 1e-9;

Vec3 read_vec3(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) throw ValidationError(what + ": expected a 3-element array");
  Vec3 v;
  for (int i = 0; i < 3; ++i) {
    if (!j[i].is_number()) throw ValidationError(what + ": non-numeric entry");
    v[i] = j[i].get<double>();
  }
  if (!v.allFinite()) throw ValidationError(what + ": non-finite entry");
  return v;
}

std::pair<double, double> read_range(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ValidationError(what + ": expected [min, max]");
  const double lo = j[0].get<double>();
  const double hi = j[1].get<double>();
  if (!(lo <= hi)) throw ValidationError(what + ": min exceeds max");
  return {lo, hi};
}

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

void read_mount(const json& j, Vec3& position, Vec3& rotation, const std::string& what) {
  if (!j.contains("mount")) return;
  const json& m = j.at("mount");
  if (m.contains("position")) position = read_vec3(m.at("position"), what + ".mount.position");
  if (m.contains("rotation")) rotation = read_vec3(m.at("rotation"), what + ".mount.rotation");
}

void check_unit(const Vec3& v, const std::string& what) {
  if (std::abs(v.norm() - 1.0) > kUnitTol)
    throw ValidationError(what + ": vector is not unit-norm (norm " + std::to_string(v.norm()) + ")");
}

// Each point velocity Jacobian column: base linear, base angular, then joints.
struct ChainFrame {
  std::vector<Vec3> joint_axes;     // world
  std::vector<Vec3> joint_origins;  // world
};

ChainFrame chain_frames(const RobotModel& model, const Kinematics& kin) {
  ChainFrame f;
  f.joint_axes.resize(model.joints.size());
  f.joint_origins.resize(model.joints.size());
  for (std::size_t j = 0; j < model.joints.size(); ++j) {
    const Pose& child = kin.links[model.joints[j].child_link];
    f.joint_axes[j] = child.rotation * model.joints[j].axis;
    f.joint_origins[j] = child.translation;
  }
  return f;
}

Mat3X point_jacobian_impl(const RobotModel& model, const Kinematics& kin, const ChainFrame& frames,
                          int link, const Vec3& point) {
  const int n = model.dof();
  Mat3X jac = Mat3X::Zero(3, 6 + n);
  jac.block<3, 3>(0, 0).setIdentity();
  jac.block<3, 3>(0, 3) = -skew(point - kin.links[0].translation);
  for (int j : model.supporting_joints(link)) {
    jac.col(6 + j) = frames.joint_axes[j].cross(point - frames.joint_origins[j]);
  }
  return jac;
}

Mat3X angular_jacobian_impl(const RobotModel& model, const ChainFrame& frames, int link) {
  const int n = model.dof();
  Mat3X jac = Mat3X::Zero(3, 6 + n);
  jac.block<3, 3>(0, 3).setIdentity();
  for (int j : model.supporting_joints(link)) jac.col(6 + j) = frames.joint_axes[j];
  return jac;
}

void check_dimensions(const RobotModel& model, const Configuration& q) {
  if (q.joints.size() != model.dof())
    throw ValidationError("configuration has " + std::to_string(q.joints.size()) +
                          " joint values, model has " + std::to_string(model.dof()));
}

}  // namespace

Mat3 cylinder_inertia(double mass, const Cylinder& c) {
  const double r2 = c.radius * c.radius;
  const double axial = 0.5 * mass * r2;
  const double transverse = mass * (3.0 * r2 + c.length * c.length) / 12.0;
  const Vec3 a = c.axis.normalized();
  return transverse * (Mat3::Identity() - a * a.transpose()) + axial * a * a.transpose();
}

void RobotModel::finalize() {
  if (links.empty()) throw ValidationError("model has no links");

  int base_count = 0;
  for (std::size_t i = 0; i < links.size(); ++i) {
    Link& l = links[i];
    if (l.parent_joint < 0) ++base_count;
    if (!(l.mass > 0.0) || !std::isfinite(l.mass))
      throw ValidationError("link '" + l.name + "': mass must be positive");
    if (l.inertia_override) {
      const Mat3& in = *l.inertia_override;
      if ((in - in.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + in.cwiseAbs().maxCoeff()))
        throw ValidationError("link '" + l.name + "': inertia is not symmetric");
      Eigen::SelfAdjointEigenSolver<Mat3> es(in);
      if (es.eigenvalues().minCoeff() < 0.0)
        throw ValidationError("link '" + l.name + "': inertia is not positive semidefinite");
      l.inertia = in;
    } else if (l.cylinder) {
      if (!(l.cylinder->radius > 0.0) || !(l.cylinder->length > 0.0))
        throw ValidationError("link '" + l.name + "': cylinder dimensions must be positive");
      check_unit(l.cylinder->axis, "link '" + l.name + "' cylinder axis");
      l.inertia = cylinder_inertia(l.mass, *l.cylinder);
    } else {
      throw ValidationError("link '" + l.name + "': needs a cylinder or an explicit inertia");
    }
    l.mount = Pose{exp_so3(l.mount_rotation), l.mount_position};
  }
  if (base_count != 1)
    throw ValidationError("model must have exactly one base link (found " + std::to_string(base_count) + ")");
  if (links[0].parent_joint >= 0) throw ValidationError("the base link must be listed first");

  for (auto& j : joints) j.child_link = -1;
  for (std::size_t i = 0; i < links.size(); ++i) {
    const int pj = links[i].parent_joint;
    if (pj < 0) continue;
    if (pj >= static_cast<int>(joints.size()))
      throw ValidationError("link '" + links[i].name + "': parent joint index out of range");
    if (joints[pj].child_link >= 0)
      throw ValidationError("joint '" + joints[pj].name + "' drives more than one link");
    joints[pj].child_link = static_cast<int>(i);
  }
  for (const auto& j : joints) {
    if (j.child_link < 0) throw ValidationError("joint '" + j.name + "' has no child link");
    if (j.parent_link < 0 || j.parent_link >= static_cast<int>(links.size()))
      throw ValidationError("joint '" + j.name + "': parent link out of range");
    check_unit(j.axis, "joint '" + j.name + "' axis");
    if (!(j.lower <= j.upper)) throw ValidationError("joint '" + j.name + "': lower limit exceeds upper");
  }

  // Breadth-first from the base; anything not reached sits on a cycle.
  order_.assign(1, 0);
  support_.assign(links.size(), {});
  std::vector<bool> seen(links.size(), false);
  seen[0] = true;
  for (std::size_t k = 0; k < order_.size(); ++k) {
    const int parent = order_[k];
    for (std::size_t j = 0; j < joints.size(); ++j) {
      if (joints[j].parent_link != parent) continue;
      const int child = joints[j].child_link;
      if (seen[child]) throw ValidationError("kinematic graph contains a cycle at link '" + links[child].name + "'");
      seen[child] = true;
      support_[child] = support_[parent];
      support_[child].push_back(static_cast<int>(j));
      order_.push_back(child);
    }
  }
  if (order_.size() != links.size()) {
    for (std::size_t i = 0; i < links.size(); ++i)
      if (!seen[i]) throw ValidationError("link '" + links[i].name + "' is not connected to the base (cyclic tree)");
  }

  for (auto& jet : jets) {
    if (jet.link < 0 || jet.link >= static_cast<int>(links.size()))
      throw ValidationError("jet '" + jet.name + "': carrier link out of range");
    check_unit(jet.direction, "jet '" + jet.name + "' direction");
    if (!(jet.thrust_min <= jet.thrust_max)) throw ValidationError("jet '" + jet.name + "': thrust limits");
    if (!(jet.rate_min <= jet.rate_max)) throw ValidationError("jet '" + jet.name + "': rate limits");
    jet.mount = Pose{exp_so3(jet.mount_rotation), jet.mount_position};
  }

  total_mass_ = 0.0;
  for (const auto& l : links) total_mass_ += l.mass;
  if (total_mass_check) {
    if (std::abs(total_mass_ - *total_mass_check) > 1e-9 * std::max(1.0, *total_mass_check))
      throw ValidationError("total mass " + std::to_string(total_mass_) + " does not match total_mass_check " +
                            std::to_string(*total_mass_check));
  }
  aero_frame_ = exp_so3(aero_frame_rotation);
}

RobotModel load_model(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw IoError(std::string("model file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw IoError("model file must contain a JSON object");
  for (const char* key : {"links", "joints", "jets"})
    if (!doc.contains(key) || !doc.at(key).is_array())
      throw ValidationError(std::string("model file: missing array '") + key + "'");

  RobotModel model;
  try {
    model.name = doc.value("name", "");
    model.version = doc.value("version", "");
    if (doc.contains("aero_frame")) model.aero_frame_rotation = read_vec3(doc.at("aero_frame").at("rotation"), "aero_frame.rotation");
    if (doc.contains("total_mass_check") && !doc.at("total_mass_check").is_null())
      model.total_mass_check = doc.at("total_mass_check").get<double>();

    std::unordered_map<std::string, int> link_index;
    std::unordered_map<std::string, int> joint_index;
    for (const auto& jl : doc.at("links")) {
      const std::string name = jl.at("name").get<std::string>();
      if (!link_index.emplace(name, static_cast<int>(link_index.size())).second)
        throw ValidationError("duplicate link name '" + name + "'");
    }
    for (const auto& jj : doc.at("joints")) {
      const std::string name = jj.at("name").get<std::string>();
      if (!joint_index.emplace(name, static_cast<int>(joint_index.size())).second)
        throw ValidationError("duplicate joint name '" + name + "'");
    }
    auto resolve = [](const json& ref, const std::unordered_map<std::string, int>& names,
                      const std::string& what) -> int {
      if (ref.is_null()) return -1;
      if (ref.is_number_integer()) return ref.get<int>();
      const auto it = names.find(ref.get<std::string>());
      if (it == names.end()) throw ValidationError(what + ": unknown reference '" + ref.get<std::string>() + "'");
      return it->second;
    };

    for (const auto& jl : doc.at("links")) {
      Link l;
      l.name = jl.at("name").get<std::string>();
      l.parent_joint = jl.contains("parent_joint") ? resolve(jl.at("parent_joint"), joint_index, "link '" + l.name + "'") : -1;
      read_mount(jl, l.mount_position, l.mount_rotation, "link '" + l.name + "'");
      l.mass = jl.at("mass").get<double>();
      if (jl.contains("com")) l.com = read_vec3(jl.at("com"), "link '" + l.name + "' com");
      if (jl.contains("cylinder")) {
        const json& c = jl.at("cylinder");
        Cylinder cyl;
        cyl.radius = c.at("radius").get<double>();
        cyl.length = c.at("length").get<double>();
        if (c.contains("axis")) cyl.axis = read_vec3(c.at("axis"), "link '" + l.name + "' cylinder axis");
        l.cylinder = cyl;
      }
      if (jl.contains("inertia")) {
        const json& in = jl.at("inertia");
        if (!in.is_array() || in.size() != 3) throw ValidationError("link '" + l.name + "': inertia must be 3x3");
        Mat3 m;
        for (int r = 0; r < 3; ++r) m.row(r) = read_vec3(in[r], "link '" + l.name + "' inertia").transpose();
        l.inertia_override = m;
      }
      model.links.push_back(std::move(l));
    }
    for (const auto& jj : doc.at("joints")) {
      Joint j;
      j.name = jj.at("name").get<std::string>();
      j.parent_link = resolve(jj.at("parent_link"), link_index, "joint '" + j.name + "'");
      j.axis = read_vec3(jj.at("axis"), "joint '" + j.name + "' axis");
      std::tie(j.lower, j.upper) = read_range(jj.at("limits"), "joint '" + j.name + "' limits");
      model.joints.push_back(std::move(j));
    }
    for (const auto& jt : doc.at("jets")) {
      Jet jet;
      jet.name = jt.at("name").get<std::string>();
      jet.link = resolve(jt.at("link"), link_index, "jet '" + jet.name + "'");
      read_mount(jt, jet.mount_position, jet.mount_rotation, "jet '" + jet.name + "'");
      jet.direction = read_vec3(jt.at("direction"), "jet '" + jet.name + "' direction");
      std::tie(jet.thrust_min, jet.thrust_max) = read_range(jt.at("thrust_limits"), "jet '" + jet.name + "' thrust_limits");
      std::tie(jet.rate_min, jet.rate_max) = read_range(jt.at("rate_limits"), "jet '" + jet.name + "' rate_limits");
      model.jets.push_back(std::move(jet));
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("model file: ") + e.what());
  }
  model.finalize();
  return model;
}

RobotModel load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return load_model(ss.str());
}

std::string serialize_model(const RobotModel& model) {
  json doc;
  doc["name"] = model.name;
  doc["version"] = model.version;
  doc["aero_frame"] = {{"rotation", vec_json(model.aero_frame_rotation)}};
  doc["links"] = json::array();
  for (const auto& l : model.links) {
    json jl;
    jl["name"] = l.name;
    jl["parent_joint"] = l.parent_joint < 0 ? json(nullptr) : json(model.joints[l.parent_joint].name);
    jl["mount"] = {{"position", vec_json(l.mount_position)}, {"rotation", vec_json(l.mount_rotation)}};
    jl["mass"] = l.mass;
    jl["com"] = vec_json(l.com);
    if (l.cylinder)
      jl["cylinder"] = {{"radius", l.cylinder->radius}, {"length", l.cylinder->length}, {"axis", vec_json(l.cylinder->axis)}};
    if (l.inertia_override) {
      json rows = json::array();
      for (int r = 0; r < 3; ++r) rows.push_back(vec_json(l.inertia_override->row(r).transpose()));
      jl["inertia"] = rows;
    }
    doc["links"].push_back(jl);
  }
  doc["joints"] = json::array();
  for (const auto& j : model.joints) {
    doc["joints"].push_back({{"name", j.name},
                             {"parent_link", model.links[j.parent_link].name},
                             {"axis", vec_json(j.axis)},
                             {"limits", {j.lower, j.upper}}});
  }
  doc["jets"] = json::array();
  for (const auto& jet : model.jets) {
    doc["jets"].push_back({{"name", jet.name},
                           {"link", model.links[jet.link].name},
                           {"mount", {{"position", vec_json(jet.mount_position)}, {"rotation", vec_json(jet.mount_rotation)}}},
                           {"direction", vec_json(jet.direction)},
                           {"thrust_limits", {jet.thrust_min, jet.thrust_max}},
                           {"rate_limits", {jet.rate_min, jet.rate_max}}});
  }
  doc["total_mass_check"] = model.total_mass_check ? json(*model.total_mass_check) : json(nullptr);
  return doc.dump(2);
}

VecX SystemVelocity::stacked() const {
  VecX v(6 + joints.size());
  v << base, joints;
  return v;
}

Vec6 CentroidalMomentum::stacked() const {
  Vec6 h;
  h << linear, angular;
  return h;
}

CentroidalMomentum CentroidalMomentum::from(const Vec6& h) {
  return {h.head<3>(), h.tail<3>()};
}

int validate_configuration(const RobotModel& model, const Configuration& q, LimitMode mode) {
  check_dimensions(model, q);
  if (!is_rotation(q.base.rotation)) throw ValidationError("base rotation is not a proper rotation matrix");
  int violations = 0;
  for (int j = 0; j < model.dof(); ++j) {
    const auto& joint = model.joints[j];
    if (q.joints[j] < joint.lower || q.joints[j] > joint.upper) {
      if (mode == LimitMode::kStrict)
        throw ValidationError("joint '" + joint.name + "' at " + std::to_string(q.joints[j]) + " rad is outside its limits");
      ++violations;
    }
  }
  return violations;
}

Kinematics forward_kinematics(const RobotModel& model, const Configuration& q) {
  check_dimensions(model, q);
  Kinematics kin;
  kin.links.resize(model.links.size());
  kin.link_coms.resize(model.links.size());
  for (int i : model.topological_order()) {
    const Link& l = model.links[i];
    if (l.parent_joint < 0) {
      kin.links[i] = q.base;
    } else {
      const Joint& joint = model.joints[l.parent_joint];
      const Pose rot{axis_rotation(joint.axis, q.joints[l.parent_joint]), Vec3::Zero()};
      kin.links[i] = kin.links[joint.parent_link] * l.mount * rot;
    }
  }
  double mass = 0.0;
  for (std::size_t i = 0; i < model.links.size(); ++i) {
    kin.link_coms[i] = kin.links[i].apply(model.links[i].com);
    kin.com += model.links[i].mass * kin.link_coms[i];
    mass += model.links[i].mass;
  }
  kin.com /= mass;
  kin.jets.reserve(model.jets.size());
  for (const auto& jet : model.jets) kin.jets.push_back(kin.links[jet.link] * jet.mount);
  return kin;
}

Mat3X point_jacobian(const RobotModel& model, const Kinematics& kin, int link, const Vec3& point) {
  return point_jacobian_impl(model, kin, chain_frames(model, kin), link, point);
}

Mat3X angular_jacobian(const RobotModel& model, const Kinematics& kin, int link) {
  return angular_jacobian_impl(model, chain_frames(model, kin), link);
}

ComJacobian com_and_jacobian(const RobotModel& model, const Configuration& q) {
  const Kinematics kin = forward_kinematics(model, q);
  const ChainFrame frames = chain_frames(model, kin);
  Mat3X jac = Mat3X::Zero(3, 6 + model.dof());
  for (std::size_t i = 0; i < model.links.size(); ++i) {
    jac += model.links[i].mass *
           point_jacobian_impl(model, kin, frames, static_cast<int>(i), kin.link_coms[i]);
  }
  jac /= model.total_mass();
  return {kin.com, jac};
}

Mat6X centroidal_momentum_matrix(const RobotModel& model, const Configuration& q) {
  const Kinematics kin = forward_kinematics(model, q);
  const ChainFrame frames = chain_frames(model, kin);
  Mat6X cmm = Mat6X::Zero(6, 6 + model.dof());
  for (std::size_t i = 0; i < model.links.size(); ++i) {
    const Link& l = model.links[i];
    const int idx = static_cast<int>(i);
    // Spatial momentum of the link about its own CoM, then shifted to the
    // system CoM: [p; L_G] = [I 0; (c - x)^ I] [m v_c; I_c w].
    const Mat3X jv = point_jacobian_impl(model, kin, frames, idx, kin.link_coms[i]);
    const Mat3X jw = angular_jacobian_impl(model, frames, idx);
    const Mat3 rot = kin.links[i].rotation;
    const Mat3 inertia_world = rot * l.inertia * rot.transpose();
    const Mat3X linear = l.mass * jv;
    cmm.topRows<3>() += linear;
    cmm.bottomRows<3>() += skew(kin.link_coms[i] - kin.com) * linear + inertia_world * jw;
  }
  return cmm;
}

Mat6X thrust_map(const RobotModel& model, const Configuration& q) {
  const Kinematics kin = forward_kinematics(model, q);
  Mat6X a(6, model.jet_count());
  for (int k = 0; k < model.jet_count(); ++k) {
    const Vec3 d = kin.jets[k].rotation * model.jets[k].direction;
    a.col(k).head<3>() = d;
    a.col(k).tail<3>() = (kin.jets[k].translation - kin.com).cross(d);
  }
  return a;
}

ThrustMapRate thrust_map_rate(const RobotModel& model, const Configuration& q,
                              const SystemVelocity& v, const VecX& thrust) {
  const int n = model.dof();
  if (v.joints.size() != n) throw ValidationError("thrust_map_rate: joint velocity dimension mismatch");
  if (thrust.size() != model.jet_count()) throw ValidationError("thrust_map_rate: thrust dimension mismatch");

  const Kinematics kin = forward_kinematics(model, q);
  const ChainFrame frames = chain_frames(model, kin);

  Mat3X j_com = Mat3X::Zero(3, 6 + n);
  for (std::size_t i = 0; i < model.links.size(); ++i) {
    j_com += model.links[i].mass *
             point_jacobian_impl(model, kin, frames, static_cast<int>(i), kin.link_coms[i]);
  }
  j_com /= model.total_mass();

  // d/dt [d; r x d] with d = R_k l_k, r = o_k - x:
  //   d_dot = w_k x d,  r_dot = v_k - x_dot
  //   d/dt (r x d) = r_dot x d + r x d_dot
  Mat6X lambda = Mat6X::Zero(6, 6 + n);
  Mat6X a(6, model.jet_count());
  for (int k = 0; k < model.jet_count(); ++k) {
    const Jet& jet = model.jets[k];
    const Vec3 d = kin.jets[k].rotation * jet.direction;
    const Vec3 r = kin.jets[k].translation - kin.com;
    a.col(k).head<3>() = d;
    a.col(k).tail<3>() = r.cross(d);

    const Mat3X jv = point_jacobian_impl(model, kin, frames, jet.link, kin.jets[k].translation);
    const Mat3X jw = angular_jacobian_impl(model, frames, jet.link);
    const Mat3 dx = skew(d);
    const Mat3X d_dot = -dx * jw;
    lambda.topRows<3>() += thrust[k] * d_dot;
    lambda.bottomRows<3>() += thrust[k] * (-dx * (jv - j_com) + skew(r) * d_dot);
  }

  ThrustMapRate out;
  out.lambda_t = a;
  out.lambda_s = lambda.rightCols(n);
  out.b = lambda.leftCols<6>() * v.base;
  out.a_dot_t = lambda * v.stacked();
  return out;
}

Mat3 locked_inertia(const RobotModel& model, const Configuration& q) {
  const Kinematics kin = forward_kinematics(model, q);
  Mat3 total = Mat3::Zero();
  for (std::size_t i = 0; i < model.links.size(); ++i) {
    const Mat3 rot = kin.links[i].rotation;
    const Mat3 s = skew(kin.link_coms[i] - kin.com);
    total += rot * model.links[i].inertia * rot.transpose() - model.links[i].mass * s * s;
  }
  return 0.5 * (total + total.transpose());
}

Vec6 base_velocity_from_momentum(const RobotModel& model, const Configuration& q,
                                 const Vec6& h, const VecX& joint_rates) {
  const Mat6X cmm = centroidal_momentum_matrix(model, q);
  const Mat6 base_block = cmm.leftCols<6>();
  const Vec6 rhs = h - cmm.rightCols(model.dof()) * joint_rates;
  return base_block.partialPivLu().solve(rhs);
}

VecX hover_thrust(const RobotModel& model, const Configuration& q) {
  const Mat6X a = thrust_map(model, q);
  const Vec6 target = -gravity_wrench(model.total_mass());
  return a.completeOrthogonalDecomposition().solve(target);
}

Vec6 gravity_wrench(double mass) {
  Vec6 g = Vec6::Zero();
  g[2] = -mass * kGravity;
  return g;
}

}  // namespace jetflight
