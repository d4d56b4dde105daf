#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wmr/spatial.hpp"

namespace wmr {

using VecX = Eigen::VectorXd;

struct BodyDef {
  std::string name;
  int parent = -1;          // -1: floating root
  Vec3 joint_offset = Vec3::Zero();  // joint origin in the parent frame
  Vec3 axis = Vec3::Zero();          // revolute axis (child frame)
  double mass = 0.0;
  Vec3 com = Vec3::Zero();           // body frame
  Mat3 inertia_com = Mat3::Zero();
};

/// A collision probe: a point on a body that may not touch the ground.
struct ProbePoint {
  int body = 0;
  Vec3 point = Vec3::Zero();  // body frame
  bool terminal = false;      // contact ends the episode (torso/hip)
};

/// Point-foot biped: floating torso + per-leg hip-roll, hip-pitch and
/// knee-pitch. Joint order: [L-roll, L-pitch, L-knee, R-roll, R-pitch,
/// R-knee]; body i+1 carries joint i.
struct RobotModel {
  std::vector<BodyDef> bodies;  // [0] = torso
  VecX q_default, q_lower, q_upper;  // rad; soft limits derived at 90% range
  VecX kp, kd;                       // nominal PD gains
  VecX torque_limit;                 // N*m
  double action_bound = 2.0;         // |a_i| <= bound (rad)
  int foot_body[2] = {0, 0};         // left, right shank
  Vec3 foot_offset = Vec3::Zero();   // foot point in shank frame
  std::vector<ProbePoint> probes;

  int n_joints() const { return static_cast<int>(bodies.size()) - 1; }
  double total_mass() const;
  /// Distance from base origin to foot at q = q_default (legs straight).
  double nominal_foot_drop() const;

  /// Soft joint limits used by the position-limit reward.
  void soft_limits(VecX* lo, VecX* hi) const;

  /// Throws std::runtime_error when an invariant is broken (masses > 0,
  /// positive-definite inertias, ordered limits, acyclic tree).
  void validate() const;

  static RobotModel make_default();
};

}  // namespace wmr
