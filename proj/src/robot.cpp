#include "wmr/robot.hpp"

#include <stdexcept>

namespace wmr {

double RobotModel::total_mass() const {
  double m = 0.0;
  for (const BodyDef& b : bodies) m += b.mass;
  return m;
}

double RobotModel::nominal_foot_drop() const {
  // chain rotations at q_default
  std::vector<Mat3> r_wb(bodies.size());
  std::vector<Vec3> p_wb(bodies.size());
  r_wb[0] = Mat3::Identity();
  p_wb[0] = Vec3::Zero();
  for (size_t i = 1; i < bodies.size(); ++i) {
    const BodyDef& b = bodies[i];
    const Mat3 rj = Eigen::AngleAxisd(q_default[static_cast<int>(i) - 1], b.axis).toRotationMatrix();
    p_wb[i] = p_wb[static_cast<size_t>(b.parent)] + r_wb[static_cast<size_t>(b.parent)] * b.joint_offset;
    r_wb[i] = r_wb[static_cast<size_t>(b.parent)] * rj;
  }
  const Vec3 foot = p_wb[static_cast<size_t>(foot_body[0])] +
                    r_wb[static_cast<size_t>(foot_body[0])] * foot_offset;
  return -foot.z();
}

void RobotModel::soft_limits(VecX* lo, VecX* hi) const {
  const VecX center = 0.5 * (q_lower + q_upper);
  const VecX half = 0.5 * (q_upper - q_lower);
  *lo = center - 0.9 * half;
  *hi = center + 0.9 * half;
}

void RobotModel::validate() const {
  if (bodies.empty() || bodies[0].parent != -1)
    throw std::runtime_error("robot: body 0 must be the floating root");
  for (size_t i = 1; i < bodies.size(); ++i) {
    const BodyDef& b = bodies[i];
    if (b.parent < 0 || b.parent >= static_cast<int>(i))
      throw std::runtime_error("robot: tree must be acyclic with the torso as root");
    if (std::fabs(b.axis.norm() - 1.0) > 1e-9)
      throw std::runtime_error("robot: joint axis must be unit length");
  }
  for (const BodyDef& b : bodies) {
    if (b.mass <= 0.0) throw std::runtime_error("robot: mass must be > 0 (" + b.name + ")");
    Eigen::SelfAdjointEigenSolver<Mat3> es(b.inertia_com);
    if (es.eigenvalues().minCoeff() <= 0.0)
      throw std::runtime_error("robot: inertia must be positive-definite (" + b.name + ")");
  }
  const int nj = n_joints();
  if (q_default.size() != nj || q_lower.size() != nj || q_upper.size() != nj ||
      kp.size() != nj || kd.size() != nj || torque_limit.size() != nj)
    throw std::runtime_error("robot: per-joint vector size mismatch");
  for (int j = 0; j < nj; ++j) {
    if (!(q_lower[j] < q_upper[j]))
      throw std::runtime_error("robot: joint limits must satisfy lower < upper");
    if (kp[j] <= 0 || kd[j] <= 0 || torque_limit[j] <= 0)
      throw std::runtime_error("robot: gains and torque limits must be > 0");
  }
}

RobotModel RobotModel::make_default() {
  RobotModel m;
  const double torso_mass = 10.0;
  const Vec3 torso_dims(0.2, 0.3, 0.4);  // x, y, z
  Mat3 torso_inertia = Mat3::Zero();
  torso_inertia(0, 0) = torso_mass / 12.0 * (torso_dims.y() * torso_dims.y() + torso_dims.z() * torso_dims.z());
  torso_inertia(1, 1) = torso_mass / 12.0 * (torso_dims.x() * torso_dims.x() + torso_dims.z() * torso_dims.z());
  torso_inertia(2, 2) = torso_mass / 12.0 * (torso_dims.x() * torso_dims.x() + torso_dims.y() * torso_dims.y());

  const double hip_mass = 0.2;
  const Mat3 hip_inertia = 2e-4 * Mat3::Identity();
  const double link_mass = 1.0, link_len = 0.4;
  Mat3 link_inertia = Mat3::Zero();
  link_inertia(0, 0) = link_inertia(1, 1) = link_mass * link_len * link_len / 12.0;
  link_inertia(2, 2) = 2e-4;

  const double hip_y = 0.12, hip_z = -0.25;

  m.bodies.push_back({"torso", -1, Vec3::Zero(), Vec3::Zero(), torso_mass, Vec3::Zero(), torso_inertia});
  for (int side = 0; side < 2; ++side) {
    const double sy = side == 0 ? hip_y : -hip_y;
    const std::string tag = side == 0 ? "L" : "R";
    const int hip_idx = static_cast<int>(m.bodies.size());
    m.bodies.push_back({"hip_" + tag, 0, Vec3(0, sy, hip_z), Vec3::UnitX(), hip_mass,
                        Vec3::Zero(), hip_inertia});
    m.bodies.push_back({"thigh_" + tag, hip_idx, Vec3::Zero(), Vec3::UnitY(), link_mass,
                        Vec3(0, 0, -link_len / 2), link_inertia});
    m.bodies.push_back({"shank_" + tag, hip_idx + 1, Vec3(0, 0, -link_len), Vec3::UnitY(),
                        link_mass, Vec3(0, 0, -link_len / 2), link_inertia});
    m.foot_body[side] = hip_idx + 2;
  }
  m.foot_offset = Vec3(0, 0, -link_len);

  const int nj = m.n_joints();
  m.q_default = VecX::Zero(nj);
  m.q_lower = VecX(nj);
  m.q_upper = VecX(nj);
  for (int leg = 0; leg < 2; ++leg) {
    m.q_lower[3 * leg + 0] = -0.8;  m.q_upper[3 * leg + 0] = 0.8;   // hip roll
    m.q_lower[3 * leg + 1] = -1.8;  m.q_upper[3 * leg + 1] = 1.8;   // hip pitch
    m.q_lower[3 * leg + 2] = -2.2;  m.q_upper[3 * leg + 2] = 2.2;   // knee pitch
  }
  m.kp = VecX::Constant(nj, 80.0);
  m.kd = VecX::Constant(nj, 2.0);
  m.torque_limit = VecX::Constant(nj, 30.0);
  m.action_bound = 2.0;

  // non-foot collision probes: torso corners and hip links end the episode,
  // knees only count as undesired contact
  for (int sx = -1; sx <= 1; sx += 2)
    for (int sy2 = -1; sy2 <= 1; sy2 += 2)
      for (int sz = -1; sz <= 1; sz += 2)
        m.probes.push_back({0, Vec3(sx * torso_dims.x() / 2, sy2 * torso_dims.y() / 2,
                                    sz * torso_dims.z() / 2), true});
  m.probes.push_back({1, Vec3::Zero(), true});   // hip L
  m.probes.push_back({4, Vec3::Zero(), true});   // hip R
  m.probes.push_back({3, Vec3::Zero(), false});  // knee L (shank origin)
  m.probes.push_back({6, Vec3::Zero(), false});  // knee R

  m.validate();
  return m;
}

}  // namespace wmr
