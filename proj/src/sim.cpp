#include "wmr/sim.hpp"

#include <cmath>

#include "wmr/tensor.hpp"  // NumericalError

namespace wmr {

PhysParams PhysParams::nominal(int n_joints) {
  PhysParams p;
  p.stiffness_scale = VecX::Ones(n_joints);
  p.damping_scale = VecX::Ones(n_joints);
  p.motor_offset = VecX::Zero(n_joints);
  return p;
}

PhysParams randomize(const RobotModel& model, Pcg32& rng, const DrRanges& r) {
  const int nj = model.n_joints();
  PhysParams p = PhysParams::nominal(nj);
  p.friction[0] = rng.uniform(r.friction_lo, r.friction_hi);
  p.friction[1] = rng.uniform(r.friction_lo, r.friction_hi);
  p.payload = rng.uniform(-r.payload, r.payload);
  p.gravity_delta = rng.uniform(-r.gravity, r.gravity);
  for (int j = 0; j < nj; ++j) p.stiffness_scale[j] = rng.uniform(r.stiffness_lo, r.stiffness_hi);
  for (int j = 0; j < nj; ++j) p.damping_scale[j] = rng.uniform(r.damping_lo, r.damping_hi);
  for (int j = 0; j < nj; ++j) p.motor_offset[j] = rng.uniform(-r.motor_offset, r.motor_offset);
  if (r.restitution > 0.0) p.restitution = rng.uniform(0.0, r.restitution);
  return p;
}

SimState SimState::initial(const RobotModel& model) {
  SimState s;
  s.q = model.q_default;
  s.qd = VecX::Zero(model.n_joints());
  s.last_torque = VecX::Zero(model.n_joints());
  s.base_pos = Vec3(0, 0, model.nominal_foot_drop());
  return s;
}

VecX pd_torque(const VecX& action, const SimState& s, const PhysParams& p,
               const RobotModel& model) {
  const int nj = model.n_joints();
  if (action.size() != nj) throw ShapeError("pd_torque: action size mismatch");
  VecX tau(nj);
  for (int j = 0; j < nj; ++j) {
    if (!std::isfinite(action[j])) throw NumericalError("pd_torque: NaN action");
    const double target = model.q_default[j] + action[j] + p.motor_offset[j];
    double t = model.kp[j] * p.stiffness_scale[j] * (target - s.q[j]) -
               model.kd[j] * p.damping_scale[j] * s.qd[j];
    tau[j] = std::clamp(t, -model.torque_limit[j], model.torque_limit[j]);
  }
  return tau;
}

ContactResult contact_resolve(const Vec3& pos_world, const Vec3& vel_world,
                              const Heightfield& hf, double mu,
                              const ContactParams& cp) {
  ContactResult res;
  double hz, n[3];
  hf.height_at(pos_world.x(), pos_world.y(), &hz, n);
  const double d = hz - pos_world.z();  // vertical penetration
  if (d <= 0.0) return res;
  const Vec3 normal(n[0], n[1], n[2]);
  const double vn = vel_world.dot(normal);
  const double fn = std::max(0.0, cp.kn * d - cp.cn * vn);
  Vec3 vt = vel_world - vn * normal;
  Vec3 ft = -cp.kt * vt;
  const double ft_mag = ft.norm();
  const double ft_max = mu * fn;
  if (ft_mag > ft_max) ft *= (ft_max / (ft_mag > 0 ? ft_mag : 1.0));
  res.force = fn * normal + ft;
  res.fn = fn;
  res.ft = std::min(ft_mag, ft_max);
  res.flag = fn > cp.threshold;
  return res;
}

namespace {

constexpr int kMaxBodies = 8;

struct Kinematics {
  int n = 0;
  SpatialTransform x_up[kMaxBodies];  // parent -> body
  Mat3 r_wb[kMaxBodies];              // body -> world rotation
  Vec3 p_wb[kMaxBodies];              // body origin in world
  SpatialVec vel[kMaxBodies];         // body coords
};

void forward_kinematics(const SimState& s, const RobotModel& model, Kinematics* k) {
  k->n = static_cast<int>(model.bodies.size());
  k->r_wb[0] = s.base_quat.toRotationMatrix();
  k->p_wb[0] = s.base_pos;
  k->vel[0] = {s.base_ang_vel, s.base_lin_vel};
  for (int i = 1; i < k->n; ++i) {
    const BodyDef& b = model.bodies[i];
    const double qi = s.q[i - 1];
    const Mat3 rj = Eigen::AngleAxisd(qi, b.axis).toRotationMatrix();
    k->x_up[i] = {rj.transpose(), b.joint_offset};
    const int pa = b.parent;
    k->r_wb[i] = k->r_wb[pa] * rj;
    k->p_wb[i] = k->p_wb[pa] + k->r_wb[pa] * b.joint_offset;
    k->vel[i] = k->x_up[i].apply(k->vel[pa]) +
                SpatialVec(b.axis * s.qd[i - 1], Vec3::Zero());
  }
}

Vec3 point_velocity_world(const Kinematics& k, int body, const Vec3& point) {
  const SpatialVec& v = k.vel[body];
  return k.r_wb[body] * (v.lin + v.ang.cross(point));
}

SpatialInertia body_inertia(const RobotModel& model, const PhysParams& p, int i) {
  const BodyDef& b = model.bodies[static_cast<size_t>(i)];
  const double mass = i == 0 ? b.mass + p.payload : b.mass;
  return SpatialInertia::from_mass_com(mass, b.com, b.inertia_com);
}

// world wrench about the world origin from a point force
SpatialVec world_wrench(const Vec3& point, const Vec3& force) {
  return {point.cross(force), force};
}

}  // namespace

void body_point_world(const SimState& s, const RobotModel& model, int body,
                      const Vec3& point, Vec3* pos, Vec3* vel) {
  Kinematics k;
  forward_kinematics(s, model, &k);
  *pos = k.p_wb[body] + k.r_wb[body] * point;
  *vel = point_velocity_world(k, body, point);
}

void step_dynamics(SimState& s, const VecX& torques, const PhysParams& p,
                   const RobotModel& model, const Heightfield& terrain,
                   double dt, const ContactParams& cp) {
  const int nb = static_cast<int>(model.bodies.size());
  const int nj = model.n_joints();
  const int dof = 6 + nj;
  if (torques.size() != nj) throw ShapeError("step_dynamics: torque size mismatch");
  for (int j = 0; j < nj; ++j)
    if (!std::isfinite(torques[j])) throw NumericalError("step_dynamics: non-finite torque");

  Kinematics k;
  forward_kinematics(s, model, &k);

  // restitution randomization is applied as a contact-damping modifier
  ContactParams cpe = cp;
  cpe.cn = cp.cn * (1.0 - p.restitution);

  // ---- contacts (feet + probes), expressed as body-frame wrenches -------
  SpatialVec f_ext[kMaxBodies];
  s.undesired_contacts = 0;
  s.terminal_body_contact = false;
  for (int foot = 0; foot < 2; ++foot) {
    const int body = model.foot_body[foot];
    const Vec3 pos = k.p_wb[body] + k.r_wb[body] * model.foot_offset;
    const Vec3 vel = point_velocity_world(k, body, model.foot_offset);
    double x = pos.x(), y = pos.y();
    const double mu = p.friction[static_cast<size_t>(foot)] *
                      static_cast<double>(terrain.friction_mult.empty()
                                              ? 1.0f
                                              : terrain.friction_mult[0]);
    const ContactResult c = contact_resolve(pos, vel, terrain, mu, cpe);
    (void)x;
    (void)y;
    s.foot_pos[static_cast<size_t>(foot)] = pos;
    s.foot_vel[static_cast<size_t>(foot)] = vel;
    s.foot_force[static_cast<size_t>(foot)] = c.force;
    s.foot_fn[static_cast<size_t>(foot)] = c.fn;
    s.foot_ft[static_cast<size_t>(foot)] = c.ft;
    s.foot_contact[static_cast<size_t>(foot)] = c.flag;
    if (c.fn > 0.0) {
      const SpatialVec w = world_wrench(pos, c.force);
      const SpatialTransform x_wi{k.r_wb[body].transpose(), k.p_wb[body]};
      f_ext[body] = f_ext[body] + x_wi.apply_inverse_transpose(w);
    }
  }
  for (const ProbePoint& probe : model.probes) {
    const Vec3 pos = k.p_wb[probe.body] + k.r_wb[probe.body] * probe.point;
    const Vec3 vel = point_velocity_world(k, probe.body, probe.point);
    const ContactResult c = contact_resolve(pos, vel, terrain, 0.8, cpe);
    if (c.fn <= 0.0) continue;
    const SpatialVec w = world_wrench(pos, c.force);
    const SpatialTransform x_wi{k.r_wb[probe.body].transpose(), k.p_wb[probe.body]};
    f_ext[probe.body] = f_ext[probe.body] + x_wi.apply_inverse_transpose(w);
    if (c.force.norm() > 1.0) {
      if (probe.terminal)
        s.terminal_body_contact = true;
      else
        ++s.undesired_contacts;
    }
  }

  // ---- bias forces: RNEA with qdd = 0, gravity as base acceleration -----
  const double g = 9.81 + p.gravity_delta;
  SpatialVec avp[kMaxBodies];
  SpatialVec f[kMaxBodies];
  avp[0] = {Vec3::Zero(), k.r_wb[0].transpose() * Vec3(0, 0, g)};
  for (int i = 0; i < nb; ++i) {
    if (i > 0) {
      const BodyDef& b = model.bodies[static_cast<size_t>(i)];
      const SpatialVec vj(b.axis * s.qd[i - 1], Vec3::Zero());
      avp[i] = k.x_up[i].apply(avp[b.parent]) + crm(k.vel[i], vj);
    }
    const SpatialInertia in = body_inertia(model, p, i);
    f[i] = in.apply(avp[i]) + crf(k.vel[i], in.apply(k.vel[i])) - f_ext[i];
  }
  VecX bias(dof);
  for (int i = nb - 1; i >= 1; --i) {
    const BodyDef& b = model.bodies[static_cast<size_t>(i)];
    bias[6 + i - 1] = b.axis.dot(f[i].ang);
    f[b.parent] = f[b.parent] + k.x_up[i].apply_transpose(f[i]);
  }
  bias.head<6>() = f[0].vec();

  // ---- mass matrix: composite rigid-body algorithm ----------------------
  SpatialInertia ic[kMaxBodies];
  for (int i = 0; i < nb; ++i) ic[i] = body_inertia(model, p, i);
  for (int i = nb - 1; i >= 1; --i) {
    const int pa = model.bodies[static_cast<size_t>(i)].parent;
    ic[pa] = ic[pa] + ic[i].transform_to_parent(k.x_up[i]);
  }
  Eigen::MatrixXd m_mat = Eigen::MatrixXd::Zero(dof, dof);
  m_mat.topLeftCorner<6, 6>() = ic[0].matrix();
  for (int i = 1; i < nb; ++i) {
    const BodyDef& bi = model.bodies[static_cast<size_t>(i)];
    SpatialVec fcol = ic[i].apply({bi.axis, Vec3::Zero()});
    m_mat(6 + i - 1, 6 + i - 1) = bi.axis.dot(fcol.ang);
    int j = i;
    while (model.bodies[static_cast<size_t>(j)].parent > 0) {
      fcol = k.x_up[j].apply_transpose(fcol);
      j = model.bodies[static_cast<size_t>(j)].parent;
      const double v = model.bodies[static_cast<size_t>(j)].axis.dot(fcol.ang);
      m_mat(6 + j - 1, 6 + i - 1) = v;
      m_mat(6 + i - 1, 6 + j - 1) = v;
    }
    fcol = k.x_up[j].apply_transpose(fcol);
    m_mat.block<6, 1>(0, 6 + i - 1) = fcol.vec();
    m_mat.block<1, 6>(6 + i - 1, 0) = fcol.vec().transpose();
  }

  VecX tau_gen = VecX::Zero(dof);
  tau_gen.tail(nj) = torques;

  Eigen::LDLT<Eigen::MatrixXd> ldlt(m_mat);
  if (ldlt.info() != Eigen::Success)
    throw NumericalError("step_dynamics: mass-matrix solve failed");
  const VecX acc = ldlt.solve(tau_gen - bias);
  if (!acc.allFinite()) throw NumericalError("step_dynamics: non-finite acceleration");

  // ---- integrate: semi-implicit velocity, averaged-velocity position ----
  const Vec3 w_old = s.base_ang_vel, v_old = s.base_lin_vel;
  const VecX qd_old = s.qd;
  s.base_ang_vel += acc.segment<3>(0) * dt;
  s.base_lin_vel += acc.segment<3>(3) * dt;
  s.qd += acc.tail(nj) * dt;

  const Mat3 r0 = k.r_wb[0];
  s.base_pos += r0 * (0.5 * (v_old + s.base_lin_vel)) * dt;
  const Vec3 rotvec = s.base_ang_vel * dt;
  const double angle = rotvec.norm();
  if (angle > 1e-12) {
    s.base_quat = s.base_quat * Quat(Eigen::AngleAxisd(angle, rotvec / angle));
  }
  s.base_quat.normalize();
  s.q += 0.5 * (qd_old + s.qd) * dt;

  // contact- and air-time accumulators: only one side advances per step
  for (int foot = 0; foot < 2; ++foot) {
    if (s.foot_contact[static_cast<size_t>(foot)]) {
      s.contact_time[static_cast<size_t>(foot)] += dt;
      s.air_time[static_cast<size_t>(foot)] = 0.0;
    } else {
      s.air_time[static_cast<size_t>(foot)] += dt;
      s.contact_time[static_cast<size_t>(foot)] = 0.0;
    }
  }
  s.last_torque = torques;
  s.time += dt;
}

void com_state(const SimState& s, const RobotModel& model, const PhysParams& p,
               Vec3* com, Vec3* com_vel) {
  Kinematics k;
  forward_kinematics(s, model, &k);
  double mass = 0.0;
  Vec3 mc = Vec3::Zero(), mv = Vec3::Zero();
  for (size_t i = 0; i < model.bodies.size(); ++i) {
    const BodyDef& b = model.bodies[i];
    const double m = (i == 0) ? b.mass + p.payload : b.mass;
    const Vec3 cw = k.p_wb[i] + k.r_wb[i] * b.com;
    mc += m * cw;
    mv += m * point_velocity_world(k, static_cast<int>(i), b.com);
    mass += m;
  }
  *com = mc / mass;
  *com_vel = mv / mass;
}

double mechanical_energy(const SimState& s, const RobotModel& model,
                         const PhysParams& p) {
  Kinematics k;
  forward_kinematics(s, model, &k);
  const double g = 9.81 + p.gravity_delta;
  double e = 0.0;
  for (size_t i = 0; i < model.bodies.size(); ++i) {
    const BodyDef& b = model.bodies[i];
    const double m = (i == 0) ? b.mass + p.payload : b.mass;
    const Vec3 vcom_body = k.vel[i].lin + k.vel[i].ang.cross(b.com);
    const Vec3 w = k.vel[i].ang;
    e += 0.5 * m * vcom_body.squaredNorm();
    e += 0.5 * w.dot(b.inertia_com * w);
    e += m * g * (k.p_wb[i] + k.r_wb[i] * b.com).z();
  }
  return e;
}

}  // namespace wmr
