#pragma once

#include <array>

#include "wmr/rng.hpp"
#include "wmr/robot.hpp"
#include "wmr/spatial.hpp"
#include "wmr/terrain.hpp"

namespace wmr {

/// Ground-truth physical parameters drawn once per episode (Table-style
/// domain randomization). Scales multiply the nominal PD gains; offsets
/// and payload are additive.
struct PhysParams {
  std::array<double, 2> friction = {0.8, 0.8};  // per foot
  double payload = 0.0;                         // kg, added to the torso
  double gravity_delta = 0.0;                   // m/s^2
  VecX stiffness_scale, damping_scale, motor_offset;
  double restitution = 0.0;  // applied as a contact-damping modifier

  static PhysParams nominal(int n_joints);
};

struct DrRanges {
  double friction_lo = 0.2, friction_hi = 1.5;
  double payload = 2.0;      // +/- kg (paper's +/-5 kg scaled by mass ratio)
  double gravity = 0.1;      // +/- m/s^2
  double stiffness_lo = 0.8, stiffness_hi = 1.2;
  double damping_lo = 0.8, damping_hi = 1.2;
  double motor_offset = 0.1;  // +/- rad
  double restitution = 0.0;   // default off (no range given)
};

/// Independent uniform draws in a fixed order; per-foot friction drawn
/// independently.
PhysParams randomize(const RobotModel& model, Pcg32& rng, const DrRanges& r);

struct ContactParams {
  double kn = 1e4;        // normal stiffness N/m
  double cn = 100.0;      // normal damping N*s/m
  double kt = 1e3;        // tangential damping N*s/m
  double threshold = 1.0; // contact flag force N
};

/// Full rigid-body state plus contact bookkeeping. Velocities are in the
/// base (body) frame; positions in the world frame.
struct SimState {
  Vec3 base_pos = Vec3::Zero();
  Quat base_quat = Quat::Identity();
  Vec3 base_lin_vel = Vec3::Zero();   // body frame
  Vec3 base_ang_vel = Vec3::Zero();   // body frame
  VecX q, qd;
  double time = 0.0;

  // per foot, refreshed every inner step
  std::array<Vec3, 2> foot_pos = {Vec3::Zero(), Vec3::Zero()};   // world
  std::array<Vec3, 2> foot_vel = {Vec3::Zero(), Vec3::Zero()};   // world
  std::array<Vec3, 2> foot_force = {Vec3::Zero(), Vec3::Zero()}; // world
  std::array<double, 2> foot_fn = {0, 0};   // normal magnitude
  std::array<double, 2> foot_ft = {0, 0};   // tangential magnitude
  std::array<bool, 2> foot_contact = {false, false};
  std::array<double, 2> contact_time = {0, 0};  // s
  std::array<double, 2> air_time = {0, 0};      // s

  VecX last_torque;
  int undesired_contacts = 0;       // non-foot probes with force > 1 N
  bool terminal_body_contact = false;

  static SimState initial(const RobotModel& model);
};

/// tau = kp*scale*(q_default + a + motor_offset - q) - kd*scale*qd,
/// clamped to the torque limits. Throws NumericalError on NaN action.
VecX pd_torque(const VecX& action, const SimState& s, const PhysParams& p,
               const RobotModel& model);

struct ContactResult {
  Vec3 force = Vec3::Zero();  // world
  double fn = 0.0;            // along the surface normal
  double ft = 0.0;            // tangential magnitude (after cone clamp)
  bool flag = false;          // fn > threshold
};

/// Penalty contact with Coulomb cone clamp: penetration is measured
/// vertically, forces act along the local surface normal.
ContactResult contact_resolve(const Vec3& pos_world, const Vec3& vel_world,
                              const Heightfield& hf, double mu,
                              const ContactParams& cp);

/// One inner dynamics step (dt = 1/500 s nominally): composite-rigid-body
/// mass matrix + bias forces, dense solve, contact and gravity included.
/// Velocity update is semi-implicit; positions advance with the averaged
/// velocity so constant-acceleration motion integrates exactly.
void step_dynamics(SimState& s, const VecX& torques, const PhysParams& p,
                   const RobotModel& model, const Heightfield& terrain,
                   double dt, const ContactParams& cp = {});

/// Forward-kinematics helper for tests and observation builders: world
/// position/velocity of a body-frame point.
void body_point_world(const SimState& s, const RobotModel& model, int body,
                      const Vec3& point, Vec3* pos, Vec3* vel);

/// World-frame center of mass and its velocity (test oracle for momentum
/// checks).
void com_state(const SimState& s, const RobotModel& model, const PhysParams& p,
               Vec3* com, Vec3* com_vel);

/// Total mechanical energy (kinetic + gravitational), for drift checks.
double mechanical_energy(const SimState& s, const RobotModel& model,
                         const PhysParams& p);

}  // namespace wmr
