#pragma once

// 6D spatial-vector algebra (Featherstone convention, angular part first).
// A Plucker transform X = {E, r} maps motion vectors from frame A to frame B
// where E rotates A into B and r is the origin of B expressed in A:
//   v_B = [E*w_A, E*(v_A - r x w_A)]

#include <Eigen/Dense>

namespace wmr {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

inline Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

struct SpatialVec {
  Vec3 ang = Vec3::Zero();
  Vec3 lin = Vec3::Zero();

  SpatialVec() = default;
  SpatialVec(const Vec3& a, const Vec3& l) : ang(a), lin(l) {}

  SpatialVec operator+(const SpatialVec& o) const { return {ang + o.ang, lin + o.lin}; }
  SpatialVec operator-(const SpatialVec& o) const { return {ang - o.ang, lin - o.lin}; }
  SpatialVec operator*(double s) const { return {ang * s, lin * s}; }
  Eigen::Matrix<double, 6, 1> vec() const {
    Eigen::Matrix<double, 6, 1> v;
    v << ang, lin;
    return v;
  }
  static SpatialVec from(const Eigen::Matrix<double, 6, 1>& v) {
    return {v.head<3>(), v.tail<3>()};
  }
};

/// Motion-space cross product: v x m.
inline SpatialVec crm(const SpatialVec& v, const SpatialVec& m) {
  return {v.ang.cross(m.ang), v.ang.cross(m.lin) + v.lin.cross(m.ang)};
}

/// Force-space cross product: v x* f.
inline SpatialVec crf(const SpatialVec& v, const SpatialVec& f) {
  return {v.ang.cross(f.ang) + v.lin.cross(f.lin), v.ang.cross(f.lin)};
}

struct SpatialTransform {
  Mat3 E = Mat3::Identity();  // rotation A -> B
  Vec3 r = Vec3::Zero();      // origin of B in A coordinates

  static SpatialTransform identity() { return {}; }

  /// Composition: (X2 * X1) maps A -> C when X1: A -> B and X2: B -> C.
  SpatialTransform operator*(const SpatialTransform& x1) const {
    return {E * x1.E, x1.r + x1.E.transpose() * r};
  }

  SpatialVec apply(const SpatialVec& v) const {
    return {E * v.ang, E * (v.lin - r.cross(v.ang))};
  }
  /// Inverse motion transform (B -> A).
  SpatialVec apply_inverse(const SpatialVec& v) const {
    const Vec3 w = E.transpose() * v.ang;
    return {w, E.transpose() * v.lin + r.cross(w)};
  }
  /// Force transform B -> A (i.e. X^T f, dual of apply).
  SpatialVec apply_transpose(const SpatialVec& f) const {
    const Vec3 n = E.transpose() * f.ang;
    const Vec3 l = E.transpose() * f.lin;
    return {n + r.cross(l), l};
  }
  /// Force transform A -> B (X^{-T} f).
  SpatialVec apply_inverse_transpose(const SpatialVec& f) const {
    return {E * (f.ang - r.cross(f.lin)), E * f.lin};
  }

  Eigen::Matrix<double, 6, 6> matrix() const {
    Eigen::Matrix<double, 6, 6> m = Eigen::Matrix<double, 6, 6>::Zero();
    m.topLeftCorner<3, 3>() = E;
    m.bottomRightCorner<3, 3>() = E;
    m.bottomLeftCorner<3, 3>() = -E * skew(r);
    return m;
  }
};

/// Spatial rigid-body inertia about the body-frame origin:
///   [ I  h x ; h x^T? ]  stored as (m, h = m*c, I).
struct SpatialInertia {
  double m = 0.0;
  Vec3 h = Vec3::Zero();   // m * com
  Mat3 I = Mat3::Zero();   // rotational inertia about the frame origin

  static SpatialInertia from_mass_com(double mass, const Vec3& com, const Mat3& I_com) {
    SpatialInertia si;
    si.m = mass;
    si.h = mass * com;
    si.I = I_com + mass * skew(com) * skew(com).transpose();
    return si;
  }

  SpatialVec apply(const SpatialVec& v) const {
    return {I * v.ang + h.cross(v.lin), m * v.lin - h.cross(v.ang)};
  }

  SpatialInertia operator+(const SpatialInertia& o) const {
    SpatialInertia s;
    s.m = m + o.m;
    s.h = h + o.h;
    s.I = I + o.I;
    return s;
  }

  Eigen::Matrix<double, 6, 6> matrix() const {
    Eigen::Matrix<double, 6, 6> mm;
    mm.topLeftCorner<3, 3>() = I;
    mm.topRightCorner<3, 3>() = skew(h);
    mm.bottomLeftCorner<3, 3>() = skew(h).transpose();
    mm.bottomRightCorner<3, 3>() = m * Mat3::Identity();
    return mm;
  }

  /// I' = X^T I X: express this inertia (given in B) in frame A, where
  /// X maps A -> B.
  SpatialInertia transform_to_parent(const SpatialTransform& x) const {
    const Mat3 Et = x.E.transpose();
    const Vec3 hA = Et * h + m * x.r;
    SpatialInertia s;
    s.m = m;
    s.h = hA;
    s.I = Et * I * x.E + skew(x.r) * skew(Et * h).transpose() +
          skew(hA) * skew(x.r).transpose();
    return s;
  }
};

}  // namespace wmr
