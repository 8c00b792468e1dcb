#pragma once

#include <array>
#include <stdexcept>

#include "uam/geometry.hpp"
#include "uam/uav_dynamics.hpp"

namespace uam {

/// Classic DH parameters of one joint: the joint variable adds to theta_offset.
struct DhJoint {
  double theta_offset = 0.0;
  double d = 0.0;
  double a = 0.0;
  double alpha = 0.0;
};

struct ArmParams {
  std::array<DhJoint, 4> joints{{{0.0, 0.0, 0.363, 0.10},
                                 {0.0, 0.050, 0.441, -0.10},
                                 {0.0, 0.0, 0.007, -1.578},
                                 {0.0, 0.076, 0.200, 0.0}}};
  // T_D^B: arm base 8 cm under the body origin, rotated so the first three
  // joint axes are horizontal (pitch joints).
  Transform mount{rot_x(M_PI / 2.0), Vec3(0.0, 0.0, -0.08)};
  Vec4 beta{0.66, 0.68, 0.81, 0.85};
  Vec4 lower{-2.2, -0.4, -2.0, -2.6};
  Vec4 upper{1.2, 2.8, 2.0, 2.6};
  Vec4 rate_limit{3.0, 3.0, 3.0, 3.0};

  void validate() const {
    for (const auto& j : joints) {
      if (!std::isfinite(j.theta_offset) || !std::isfinite(j.d) || !std::isfinite(j.a) ||
          !std::isfinite(j.alpha) || std::abs(j.alpha) > M_PI) {
        throw std::invalid_argument("ArmParams: invalid DH joint");
      }
    }
    if (!(beta.array() > 0.0).all()) throw std::invalid_argument("ArmParams: beta must be positive");
    if (!(lower.array() < upper.array()).all()) {
      throw std::invalid_argument("ArmParams: joint lower limit must be below upper limit");
    }
    if (!is_valid(mount)) throw std::invalid_argument("ArmParams: mount is not a rigid transform");
  }

  bool within_limits(const Vec4& theta, double slack = 1e-9) const {
    return ((theta.array() >= lower.array() - slack) && (theta.array() <= upper.array() + slack))
        .all();
  }
};

struct ArmState {
  Vec4 theta = Vec4::Zero();
  Vec4 theta_cmd_last = Vec4::Zero();
};

/// T_i^{i-1} = RotZ(theta) TransZ(d) TransX(a) RotX(alpha).
template <typename Scalar>
TransformT<Scalar> dh_transform(const Scalar& theta, double d, double a, double alpha) {
  using std::cos;
  using std::sin;
  const Scalar ct = cos(theta);
  const Scalar st = sin(theta);
  const double ca = std::cos(alpha);
  const double sa = std::sin(alpha);
  TransformT<Scalar> t;
  t.rotation << ct, -st * ca, st * sa,
                st, ct * ca, -ct * sa,
                Scalar(0), Scalar(sa), Scalar(ca);
  t.translation << ct * a, st * a, Scalar(d);
  return t;
}

/// Frames 0..4 of the chain expressed in the arm base frame D.
template <typename Scalar>
std::array<TransformT<Scalar>, 5> chain_frames(const Vector4<Scalar>& theta,
                                               const ArmParams& params) {
  std::array<TransformT<Scalar>, 5> frames;
  frames[0] = TransformT<Scalar>::Identity();
  for (int i = 0; i < 4; ++i) {
    const DhJoint& j = params.joints[i];
    frames[i + 1] = frames[i] * dh_transform(Scalar(theta(i) + j.theta_offset), j.d, j.a, j.alpha);
  }
  return frames;
}

/// T_E^D
template <typename Scalar>
TransformT<Scalar> arm_transform(const Vector4<Scalar>& theta, const ArmParams& params) {
  return chain_frames(theta, params)[4];
}

/// T_E^W = T_B^W T_D^B T_E^D
template <typename Scalar>
TransformT<Scalar> fk_ee(const Vector4<Scalar>& theta, const ArmParams& params,
                         const TransformT<Scalar>& base_pose) {
  return base_pose * params.mount.template cast<Scalar>() * arm_transform(theta, params);
}

using Matrix6x10 = Eigen::Matrix<double, 6, 10>;

/// Maps [base linear velocity (world), base angular velocity (body), joint
/// rates] to the EE twist [linear (world), angular (world)].
inline Matrix6x10 ee_jacobian(const Vec4& theta, const BaseState& base, const ArmParams& params) {
  const Transform base_pose = base.pose();
  const auto frames = chain_frames(theta, params);
  const Transform to_world = base_pose * params.mount;
  const Vec3 p_ee = (to_world * frames[4]).translation;
  const Vec3 r = p_ee - base.p;

  Matrix6x10 jac = Matrix6x10::Zero();
  jac.block<3, 3>(0, 0).setIdentity();
  jac.block<3, 3>(0, 3) = -hat(r) * base.R;
  jac.block<3, 3>(3, 3) = base.R;
  for (int i = 0; i < 4; ++i) {
    const Transform f = to_world * frames[i];
    const Vec3 axis = f.rotation.col(2);
    jac.block<3, 1>(0, 6 + i) = axis.cross(p_ee - f.translation);
    jac.block<3, 1>(3, 6 + i) = axis;
  }
  return jac;
}

/// First-order servo: diag(beta) theta_dot + theta = theta_cmd + d.
template <typename Scalar>
Vector4<Scalar> servo_rhs(const Vector4<Scalar>& theta, const Vector4<Scalar>& theta_cmd,
                          const Vector4<Scalar>& d, const ArmParams& params) {
  return (theta_cmd + d - theta).cwiseQuotient(params.beta.template cast<Scalar>());
}

}  // namespace uam
