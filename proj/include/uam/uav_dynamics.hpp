#pragma once

#include <stdexcept>
#include <type_traits>

#include "uam/geometry.hpp"

namespace uam {

enum class Frame { kBody, kWorld };

class FrameError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DynamicsBlowUp : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename Scalar>
struct WrenchT {
  Vector3<Scalar> force = Vector3<Scalar>::Zero();
  Vector3<Scalar> torque = Vector3<Scalar>::Zero();
  Frame frame = Frame::kBody;

  Vector6<Scalar> vector() const {
    Vector6<Scalar> w;
    w << force, torque;
    return w;
  }

  template <typename Derived>
  static WrenchT FromVector(const Eigen::MatrixBase<Derived>& w, Frame frame = Frame::kBody) {
    return {w.template head<3>(), w.template tail<3>(), frame};
  }
};

using Wrench = WrenchT<double>;

/// Nominal or true rigid-body parameters of the hexarotor. The generalized
/// mass is diagonal, [translational (3), inertia (3)], in model units.
struct UavParams {
  Vec6 mass_diag = (Vec6() << 0.105, 0.121, 0.101, 0.025, 0.011, 0.013).finished();
  double gravity = 9.81;
  double max_speed = 20.0;

  Vec3 translational_mass() const { return mass_diag.head<3>(); }
  Vec3 inertia_diag() const { return mass_diag.tail<3>(); }
  Mat3 inertia() const { return inertia_diag().asDiagonal(); }

  void validate() const {
    if (!(mass_diag.array() > 0.0).all() || !mass_diag.allFinite()) {
      throw std::invalid_argument("UavParams: mass matrix must be positive definite");
    }
    if (!(gravity > 0.0)) throw std::invalid_argument("UavParams: gravity must be positive");
    if (!(max_speed > 0.0)) throw std::invalid_argument("UavParams: max_speed must be positive");
  }
};

/// Base state. Position and linear velocity live in the world frame, the
/// angular velocity in the body frame; R maps body to world.
template <typename Scalar>
struct BaseStateT {
  Vector3<Scalar> p = Vector3<Scalar>::Zero();
  Matrix3<Scalar> R = Matrix3<Scalar>::Identity();
  Vector6<Scalar> v = Vector6<Scalar>::Zero();

  auto linear_velocity() const { return v.template head<3>(); }
  auto angular_velocity() const { return v.template tail<3>(); }
  TransformT<Scalar> pose() const { return {R, p}; }
};

using BaseState = BaseStateT<double>;

template <typename Scalar>
struct BaseStateRateT {
  Vector3<Scalar> p_dot = Vector3<Scalar>::Zero();
  Matrix3<Scalar> r_dot = Matrix3<Scalar>::Zero();
  Vector6<Scalar> v_dot = Vector6<Scalar>::Zero();
};

using BaseStateRate = BaseStateRateT<double>;

/// Body-frame wrench that holds the vehicle stationary at attitude R.
template <typename Derived>
WrenchT<typename Derived::Scalar> hover_wrench(const Eigen::MatrixBase<Derived>& r,
                                               const UavParams& params) {
  using Scalar = typename Derived::Scalar;
  const Vector3<Scalar> up_body = r.transpose() * Vector3<Scalar>(Scalar(0), Scalar(0), Scalar(1));
  WrenchT<Scalar> w;
  w.force = up_body.cwiseProduct(params.translational_mass().template cast<Scalar>()) *
            Scalar(params.gravity);
  return w;
}

/// Newton-Euler vector field. Both wrenches are body-frame: the control force
/// is rotated into the world inside, gravity acts as -g z_W on the linear
/// acceleration, and the angular block carries the gyroscopic term w x Jw.
template <typename Scalar>
BaseStateRateT<Scalar> dynamics_rhs(const BaseStateT<Scalar>& s, const WrenchT<Scalar>& tau,
                                    const WrenchT<Scalar>& tau_ext, const UavParams& params) {
  if (tau.frame != Frame::kBody || tau_ext.frame != Frame::kBody) {
    throw FrameError("dynamics_rhs: wrenches must be expressed in the body frame");
  }
  const Vector3<Scalar> m = params.translational_mass().template cast<Scalar>();
  const Vector3<Scalar> j = params.inertia_diag().template cast<Scalar>();
  const Vector3<Scalar> omega = s.v.template tail<3>();

  BaseStateRateT<Scalar> rate;
  rate.p_dot = s.v.template head<3>();
  rate.r_dot = s.R * hat(omega);
  const Vector3<Scalar> force = tau.force + tau_ext.force;
  Vector3<Scalar> lin_acc = s.R * force.cwiseQuotient(m);
  lin_acc(2) -= Scalar(params.gravity);
  const Vector3<Scalar> torque =
      tau.torque + tau_ext.torque - omega.cross(j.cwiseProduct(omega));
  rate.v_dot << lin_acc, torque.cwiseQuotient(j);

  if constexpr (std::is_floating_point_v<Scalar>) {
    if (!rate.v_dot.allFinite() || !rate.r_dot.allFinite()) {
      throw DynamicsBlowUp("dynamics_rhs: non-finite state derivative");
    }
  }
  return rate;
}

namespace detail {
template <typename Scalar>
BaseStateT<Scalar> advance(const BaseStateT<Scalar>& s, const BaseStateRateT<Scalar>& k,
                           Scalar h) {
  BaseStateT<Scalar> out;
  out.p = s.p + k.p_dot * h;
  out.R = s.R + k.r_dot * h;
  out.v = s.v + k.v_dot * h;
  return out;
}
}  // namespace detail

/// Classic fourth-order Runge-Kutta step on (p, R, v) with the rotation
/// projected back onto SO(3) afterwards.
template <typename Scalar>
BaseStateT<Scalar> rk4_step(const BaseStateT<Scalar>& s, const WrenchT<Scalar>& tau,
                            const WrenchT<Scalar>& tau_ext, double dt, const UavParams& params) {
  if (!(dt > 0.0 && dt <= 0.1)) throw std::invalid_argument("rk4_step: dt must lie in (0, 0.1]");
  const Scalar h(dt);
  const Scalar half(0.5 * dt);
  const auto k1 = dynamics_rhs(s, tau, tau_ext, params);
  const auto k2 = dynamics_rhs(detail::advance(s, k1, half), tau, tau_ext, params);
  const auto k3 = dynamics_rhs(detail::advance(s, k2, half), tau, tau_ext, params);
  const auto k4 = dynamics_rhs(detail::advance(s, k3, h), tau, tau_ext, params);
  const Scalar sixth(dt / 6.0);
  BaseStateT<Scalar> out;
  out.p = s.p + (k1.p_dot + Scalar(2) * k2.p_dot + Scalar(2) * k3.p_dot + k4.p_dot) * sixth;
  out.R = orthonormalize(
      Matrix3<Scalar>(s.R + (k1.r_dot + Scalar(2) * k2.r_dot + Scalar(2) * k3.r_dot + k4.r_dot) * sixth));
  out.v = s.v + (k1.v_dot + Scalar(2) * k2.v_dot + Scalar(2) * k3.v_dot + k4.v_dot) * sixth;
  return out;
}

}  // namespace uam
