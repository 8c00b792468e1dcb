#pragma once

#include "uam/ee_mpc.hpp"

namespace uam {

/// Cascade gains. Index 0-2 act on position / world linear velocity, 3-5 on
/// attitude / body angular velocity.
struct PidGains {
  Vec6 kp_outer = (Vec6() << 6.0, 6.0, 6.0, 8.0, 8.0, 8.0).finished();
  Vec6 ki_outer = (Vec6() << 1.0, 1.0, 1.0, 0.0, 0.0, 0.0).finished();
  Vec6 kd_outer = Vec6::Zero();
  Vec6 kp_inner = (Vec6() << 25.0, 25.0, 25.0, 30.0, 30.0, 30.0).finished();
  Vec6 ki_inner = Vec6::Zero();
  Vec6 kd_inner = Vec6::Zero();
  double integral_clamp = 0.5;

  void validate() const;
};

struct PidState {
  Vec6 outer_integral = Vec6::Zero();
  Vec6 inner_integral = Vec6::Zero();
  Vec6 last_inner_error = Vec6::Zero();
  bool primed = false;
};

struct BaseSetpoint {
  Vec3 p = Vec3::Zero();
  Mat3 R = Mat3::Identity();
};

/// Position -> velocity -> acceleration cascade, mapped to a body wrench
/// through the nominal inertia with gravity and gyroscopic feedforward.
Wrench cascade_pid_step(const BaseSetpoint& setpoint, const BaseState& x_hat, const PidGains& gains,
                        PidState& state, double dt, const UavParams& params, const Vec6& lb,
                        const Vec6& ub);

struct IkOptions {
  int max_iterations = 100;
  double damping = 1e-3;
  double tolerance = 1e-6;
  double null_gain = 0.1;
  /// Per-coordinate motion cost [base p, base phi, theta].
  Vec10 weights = (Vec10() << 1, 1, 1, 1, 1, 1, 1, 1, 1, 1).finished();
};

struct IkResult {
  BaseSetpoint base;
  Vec4 theta = Vec4::Zero();
  double position_error = 0.0;
  double rotation_error = 0.0;
  int iterations = 0;
  /// Target could not be reached; the setpoint is the nearest feasible one.
  bool unreachable = false;
};

/// Damped least squares on the 10-DoF chain starting from `seed`, with a
/// null-space pull toward theta_ref and a level base.
IkResult ik_plan(const EeTarget& target, const MpcState& seed, const Vec4& theta_ref,
                 const UamParams& params, const IkOptions& options = {});

/// Defaults: 1 Hz critically damped EE loop; the joints carry a high
/// allocation cost because their rate loop sits behind the servo lag.
struct DffcGains {
  Vec6 kp = Vec6::Constant(39.5);
  Vec6 kd = Vec6::Constant(12.6);
  /// Integral action carried over from the position loop DFFC replaces.
  Vec6 ki = (Vec6() << 25.0, 25.0, 25.0, 0.0, 0.0, 0.0).finished();
  double integral_clamp = 0.5;
  /// Allocation cost of [base linear, base angular, joint] accelerations.
  Vec10 allocation = (Vec10() << 1, 1, 1, 1, 1, 1, 100, 100, 100, 100).finished();
  double damping = 1e-4;
  double joint_rate_leak = 0.5;
  /// Null-space posture PD toward theta_ref and a level base.
  double posture_kp = 4.0;
  double posture_kd = 4.0;

  void validate() const;
};

struct DffcState {
  Vec6 integral = Vec6::Zero();
  Vec4 theta_cmd = Vec4::Zero();
  Vec4 rate_cmd = Vec4::Zero();
  Vec4 last_theta = Vec4::Zero();
  bool primed = false;
  bool singular = false;
};

/// EE acceleration feedback a* = Kp e + Ki int(e) + Kd de, allocated through
/// the weighted pseudo-inverse of the EE Jacobian.
MpcControl dffc_step(const EeTarget& target, const MpcState& x_hat, const Vec4& theta_ref,
                     const DffcGains& gains, DffcState& state, double dt, const UamParams& params,
                     const Vec6& lb, const Vec6& ub);

}  // namespace uam
