#include "uam/baseline_controllers.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/SVD>

namespace uam {

namespace {

void check_nonneg(const Eigen::VectorXd& v, const char* what) {
  if (!v.allFinite() || (v.array() < 0.0).any()) {
    throw std::invalid_argument(std::string(what) + " must be nonnegative");
  }
}

Vec6 base_wrench_for(const Vec6& acc, const BaseState& x, const UavParams& params) {
  // acc: world linear acceleration, body angular acceleration.
  Vec3 lin = acc.head<3>();
  lin.z() += params.gravity;
  const Vec3 omega = x.v.tail<3>();
  const Vec3 j = params.inertia_diag();
  Vec6 w;
  w.head<3>() = params.translational_mass().cwiseProduct(x.R.transpose() * lin);
  w.tail<3>() = j.cwiseProduct(acc.tail<3>()) + omega.cross(j.cwiseProduct(omega));
  return w;
}

}  // namespace

void PidGains::validate() const {
  check_nonneg(kp_outer, "PidGains kp_outer");
  check_nonneg(ki_outer, "PidGains ki_outer");
  check_nonneg(kd_outer, "PidGains kd_outer");
  check_nonneg(kp_inner, "PidGains kp_inner");
  check_nonneg(ki_inner, "PidGains ki_inner");
  check_nonneg(kd_inner, "PidGains kd_inner");
  if (!(integral_clamp > 0.0)) throw std::invalid_argument("PidGains: integral clamp must be positive");
}

Wrench cascade_pid_step(const BaseSetpoint& setpoint, const BaseState& x_hat, const PidGains& gains,
                        PidState& state, double dt, const UavParams& params, const Vec6& lb,
                        const Vec6& ub) {
  if (!(dt > 0.0)) throw std::invalid_argument("cascade_pid_step: dt must be positive");
  Vec6 e_outer;
  e_outer << setpoint.p - x_hat.p, -rotation_error(x_hat.R, setpoint.R);
  const double clamp = gains.integral_clamp;
  state.outer_integral = (state.outer_integral + dt * e_outer).cwiseMax(-clamp).cwiseMin(clamp);

  Vec6 rate_now;
  rate_now << x_hat.v.head<3>(), x_hat.v.tail<3>();
  Vec6 v_ref = gains.kp_outer.cwiseProduct(e_outer) + gains.ki_outer.cwiseProduct(state.outer_integral) -
               gains.kd_outer.cwiseProduct(rate_now);

  const Vec6 e_inner = v_ref - rate_now;
  state.inner_integral = (state.inner_integral + dt * e_inner).cwiseMax(-clamp).cwiseMin(clamp);
  const Vec6 de = state.primed ? Vec6((e_inner - state.last_inner_error) / dt) : Vec6::Zero();
  state.last_inner_error = e_inner;
  state.primed = true;
  const Vec6 acc = gains.kp_inner.cwiseProduct(e_inner) +
                   gains.ki_inner.cwiseProduct(state.inner_integral) + gains.kd_inner.cwiseProduct(de);

  const Vec6 w = base_wrench_for(acc, x_hat, params).cwiseMax(lb).cwiseMin(ub);
  return Wrench::FromVector(w);
}

IkResult ik_plan(const EeTarget& target, const MpcState& seed, const Vec4& theta_ref,
                 const UamParams& params, const IkOptions& options) {
  const ArmParams& arm = params.arm;
  MpcState x = seed;
  x.base.v.setZero();
  x.theta = x.theta.cwiseMax(arm.lower).cwiseMin(arm.upper);
  IkResult result;

  const Eigen::Matrix<double, 10, 1> w_inv = options.weights.cwiseInverse();
  const double lambda2 = options.damping * options.damping;
  Vec6 err = Vec6::Zero();
  for (int it = 0; it < options.max_iterations; ++it) {
    const Transform ee = x.ee_pose(arm);
    err << target.p_ref - ee.translation, log_so3(target.R_ref * ee.rotation.transpose());
    result.iterations = it;
    if (err.head<3>().norm() < options.tolerance && err.tail<3>().norm() < options.tolerance) break;

    const Matrix6x10 j = ee_jacobian(x.theta, x.base, arm);
    const Eigen::Matrix<double, 10, 6> jw = w_inv.asDiagonal() * j.transpose();
    const Mat6 jj = j * jw + lambda2 * Mat6::Identity();
    const Eigen::LDLT<Mat6> ldlt(jj);
    Vec10 dq = jw * ldlt.solve(err);

    // Secondary task projected into the weighted null space.
    Vec10 bias = Vec10::Zero();
    bias.segment<3>(3) = -log_so3(x.base.R);
    bias.tail<4>() = theta_ref - x.theta;
    const Vec10 jb = jw * ldlt.solve(j * bias);
    dq += options.null_gain * (bias - jb);

    x.base.p += dq.head<3>();
    x.base.R = x.base.R * exp_so3(Vec3(dq.segment<3>(3)));
    x.theta = (x.theta + dq.tail<4>()).cwiseMax(arm.lower).cwiseMin(arm.upper);
  }
  const Transform ee = x.ee_pose(arm);
  result.position_error = (target.p_ref - ee.translation).norm();
  result.rotation_error = log_so3(target.R_ref * ee.rotation.transpose()).norm();
  result.base = {x.base.p, x.base.R};
  result.theta = x.theta;
  if (result.position_error > 1e-3 || result.rotation_error > 1e-2) result.unreachable = true;
  return result;
}

void DffcGains::validate() const {
  check_nonneg(kp, "DffcGains kp");
  check_nonneg(kd, "DffcGains kd");
  check_nonneg(ki, "DffcGains ki");
  if (!(integral_clamp > 0.0)) throw std::invalid_argument("DffcGains: integral clamp must be positive");
  if (!(allocation.array() > 0.0).all()) throw std::invalid_argument("DffcGains: allocation weights must be positive");
  if (!(posture_kp >= 0.0) || !(posture_kd >= 0.0)) throw std::invalid_argument("DffcGains: negative posture gain");
  if (!(damping >= 0.0) || !(joint_rate_leak >= 0.0)) throw std::invalid_argument("DffcGains: negative damping");
}

MpcControl dffc_step(const EeTarget& target, const MpcState& x_hat, const Vec4& theta_ref,
                     const DffcGains& gains, DffcState& state, double dt, const UamParams& params,
                     const Vec6& lb, const Vec6& ub) {
  if (!(dt > 0.0)) throw std::invalid_argument("dffc_step: dt must be positive");
  const ArmParams& arm = params.arm;
  if (!state.primed) {
    state.theta_cmd = x_hat.theta;
    state.rate_cmd.setZero();
    state.last_theta = x_hat.theta;
    state.primed = true;
  }
  const Vec4 theta_rate = (x_hat.theta - state.last_theta) / dt;
  state.last_theta = x_hat.theta;

  const Matrix6x10 j = ee_jacobian(x_hat.theta, x_hat.base, arm);
  Vec10 qdot;
  qdot << x_hat.base.v, theta_rate;
  const Transform ee = x_hat.ee_pose(arm);
  Vec6 e;
  e << target.p_ref - ee.translation, log_so3(target.R_ref * ee.rotation.transpose());
  Vec6 ee_twist_ref = Vec6::Zero();
  ee_twist_ref.head<3>() = target.v_ref.head<3>();
  const Vec6 de = ee_twist_ref - j * qdot;
  state.integral = (state.integral + dt * e).cwiseMax(-gains.integral_clamp).cwiseMin(gains.integral_clamp);
  const Vec6 a_star =
      gains.kp.cwiseProduct(e) + gains.ki.cwiseProduct(state.integral) + gains.kd.cwiseProduct(de);

  const Vec10 w_inv = gains.allocation.cwiseInverse();
  const Eigen::Matrix<double, 10, 6> jw = w_inv.asDiagonal() * j.transpose();
  const Mat6 jj = j * jw;
  const Eigen::JacobiSVD<Mat6> svd(jj);
  const double cond = svd.singularValues()(0) / std::max(svd.singularValues()(5), 1e-300);
  state.singular = cond > 1e6;
  const double damping = state.singular ? std::max(gains.damping, 1e-2) : gains.damping;
  const auto solver = (jj + damping * Mat6::Identity()).ldlt();
  Vec10 posture = Vec10::Zero();
  posture.segment<3>(3) = -gains.posture_kp * log_so3(x_hat.base.R) - gains.posture_kd * x_hat.base.v.tail<3>();
  posture.tail<4>() = gains.posture_kp * (theta_ref - x_hat.theta) - gains.posture_kd * theta_rate;
  const Vec10 acc = jw * solver.solve(a_star) + posture - jw * solver.solve(j * posture);

  MpcControl u;
  u.tau = Wrench::FromVector(base_wrench_for(acc.head<6>(), x_hat.base, params.uav).cwiseMax(lb).cwiseMin(ub));
  state.rate_cmd += dt * (acc.tail<4>() - gains.joint_rate_leak * state.rate_cmd);
  state.theta_cmd = (state.theta_cmd + dt * state.rate_cmd).cwiseMax(arm.lower).cwiseMin(arm.upper);
  u.theta_cmd = state.theta_cmd;
  return u;
}

}  // namespace uam
