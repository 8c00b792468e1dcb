#pragma once

#include "uam/arm_model.hpp"
#include "uam/uav_dynamics.hpp"

namespace uam {

using Mat4 = Eigen::Matrix<double, 4, 4>;

/// First-order discrete low-pass y <- y + alpha (x - y), alpha = 1 - exp(-2 pi fc dt).
double lpf_alpha(double cutoff_hz, double dt);

/// -(e^{A dt} - I)^{-1} A e^{A dt}. Throws std::invalid_argument unless A is
/// Hurwitz.
Eigen::MatrixXd piecewise_constant_gain(const Eigen::MatrixXd& a, double dt);

/// Base external-wrench estimator. The predictor runs on the measured state
/// with the wrench that was actually applied over the last period; the
/// filtered estimate converges to +tau_ext (body frame).
class L1BaseEstimator {
 public:
  explicit L1BaseEstimator(const Mat6& a_v = -2.0 * Mat6::Identity(), double cutoff_hz = 5.0,
                           double dt = 0.01);

  void reset(const Vec6& v_measured, const Wrench& tau_hat = Wrench{});
  void update(const BaseState& measured, const Wrench& tau_applied, const UavParams& params);

  Wrench estimate() const { return Wrench::FromVector(tau_hat_); }
  const Vec6& raw_estimate() const { return tau_raw_; }
  const Vec6& v_hat() const { return v_hat_; }
  const Mat6& adaptation_gain() const { return gain_; }
  const Mat6& a_v() const { return a_; }
  double filter_alpha() const { return alpha_; }
  double dt() const { return dt_; }

 private:
  Mat6 a_;
  Mat6 gain_;
  double alpha_;
  double dt_;
  bool initialized_ = false;
  Vec6 v_hat_ = Vec6::Zero();
  Vec6 tau_raw_ = Vec6::Zero();
  Vec6 tau_hat_ = Vec6::Zero();
  Vec6 sigma_acc_ = Vec6::Zero();
  Vec6 err_ = Vec6::Zero();
  BaseState last_;
};

/// tau* = tau_mpc - tau_hat, clamped to [lb, ub].
Wrench base_augment(const Wrench& tau_mpc, const L1BaseEstimator& est, const Vec6& lb,
                    const Vec6& ub);

/// Servo disturbance estimator on the first-order joint model.
class L1JointEstimator {
 public:
  explicit L1JointEstimator(const Mat4& a_d = -2.0 * Mat4::Identity(), double cutoff_hz = 5.0,
                            double dt = 0.01);

  void reset(const Vec4& theta_measured, const Vec4& d_hat = Vec4::Zero());
  void update(const Vec4& theta_measured, const Vec4& theta_cmd_applied, const ArmParams& params);

  const Vec4& estimate() const { return d_hat_; }
  const Vec4& raw_estimate() const { return d_raw_; }
  const Vec4& theta_hat() const { return theta_hat_; }
  const Mat4& adaptation_gain() const { return gain_; }
  double filter_alpha() const { return alpha_; }

 private:
  Mat4 a_;
  Mat4 gain_;
  double alpha_;
  double dt_;
  bool initialized_ = false;
  Vec4 theta_hat_ = Vec4::Zero();
  Vec4 d_raw_ = Vec4::Zero();
  Vec4 d_hat_ = Vec4::Zero();
  Vec4 rate_hat_ = Vec4::Zero();
  Vec4 err_ = Vec4::Zero();
  Vec4 last_theta_ = Vec4::Zero();
};

/// theta* = theta_cmd - d_hat, clamped to the joint limits.
Vec4 joint_augment(const Vec4& theta_cmd, const L1JointEstimator& est, const ArmParams& params);

}  // namespace uam
