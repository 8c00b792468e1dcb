#include "uam/l1_adaptation.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <unsupported/Eigen/MatrixFunctions>

namespace uam {

double lpf_alpha(double cutoff_hz, double dt) {
  if (!(cutoff_hz > 0.0) || !(dt > 0.0)) throw std::invalid_argument("lpf: cutoff and dt must be positive");
  return 1.0 - std::exp(-2.0 * M_PI * cutoff_hz * dt);
}

Eigen::MatrixXd piecewise_constant_gain(const Eigen::MatrixXd& a, double dt) {
  if (a.rows() != a.cols() || !a.allFinite()) throw std::invalid_argument("L1: A must be square and finite");
  if (!(dt > 0.0)) throw std::invalid_argument("L1: dt must be positive");
  const Eigen::VectorXcd eig = a.eigenvalues();
  if ((eig.real().array() >= 0.0).any()) throw std::invalid_argument("L1: A must be Hurwitz");
  const Eigen::MatrixXd e = (a * dt).exp();
  const Eigen::MatrixXd d = e - Eigen::MatrixXd::Identity(a.rows(), a.cols());
  Eigen::FullPivLU<Eigen::MatrixXd> lu(d);
  if (!lu.isInvertible()) throw std::invalid_argument("L1: exp(A dt) - I is singular");
  return -lu.solve(a * e);
}

L1BaseEstimator::L1BaseEstimator(const Mat6& a_v, double cutoff_hz, double dt)
    : a_(a_v), gain_(piecewise_constant_gain(a_v, dt)), alpha_(lpf_alpha(cutoff_hz, dt)), dt_(dt) {}

void L1BaseEstimator::reset(const Vec6& v_measured, const Wrench& tau_hat) {
  initialized_ = false;
  v_hat_ = v_measured;
  tau_hat_ = tau_hat.vector();
  tau_raw_.setZero();
  sigma_acc_.setZero();
  err_.setZero();
}

void L1BaseEstimator::update(const BaseState& measured, const Wrench& tau_applied,
                             const UavParams& params) {
  if (!initialized_) {
    v_hat_ = measured.v;
    last_ = measured;
    initialized_ = true;
    return;
  }
  // Predictor over the last period, driven by the measured state.
  const BaseStateRate nominal = dynamics_rhs(last_, tau_applied, Wrench{}, params);
  v_hat_ += dt_ * (nominal.v_dot + sigma_acc_ + a_ * err_);

  err_ = v_hat_ - measured.v;
  sigma_acc_ = gain_ * err_;
  tau_raw_.head<3>() = params.translational_mass().cwiseProduct(measured.R.transpose() * sigma_acc_.head<3>());
  tau_raw_.tail<3>() = params.inertia_diag().cwiseProduct(sigma_acc_.tail<3>());
  tau_hat_ += alpha_ * (tau_raw_ - tau_hat_);
  last_ = measured;
}

Wrench base_augment(const Wrench& tau_mpc, const L1BaseEstimator& est, const Vec6& lb,
                    const Vec6& ub) {
  const Vec6 w = (tau_mpc.vector() - est.estimate().vector()).cwiseMax(lb).cwiseMin(ub);
  return Wrench::FromVector(w);
}

L1JointEstimator::L1JointEstimator(const Mat4& a_d, double cutoff_hz, double dt)
    : a_(a_d), gain_(piecewise_constant_gain(a_d, dt)), alpha_(lpf_alpha(cutoff_hz, dt)), dt_(dt) {}

void L1JointEstimator::reset(const Vec4& theta_measured, const Vec4& d_hat) {
  initialized_ = false;
  theta_hat_ = theta_measured;
  d_hat_ = d_hat;
  d_raw_.setZero();
  rate_hat_.setZero();
  err_.setZero();
}

void L1JointEstimator::update(const Vec4& theta_measured, const Vec4& theta_cmd_applied,
                              const ArmParams& params) {
  if (!initialized_) {
    theta_hat_ = theta_measured;
    last_theta_ = theta_measured;
    initialized_ = true;
    return;
  }
  const Vec4 nominal = servo_rhs(last_theta_, theta_cmd_applied, Vec4::Zero().eval(), params);
  theta_hat_ += dt_ * (nominal + rate_hat_ + a_ * err_);

  err_ = theta_hat_ - theta_measured;
  rate_hat_ = gain_ * err_;
  d_raw_ = params.beta.cwiseProduct(rate_hat_);
  d_hat_ += alpha_ * (d_raw_ - d_hat_);
  last_theta_ = theta_measured;
}

Vec4 joint_augment(const Vec4& theta_cmd, const L1JointEstimator& est, const ArmParams& params) {
  return (theta_cmd - est.estimate()).cwiseMax(params.lower).cwiseMin(params.upper);
}

}  // namespace uam
