#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "uam/uav_dynamics.hpp"

namespace uam {
namespace {

Mat3 random_rotation(std::mt19937& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return Eigen::Quaterniond(n(rng), n(rng), n(rng), n(rng)).normalized().toRotationMatrix();
}

Vec6 random_vec6(std::mt19937& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Vec6 v;
  for (int i = 0; i < 6; ++i) v(i) = u(rng);
  return v;
}

// Body-frame Newton-Euler written out per component: the linear momentum
// balance is taken in body coordinates (with the transport term w x v_b) and
// mapped to the world afterwards.
Vec6 newton_euler_oracle(const BaseState& s, const Vec6& tau, const Vec6& ext,
                         const UavParams& p) {
  const Mat3& r = s.R;
  const Vec3 v_world = s.v.head<3>();
  const Vec3 w = s.v.tail<3>();
  Vec3 v_b;
  for (int i = 0; i < 3; ++i) v_b(i) = r(0, i) * v_world(0) + r(1, i) * v_world(1) + r(2, i) * v_world(2);
  const Vec3 g_b(r(2, 0) * p.gravity, r(2, 1) * p.gravity, r(2, 2) * p.gravity);
  Vec3 vb_dot;
  for (int i = 0; i < 3; ++i) vb_dot(i) = (tau(i) + ext(i)) / p.mass_diag(i) - g_b(i);
  const Vec3 wxv(w(1) * v_b(2) - w(2) * v_b(1), w(2) * v_b(0) - w(0) * v_b(2),
                 w(0) * v_b(1) - w(1) * v_b(0));
  vb_dot -= wxv;
  // d/dt (R v_b) = R (v_b_dot + w x v_b)
  const Vec3 a_body = vb_dot + wxv;
  Vec3 a_world;
  for (int i = 0; i < 3; ++i) a_world(i) = r(i, 0) * a_body(0) + r(i, 1) * a_body(1) + r(i, 2) * a_body(2);
  const double jx = p.mass_diag(3), jy = p.mass_diag(4), jz = p.mass_diag(5);
  Vec3 w_dot;
  w_dot(0) = (tau(3) + ext(3) - (jz - jy) * w(1) * w(2)) / jx;
  w_dot(1) = (tau(4) + ext(4) - (jx - jz) * w(2) * w(0)) / jy;
  w_dot(2) = (tau(5) + ext(5) - (jy - jx) * w(0) * w(1)) / jz;
  Vec6 out;
  out << a_world, w_dot;
  return out;
}

TEST(DynamicsRhs, HoverIsEquilibrium) {
  const UavParams params;
  std::mt19937 rng(1);
  for (int i = 0; i < 20; ++i) {
    BaseState s;
    s.R = i == 0 ? Mat3::Identity() : random_rotation(rng);
    const auto rate = dynamics_rhs(s, hover_wrench(s.R, params), Wrench{}, params);
    EXPECT_LT(rate.v_dot.norm(), 1e-12);
    EXPECT_LT(rate.p_dot.norm(), 1e-15);
  }
}

TEST(DynamicsRhs, ZeroControlFreeFalls) {
  const UavParams params;
  const auto rate = dynamics_rhs(BaseState{}, Wrench{}, Wrench{}, params);
  EXPECT_TRUE(rate.v_dot.head<3>().isApprox(Vec3(0, 0, -params.gravity)));
  EXPECT_TRUE(rate.v_dot.tail<3>().isZero(0.0));
}

TEST(DynamicsRhs, MatchesNewtonEulerOracle) {
  const UavParams params;
  std::mt19937 rng(2);
  for (int i = 0; i < 500; ++i) {
    BaseState s;
    s.p = random_vec6(rng, 3.0).head<3>();
    s.R = random_rotation(rng);
    s.v = random_vec6(rng, 4.0);
    const Vec6 tau = random_vec6(rng, 2.0);
    const Vec6 ext = random_vec6(rng, 0.5);
    const auto rate = dynamics_rhs(s, Wrench::FromVector(tau), Wrench::FromVector(ext), params);
    EXPECT_LT((rate.v_dot - newton_euler_oracle(s, tau, ext, params)).norm(), 1e-10);
    EXPECT_LT((rate.r_dot - s.R * hat(s.v.tail<3>())).norm(), 1e-15);
    EXPECT_TRUE(rate.p_dot.isApprox(s.v.head<3>()));
  }
}

TEST(DynamicsRhs, GyroscopicTermIsWorkless) {
  const UavParams params;
  std::mt19937 rng(3);
  for (int i = 0; i < 500; ++i) {
    BaseState s;
    s.R = random_rotation(rng);
    s.v = random_vec6(rng, 5.0);
    const auto rate = dynamics_rhs(s, Wrench{}, Wrench{}, params);
    const Vec3 w = s.v.tail<3>();
    // w^T J w_dot = -w^T (w x Jw) = 0 when torques vanish
    EXPECT_LT(std::abs(w.dot(params.inertia() * rate.v_dot.tail<3>())), 1e-10);
  }
}

TEST(DynamicsRhs, RejectsWrongFrameTag) {
  const UavParams params;
  Wrench world;
  world.frame = Frame::kWorld;
  EXPECT_THROW(dynamics_rhs(BaseState{}, world, Wrench{}, params), FrameError);
  EXPECT_THROW(dynamics_rhs(BaseState{}, Wrench{}, world, params), FrameError);
}

TEST(DynamicsRhs, RejectsNonFiniteOutput) {
  const UavParams params;
  Wrench bad;
  bad.force.x() = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(dynamics_rhs(BaseState{}, bad, Wrench{}, params), DynamicsBlowUp);
}

TEST(Rk4Step, HoverStaysPut) {
  const UavParams params;
  BaseState s;
  s.p = Vec3(0.3, -0.2, 1.5);
  s.R = rot_z(0.4) * rot_x(0.1);
  BaseState x = s;
  for (int i = 0; i < 100; ++i) x = rk4_step(x, hover_wrench(x.R, params), Wrench{}, 0.01, params);
  EXPECT_LT((x.p - s.p).norm(), 1e-9);
  EXPECT_LT((x.R - s.R).norm(), 1e-9);
  EXPECT_LT(x.v.norm(), 1e-9);
}

TEST(Rk4Step, FreeFallMatchesClosedForm) {
  const UavParams params;
  BaseState x;
  for (int i = 0; i < 100; ++i) x = rk4_step(x, Wrench{}, Wrench{}, 0.01, params);
  EXPECT_NEAR(x.p.z(), -0.5 * params.gravity, 1e-6);
  EXPECT_NEAR(x.v(2), -params.gravity, 1e-9);
}

TEST(Rk4Step, RejectsStepOutsideRange) {
  const UavParams params;
  EXPECT_THROW(rk4_step(BaseState{}, Wrench{}, Wrench{}, 0.0, params), std::invalid_argument);
  EXPECT_THROW(rk4_step(BaseState{}, Wrench{}, Wrench{}, 0.2, params), std::invalid_argument);
}

double endpoint_error(double dt, const BaseState& ref, const BaseState& s0, const Wrench& tau,
                      const UavParams& params, double horizon) {
  BaseState x = s0;
  const int steps = static_cast<int>(std::lround(horizon / dt));
  for (int i = 0; i < steps; ++i) x = rk4_step(x, tau, Wrench{}, dt, params);
  return (x.p - ref.p).norm() + (x.R - ref.R).norm() + (x.v - ref.v).norm();
}

TEST(Rk4Step, FourthOrderConvergence) {
  const UavParams params;
  BaseState s0;
  s0.R = rot_y(0.3);
  s0.v << 0.5, -0.2, 0.1, 1.5, -2.0, 3.0;
  Wrench tau;
  tau.force = Vec3(0.1, 0.05, 1.2);
  tau.torque = Vec3(0.01, -0.02, 0.005);
  const double horizon = 1.0;
  BaseState ref = s0;
  for (int i = 0; i < 4000; ++i) ref = rk4_step(ref, tau, Wrench{}, horizon / 4000, params);

  const double e1 = endpoint_error(0.05, ref, s0, tau, params, horizon);
  const double e2 = endpoint_error(0.025, ref, s0, tau, params, horizon);
  const double e3 = endpoint_error(0.0125, ref, s0, tau, params, horizon);
  EXPECT_GE(e1 / e2, std::pow(2.0, 3.5));
  EXPECT_GE(e2 / e3, std::pow(2.0, 3.5));
}

TEST(Rk4Step, PrincipalAxisSpinKeepsRate) {
  const UavParams params;
  BaseState x;
  x.v << 0, 0, 0, 0, 0, 4.0;
  const double speed = x.v.tail<3>().norm();
  for (int i = 0; i < 1000; ++i) x = rk4_step(x, hover_wrench(x.R, params), Wrench{}, 0.01, params);
  EXPECT_NEAR(x.v.tail<3>().norm(), speed, 1e-8);
  EXPECT_TRUE(is_rotation(x.R, 1e-9));
}

TEST(Rk4Step, TorqueFreeTumbleConservesMomentumAndEnergy) {
  const UavParams params;
  BaseState x;
  x.v << 0, 0, 0, 1.0, 0.4, -0.7;
  const Mat3 j = params.inertia();
  const auto momentum = [&](const BaseState& s) -> Vec3 { return s.R * j * s.v.tail<3>(); };
  const auto energy = [&](const BaseState& s) { return 0.5 * s.v.tail<3>().dot(j * s.v.tail<3>()); };
  const Vec3 h0 = momentum(x);
  const double e0 = energy(x);
  for (int i = 0; i < 1000; ++i) {
    x = rk4_step(x, hover_wrench(x.R, params), Wrench{}, 0.01, params);
    ASSERT_TRUE(is_rotation(x.R, 1e-9));
  }
  EXPECT_LT((momentum(x) - h0).norm(), 1e-6);
  EXPECT_NEAR(energy(x), e0, 1e-6);
}

}  // namespace
}  // namespace uam
