#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "uam/l1_adaptation.hpp"
#include "uam/plant_simulator.hpp"

namespace uam {
namespace {

const Vec4 kPosture(-1.1, 1.5, -0.4, 0.0);

Wrench hover_pd(const BaseState& x, const Vec3& p_ref, const UavParams& params) {
  const Vec3 acc = 4.0 * (p_ref - x.p) - 4.0 * x.v.head<3>() + params.gravity * Vec3::UnitZ();
  Wrench w;
  w.force = params.translational_mass().cwiseProduct(x.R.transpose() * acc);
  const Vec3 ang = -40.0 * rotation_error(x.R, Mat3::Identity()) - 12.0 * x.v.tail<3>();
  w.torque = params.inertia_diag().cwiseProduct(ang);
  return w;
}

Vec4 sweep(double t) {
  return kPosture + Vec4(0.3 * std::sin(M_PI * t), 0.2 * std::sin(0.6 * M_PI * t), 0.0, 0.1);
}

TEST(PlantConfig, Validation) {
  PlantConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.substep = 0.003;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = PlantConfig{};
  cfg.disturbance.backlash = -0.1;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = PlantConfig{};
  cfg.mismatch.mass = -1.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = PlantConfig{};
  cfg.disturbance.ground_effect.z_threshold = -1.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = PlantConfig{};
  cfg.noise.joint = -1e-3;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = PlantConfig{};
  cfg.noise.position_correlation_time = -0.5;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = PlantConfig{};
  cfg.disturbance.wrench_bias.frame = Frame::kWorld;
  EXPECT_THROW(cfg.validate(), FrameError);
}

TEST(PlantSimulator, MismatchScalesTrueParameters) {
  PlantConfig cfg;
  cfg.mismatch = {0.1, 0.05, 0.15};
  PlantSimulator plant(cfg, BaseState{}, kPosture, 1);
  EXPECT_TRUE(plant.true_uav().translational_mass().isApprox(1.1 * cfg.uav.translational_mass()));
  EXPECT_TRUE(plant.true_uav().inertia_diag().isApprox(1.05 * cfg.uav.inertia_diag()));
  EXPECT_TRUE(plant.true_arm().beta.isApprox(1.15 * cfg.arm.beta));
}

TEST(PlantSimulator, HoverIsStationary) {
  PlantConfig cfg;
  BaseState start;
  start.p = Vec3(0.3, -0.2, 1.5);
  PlantSimulator plant(cfg, start, kPosture, 1);
  const Wrench hover = hover_wrench(start.R, cfg.uav);
  for (int k = 0; k < 1000; ++k) plant.step(hover, kPosture);
  EXPECT_NEAR(plant.state().t, 10.0, 1e-9);
  EXPECT_LT((plant.state().base.p - start.p).norm(), 1e-6);
  EXPECT_LT(plant.state().base.v.norm(), 1e-6);
  EXPECT_LT((plant.state().theta - kPosture).norm(), 1e-12);
}

TEST(PlantSimulator, BacklashSwallowsSmallCommands) {
  PlantConfig cfg;
  cfg.disturbance.backlash = 0.5 * M_PI / 180.0;
  PlantSimulator plant(cfg, BaseState{}, kPosture, 1);
  const Wrench hover = hover_wrench(Mat3::Identity(), cfg.uav);
  const double amp = 0.2 * M_PI / 180.0;
  for (int k = 0; k < 500; ++k) {
    const double t = 0.01 * k;
    plant.step(hover, kPosture + Vec4::Constant(amp * std::sin(2.0 * M_PI * t)));
    ASSERT_EQ(plant.state().theta, kPosture) << "t=" << t;
  }
  // Beyond the dead band the joint follows, lagging by the half-width.
  const Vec4 far = kPosture + Vec4::Constant(0.1);
  for (int k = 0; k < 2000; ++k) plant.step(hover, far);
  EXPECT_LT((plant.state().theta - (far - Vec4::Constant(cfg.disturbance.backlash))).norm(), 1e-6);
}

TEST(PlantSimulator, ServoFollowsFirstOrderWithoutDriverLag) {
  PlantConfig cfg;
  cfg.disturbance.servo_driver_lag = 0.0;
  PlantSimulator plant(cfg, BaseState{}, kPosture, 1);
  const Vec4 step = kPosture + Vec4::Constant(0.2);
  const Wrench hover = hover_wrench(Mat3::Identity(), cfg.uav);
  for (int k = 0; k < 50; ++k) plant.step(hover, step);
  for (int i = 0; i < 4; ++i) {
    const double expected = kPosture(i) + 0.2 * (1.0 - std::exp(-0.5 / cfg.arm.beta(i)));
    EXPECT_NEAR(plant.state().theta(i), expected, 1e-12);
  }
}

TEST(PlantSimulator, DriverLagDelaysServo) {
  PlantConfig lagged;
  PlantConfig direct;
  direct.disturbance.servo_driver_lag = 0.0;
  PlantSimulator a(lagged, BaseState{}, kPosture, 1);
  PlantSimulator b(direct, BaseState{}, kPosture, 1);
  const Vec4 step = kPosture + Vec4::Constant(0.2);
  const Wrench hover = hover_wrench(Mat3::Identity(), lagged.uav);
  for (int k = 0; k < 5; ++k) {
    a.step(hover, step);
    b.step(hover, step);
  }
  EXPECT_TRUE(((a.state().theta - kPosture).array() < (b.state().theta - kPosture).array()).all());
  // Two cascaded first-order lags: theta(t) = 1 - (b e^{-t/b} - l e^{-t/l}) / (b - l).
  const double t = 0.05;
  for (int i = 0; i < 4; ++i) {
    const double be = lagged.arm.beta(i);
    const double l = lagged.disturbance.servo_driver_lag;
    const double frac = 1.0 - (be * std::exp(-t / be) - l * std::exp(-t / l)) / (be - l);
    EXPECT_NEAR(a.state().theta(i), kPosture(i) + 0.2 * frac, 1e-12);
  }
}

TEST(PlantSimulator, ClampsAndFlagsCommands) {
  PlantConfig cfg;
  PlantSimulator plant(cfg, BaseState{}, kPosture, 1);
  Wrench w = hover_wrench(Mat3::Identity(), cfg.uav);
  plant.step(w, kPosture);
  EXPECT_FALSE(plant.last_command_clamped());
  w.force.x() = 100.0;
  plant.step(w, kPosture);
  EXPECT_TRUE(plant.last_command_clamped());
  plant.step(hover_wrench(Mat3::Identity(), cfg.uav), Vec4::Constant(10.0));
  EXPECT_TRUE(plant.last_command_clamped());
  EXPECT_TRUE(cfg.arm.within_limits(plant.state().engaged));
  Wrench world = w;
  world.frame = Frame::kWorld;
  EXPECT_THROW(plant.step(world, kPosture), FrameError);
}

TEST(PlantSimulator, MassMismatchDescentRemovedByL1) {
  PlantConfig cfg;
  cfg.mismatch.mass = 0.1;
  BaseState start;
  start.p.z() = 2.0;
  auto run = [&](bool l1) {
    PlantSimulator plant(cfg, start, kPosture, 1);
    L1BaseEstimator est;
    Wrench applied = hover_wrench(Mat3::Identity(), cfg.uav);
    for (int k = 0; k < 1000; ++k) {
      const Measurement m = plant.measure();
      est.update(m.base, applied, cfg.uav);
      const Wrench tau = hover_pd(m.base, start.p, cfg.uav);
      applied = l1 ? base_augment(tau, est, cfg.wrench_lb, cfg.wrench_ub) : tau;
      plant.step(applied, kPosture);
    }
    return std::abs(plant.state().base.p.z() - start.p.z());
  };
  // Open loop the nominal hover command sinks.
  PlantSimulator open(cfg, start, kPosture, 1);
  for (int k = 0; k < 100; ++k) open.step(hover_wrench(Mat3::Identity(), cfg.uav), kPosture);
  EXPECT_LT(open.state().base.v.z(), -0.5);

  const double without = run(false);
  const double with = run(true);
  EXPECT_GT(without, 0.05);
  EXPECT_LE(with, 0.2 * without);
}

TEST(PlantSimulator, GroundEffectPushesUpNearFloor) {
  PlantConfig cfg;
  cfg.disturbance.ground_effect.enabled = true;
  BaseState low;
  low.p.z() = 0.5;
  PlantSimulator plant(cfg, low, kPosture, 1);
  const Wrench hover = hover_wrench(Mat3::Identity(), cfg.uav);
  plant.step(hover, kPosture);
  const double lift = plant.last_disturbance().force.z();
  const double rel = lift / hover.force.z();
  EXPECT_NEAR(rel, 0.05, 0.005);
  EXPECT_GT(plant.state().base.v.z(), 0.0);

  BaseState high;
  high.p.z() = 1.5;
  PlantSimulator above(cfg, high, kPosture, 1);
  above.step(hover, kPosture);
  EXPECT_EQ(above.last_disturbance().force.z(), 0.0);
}

TEST(PlantSimulator, CouplingEnvelope) {
  const auto k = DisturbanceConfig::default_coupling();
  const double peak_acc = 0.5 * std::pow(2.0 * M_PI, 2);
  const Vec6 w = k * Vec4(peak_acc, 0.0, 0.0, 0.0);
  EXPECT_NEAR(std::abs(w(0)), 5.0 * kModelUnitsPerNewton, 1e-12);
  EXPECT_NEAR(std::abs(w(4)), 1.4 * kModelUnitsPerNewton, 1e-12);

  // A real sweep through the servo never exceeds the commanded-acceleration envelope.
  PlantConfig cfg;
  cfg.disturbance.coupling = k;
  BaseState start;
  start.p.z() = 2.0;
  PlantSimulator plant(cfg, start, kPosture, 1);
  double peak_force = 0.0;
  double peak_torque = 0.0;
  for (int n = 0; n < 300; ++n) {
    const double t = 0.01 * n;
    const Vec4 cmd = kPosture + Vec4(0.5 * std::sin(2.0 * M_PI * t), 0.0, 0.0, 0.0);
    plant.step(hover_pd(plant.state().base, start.p, cfg.uav), cmd);
    peak_force = std::max(peak_force, std::abs(plant.last_disturbance().force.x()));
    peak_torque = std::max(peak_torque, std::abs(plant.last_disturbance().torque.y()));
  }
  EXPECT_GT(peak_force, 0.0);
  EXPECT_LE(peak_force, 5.0 * kModelUnitsPerNewton);
  EXPECT_LE(peak_torque, 1.4 * kModelUnitsPerNewton);
}

TEST(PlantSimulator, RotorLagDelaysWrench) {
  PlantConfig cfg;
  cfg.disturbance.rotor_lag = 0.05;
  BaseState start;
  start.p.z() = 2.0;
  PlantSimulator plant(cfg, start, kPosture, 1);
  EXPECT_TRUE(plant.state().wrench.isApprox(hover_wrench(Mat3::Identity(), cfg.uav).vector()));
  Wrench w = hover_wrench(Mat3::Identity(), cfg.uav);
  const double before = w.force.x();
  w.force.x() = 0.5;
  for (int k = 0; k < 5; ++k) plant.step(w, kPosture);
  // 50 substeps of a 50 ms lag: 1 - e^{-1} of the step has arrived.
  EXPECT_NEAR(plant.state().wrench(0), before + 0.5 * (1.0 - std::exp(-1.0)), 1e-12);
}

TEST(PlantSimulator, BlowUpIsReported) {
  PlantConfig cfg;
  PlantSimulator plant(cfg, BaseState{}, kPosture, 1);
  Wrench w;
  w.force = Vec3(3.0, 3.0, 3.0);
  bool thrown = false;
  try {
    for (int k = 0; k < 500; ++k) plant.step(w, kPosture);
  } catch (const PlantBlowUp& e) {
    thrown = true;
    EXPECT_GT(e.last_state.base.v.head<3>().norm(), cfg.max_speed);
    EXPECT_NE(std::string(e.what()).find("blow-up"), std::string::npos);
  }
  EXPECT_TRUE(thrown);

  PlantSimulator other(cfg, BaseState{}, kPosture, 1);
  Wrench bad;
  bad.force.x() = std::nan("");
  EXPECT_THROW(other.step(bad, kPosture), PlantBlowUp);
}

TEST(Measure, ZeroNoiseIsTruth) {
  PlantConfig cfg;
  BaseState s;
  s.p = Vec3(1.0, 2.0, 3.0);
  s.R = rot_z(0.3);
  PlantSimulator plant(cfg, s, kPosture, 9);
  const Measurement m = plant.measure();
  EXPECT_EQ(m.base.p, s.p);
  EXPECT_EQ(m.base.R, s.R);
  EXPECT_EQ(m.theta, kPosture);
}

TEST(Measure, NoiseStdMatchesConfig) {
  PlantConfig cfg;
  cfg.noise.position = 0.01;
  cfg.noise.rotation = 0.02;
  cfg.noise.joint = 0.001;
  PlantSimulator plant(cfg, BaseState{}, kPosture, 4);
  const int n = 10000;
  Vec3 sum_p = Vec3::Zero();
  Vec3 sq_p = Vec3::Zero();
  double sq_r = 0.0;
  double sq_j = 0.0;
  for (int i = 0; i < n; ++i) {
    const Measurement m = plant.measure();
    sum_p += m.base.p;
    sq_p += m.base.p.cwiseAbs2();
    sq_r += log_so3(m.base.R).squaredNorm();
    sq_j += (m.theta - kPosture).squaredNorm();
  }
  for (int i = 0; i < 3; ++i) {
    const double mean = sum_p(i) / n;
    const double std = std::sqrt(sq_p(i) / n - mean * mean);
    EXPECT_NEAR(std, 0.01, 0.05 * 0.01) << "axis " << i;
  }
  EXPECT_NEAR(std::sqrt(sq_r / (3 * n)), 0.02, 0.05 * 0.02);
  EXPECT_NEAR(std::sqrt(sq_j / (4 * n)), 0.001, 0.05 * 0.001);
}

TEST(Measure, CorrelatedPositionNoiseKeepsStdAndDecay) {
  PlantConfig cfg;
  cfg.noise.position = 0.01;
  cfg.noise.position_correlation_time = 0.2;
  PlantSimulator plant(cfg, BaseState{}, kPosture, 11);
  const int n = 200000;
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) x[i] = plant.measure().base.p.x();
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double var = 0.0;
  double lag = 0.0;
  for (int i = 0; i < n; ++i) {
    var += (x[i] - mean) * (x[i] - mean);
    if (i > 0) lag += (x[i] - mean) * (x[i - 1] - mean);
  }
  EXPECT_NEAR(std::sqrt(var / n), 0.01, 0.05 * 0.01);
  EXPECT_NEAR(lag / var, std::exp(-cfg.control_dt / 0.2), 0.01);
}

TEST(Measure, WhitePositionNoiseIsUncorrelated) {
  PlantConfig cfg;
  cfg.noise.position = 0.01;
  PlantSimulator plant(cfg, BaseState{}, kPosture, 12);
  const int n = 50000;
  double prev = plant.measure().base.p.y();
  double lag = 0.0;
  double var = 0.0;
  for (int i = 0; i < n; ++i) {
    const double y = plant.measure().base.p.y();
    lag += y * prev;
    var += y * y;
    prev = y;
  }
  EXPECT_NEAR(lag / var, 0.0, 0.02);
}

PlantConfig busy_config() {
  PlantConfig cfg;
  cfg.mismatch = {0.1, 0.05, 0.15};
  cfg.disturbance.coupling = DisturbanceConfig::default_coupling();
  cfg.disturbance.backlash = 0.004;
  cfg.disturbance.servo_bias = Vec4(0.03, -0.03, 0.02, 0.0);
  cfg.disturbance.wrench_bias.force = Vec3(0.05, 0.0, -0.05);
  cfg.noise.position = 0.001;
  cfg.noise.joint = 0.001;
  return cfg;
}

std::vector<PlantState> closed_loop_trace(PlantConfig cfg, std::uint64_t seed, double seconds) {
  BaseState start;
  start.p.z() = 2.0;
  PlantSimulator plant(cfg, start, kPosture, seed);
  std::vector<PlantState> out;
  const int steps = static_cast<int>(std::lround(seconds / cfg.control_dt));
  for (int k = 0; k < steps; ++k) {
    const Measurement m = plant.measure();
    out.push_back(plant.step(hover_pd(m.base, start.p, cfg.uav), sweep(m.t)));
  }
  return out;
}

TEST(PlantSimulator, DeterministicUnderSeed) {
  const auto a = closed_loop_trace(busy_config(), 7, 5.0);
  const auto b = closed_loop_trace(busy_config(), 7, 5.0);
  const auto c = closed_loop_trace(busy_config(), 8, 5.0);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    ASSERT_EQ(a[i].base.p, b[i].base.p);
    ASSERT_EQ(a[i].base.R, b[i].base.R);
    ASSERT_EQ(a[i].theta, b[i].theta);
  }
  EXPECT_NE(a.back().base.p, c.back().base.p);
}

TEST(PlantSimulator, FreeFlightConservesEnergy) {
  PlantConfig cfg;
  BaseState s;
  s.p.z() = 5.0;
  s.v << 1.0, -0.5, 2.0, 0.8, -1.2, 0.5;
  PlantSimulator plant(cfg, s, kPosture, 1);
  const double e0 = plant.base_energy();
  const double seconds = 1.5;
  for (int k = 0; k < 150; ++k) plant.step(Wrench{}, kPosture);
  EXPECT_LE(std::abs(plant.base_energy() - e0), 1e-6 * seconds);
}

TEST(PlantSimulator, SubstepConvergence) {
  PlantConfig coarse = busy_config();
  coarse.noise = NoiseConfig{};
  PlantConfig fine = coarse;
  fine.substep = 0.0005;
  const auto a = closed_loop_trace(coarse, 1, 60.0);
  const auto b = closed_loop_trace(fine, 1, 60.0);
  EXPECT_LT((a.back().base.p - b.back().base.p).norm(), 1e-4);
  EXPECT_LT((a.back().theta - b.back().theta).norm(), 1e-4);
}

}  // namespace
}  // namespace uam
