#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "uam/arm_model.hpp"
#include "uam/uav_dynamics.hpp"

namespace uam {

/// Newton-valued magnitudes are mapped into model force units by weight
/// fraction: the model hover force (~1.0) stands for a ~4.5 kg hexarotor
/// with arm (~44 N).
inline constexpr double kModelUnitsPerNewton = 1.0 / 44.0;

/// Relative error of the true plant against the nominal model.
struct Mismatch {
  double mass = 0.0;
  double inertia = 0.0;
  double beta = 0.0;
};

struct GroundEffect {
  bool enabled = false;
  double z_threshold = 1.0;
  double gain = 0.206;
};

struct DisturbanceConfig {
  Wrench wrench_bias;
  /// Body wrench per unit joint acceleration (rows: force, torque).
  Eigen::Matrix<double, 6, 4> coupling = Eigen::Matrix<double, 6, 4>::Zero();
  GroundEffect ground_effect;
  double backlash = 0.0;
  Vec4 servo_bias = Vec4::Zero();
  /// Driver lag ahead of the first-order servo response (s); zero makes the
  /// true servo exactly first order.
  double servo_driver_lag = 0.02;
  /// First-order time constant between the commanded and the delivered base
  /// wrench (s); zero delivers the command instantly.
  double rotor_lag = 0.0;
  double floor_z = 0.0;

  void validate() const;
  /// Reaction gains sized so a 0.5 rad, 1 Hz sweep of joint 1 peaks at 5 N
  /// and 1.4 N m, in model units.
  static Eigen::Matrix<double, 6, 4> default_coupling();
};

struct NoiseConfig {
  double position = 0.0;
  /// Zero gives white position noise; otherwise first-order Gauss-Markov
  /// with this correlation time and stationary std `position`.
  double position_correlation_time = 0.0;
  double rotation = 0.0;
  double velocity = 0.0;
  double angular_velocity = 0.0;
  double joint = 0.0;

  void validate() const;
};

struct PlantConfig {
  UavParams uav;
  ArmParams arm;
  Mismatch mismatch;
  DisturbanceConfig disturbance;
  NoiseConfig noise;
  double substep = 0.001;
  double control_dt = 0.01;
  Vec6 wrench_lb = (Vec6() << -3, -3, 0, -0.5, -0.5, -0.5).finished();
  Vec6 wrench_ub = (Vec6() << 3, 3, 3, 0.5, 0.5, 0.5).finished();
  double max_speed = 20.0;

  void validate() const;
  UavParams true_uav() const;
  ArmParams true_arm() const;
};

struct PlantState {
  BaseState base;
  Vec4 theta = Vec4::Zero();
  Vec4 theta_dot = Vec4::Zero();
  /// Backlash output: the command the servo actually sees.
  Vec4 engaged = Vec4::Zero();
  /// Driver stage output feeding the first-order lag.
  Vec4 driven = Vec4::Zero();
  /// Body wrench the rotors currently deliver.
  Vec6 wrench = Vec6::Zero();
  double t = 0.0;
};

struct Measurement {
  double t = 0.0;
  BaseState base;
  Vec4 theta = Vec4::Zero();
};

class PlantBlowUp : public DynamicsBlowUp {
 public:
  PlantBlowUp(const std::string& what, PlantState last) : DynamicsBlowUp(what), last_state(std::move(last)) {}
  PlantState last_state;
};

class PlantSimulator {
 public:
  PlantSimulator(PlantConfig config, const BaseState& base, const Vec4& theta, std::uint64_t seed);

  /// Holds (tau, theta_cmd) for one control period.
  const PlantState& step(const Wrench& tau, const Vec4& theta_cmd);
  Measurement measure();

  const PlantState& state() const { return state_; }
  const PlantConfig& config() const { return config_; }
  const UavParams& true_uav() const { return uav_; }
  const ArmParams& true_arm() const { return arm_; }
  bool last_command_clamped() const { return clamped_; }
  /// Body-frame disturbance wrench acting during the last substep.
  const Wrench& last_disturbance() const { return last_disturbance_; }

  double base_energy() const;

 private:
  Wrench disturbance(const BaseState& base, const Vec4& theta_ddot) const;
  void apply_backlash(const Vec4& theta_cmd);

  PlantConfig config_;
  UavParams uav_;
  ArmParams arm_;
  PlantState state_;
  std::mt19937_64 rng_;
  bool clamped_ = false;
  Wrench last_disturbance_;
  Vec3 position_error_ = Vec3::Zero();
  bool position_error_primed_ = false;
};

}  // namespace uam
