#include "uam/plant_simulator.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace uam {

void DisturbanceConfig::validate() const {
  if (!wrench_bias.vector().allFinite() || !coupling.allFinite() || !servo_bias.allFinite()) {
    throw std::invalid_argument("DisturbanceConfig: non-finite entry");
  }
  if (wrench_bias.frame != Frame::kBody) throw FrameError("DisturbanceConfig: wrench bias must be body-frame");
  if (!(servo_driver_lag >= 0.0)) throw std::invalid_argument("DisturbanceConfig: driver lag must be nonnegative");
  if (!(rotor_lag >= 0.0)) throw std::invalid_argument("DisturbanceConfig: rotor lag must be nonnegative");
  if (!(backlash >= 0.0)) throw std::invalid_argument("DisturbanceConfig: backlash must be nonnegative");
  if (!(ground_effect.gain >= 0.0)) throw std::invalid_argument("DisturbanceConfig: ground-effect gain must be nonnegative");
  if (!(ground_effect.z_threshold > floor_z)) {
    throw std::invalid_argument("DisturbanceConfig: ground-effect threshold must lie above the floor");
  }
}

Eigen::Matrix<double, 6, 4> DisturbanceConfig::default_coupling() {
  // Joints 1-3 swing in the body x-z plane, joint 4 rolls the wrist.
  const double peak_acc = 0.5 * std::pow(2.0 * M_PI, 2);
  const double kf = 5.0 * kModelUnitsPerNewton / peak_acc;
  const double kt = 1.4 * kModelUnitsPerNewton / peak_acc;
  Eigen::Matrix<double, 6, 4> k = Eigen::Matrix<double, 6, 4>::Zero();
  k.row(0) << -kf, -0.6 * kf, -0.3 * kf, 0.0;
  k.row(2) << 0.3 * kf, 0.2 * kf, 0.1 * kf, 0.0;
  k.row(4) << kt, 0.6 * kt, 0.3 * kt, 0.0;
  k.row(5) << 0.0, 0.0, 0.0, 0.1 * kt;
  return k;
}

void NoiseConfig::validate() const {
  for (double s : {position, rotation, velocity, angular_velocity, joint}) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw std::invalid_argument("NoiseConfig: std must be nonnegative");
  }
  if (!(position_correlation_time >= 0.0) || !std::isfinite(position_correlation_time)) {
    throw std::invalid_argument("NoiseConfig: correlation time must be nonnegative");
  }
}

void PlantConfig::validate() const {
  uav.validate();
  arm.validate();
  disturbance.validate();
  noise.validate();
  if (mismatch.mass <= -1.0 || mismatch.inertia <= -1.0 || mismatch.beta <= -1.0) {
    throw std::invalid_argument("PlantConfig: mismatch must keep parameters positive");
  }
  if (!(substep > 0.0) || !(control_dt >= substep)) {
    throw std::invalid_argument("PlantConfig: need 0 < substep <= control_dt");
  }
  const double ratio = control_dt / substep;
  if (std::abs(ratio - std::round(ratio)) > 1e-9) {
    throw std::invalid_argument("PlantConfig: control_dt must be a multiple of substep");
  }
  if (!(wrench_lb.array() <= wrench_ub.array()).all()) throw std::invalid_argument("PlantConfig: wrench bounds inverted");
  if (!(max_speed > 0.0)) throw std::invalid_argument("PlantConfig: max_speed must be positive");
}

UavParams PlantConfig::true_uav() const {
  UavParams p = uav;
  p.mass_diag.head<3>() *= 1.0 + mismatch.mass;
  p.mass_diag.tail<3>() *= 1.0 + mismatch.inertia;
  return p;
}

ArmParams PlantConfig::true_arm() const {
  ArmParams p = arm;
  p.beta *= 1.0 + mismatch.beta;
  return p;
}

PlantSimulator::PlantSimulator(PlantConfig config, const BaseState& base, const Vec4& theta,
                               std::uint64_t seed)
    : config_(std::move(config)), rng_(seed) {
  config_.validate();
  uav_ = config_.true_uav();
  arm_ = config_.true_arm();
  state_.base = base;
  state_.theta = theta;
  state_.engaged = theta;
  state_.driven = theta;
  state_.wrench = hover_wrench(base.R, uav_).vector();
}

void PlantSimulator::apply_backlash(const Vec4& theta_cmd) {
  const double h = config_.disturbance.backlash;
  for (int i = 0; i < 4; ++i) {
    const double gap = theta_cmd(i) - state_.engaged(i);
    if (gap > h) {
      state_.engaged(i) = theta_cmd(i) - h;
    } else if (gap < -h) {
      state_.engaged(i) = theta_cmd(i) + h;
    }
  }
}

Wrench PlantSimulator::disturbance(const BaseState& base, const Vec4& theta_ddot) const {
  const DisturbanceConfig& d = config_.disturbance;
  Vec6 w = d.wrench_bias.vector() + d.coupling * theta_ddot;
  const GroundEffect& ge = d.ground_effect;
  if (ge.enabled) {
    const double depth = std::max(0.0, ge.z_threshold - (base.p.z() - d.floor_z));
    w.head<3>() += base.R.transpose() * Vec3::UnitZ() * (ge.gain * depth * depth);
  }
  return Wrench::FromVector(w);
}

const PlantState& PlantSimulator::step(const Wrench& tau, const Vec4& theta_cmd) {
  if (tau.frame != Frame::kBody) throw FrameError("plant: command wrench must be body-frame");
  const Vec6 raw = tau.vector();
  const Vec6 clamped = raw.cwiseMax(config_.wrench_lb).cwiseMin(config_.wrench_ub);
  const Vec4 cmd = theta_cmd.cwiseMax(config_.arm.lower).cwiseMin(config_.arm.upper);
  clamped_ = !raw.allFinite() || !theta_cmd.allFinite() || clamped != raw || cmd != theta_cmd;
  if (!clamped.allFinite() || !cmd.allFinite()) throw PlantBlowUp("plant: non-finite command", state_);

  apply_backlash(cmd);
  const Vec4 target = state_.engaged + config_.disturbance.servo_bias;
  const int substeps = static_cast<int>(std::lround(config_.control_dt / config_.substep));
  const double h = config_.substep;
  const double lag = config_.disturbance.servo_driver_lag;
  const Vec4 decay = (-h * arm_.beta.cwiseInverse()).array().exp().matrix();
  const double rotor = config_.disturbance.rotor_lag;
  const double rotor_decay = rotor > 0.0 ? std::exp(-h / rotor) : 0.0;
  for (int k = 0; k < substeps; ++k) {
    // Linear servo chain under a held command: driver lag then the
    // first-order response, integrated exactly over the substep.
    Vec4 theta_next;
    Vec4 driven_next;
    if (lag > 0.0) {
      const double g = std::exp(-h / lag);
      driven_next = target + (state_.driven - target) * g;
      for (int i = 0; i < 4; ++i) {
        const double b = arm_.beta(i);
        const double c0 = state_.driven(i) - target(i);
        // theta' = (target + c0 e^{-s/lag} - theta) / b
        const double coupled = std::abs(b - lag) < 1e-12
                                   ? c0 * h / b * decay(i)
                                   : c0 * lag / (lag - b) * (g - decay(i));
        theta_next(i) = target(i) + (state_.theta(i) - target(i)) * decay(i) + coupled;
      }
    } else {
      driven_next = target;
      theta_next = target + (state_.theta - target).cwiseProduct(decay);
    }
    const Vec4 rate_next = (driven_next - theta_next).cwiseQuotient(arm_.beta);
    const Vec4 theta_ddot = (rate_next - state_.theta_dot) / h;

    // The delivered wrench is held over each substep.
    state_.wrench = clamped + (state_.wrench - clamped) * rotor_decay;
    last_disturbance_ = disturbance(state_.base, theta_ddot);
    try {
      state_.base = rk4_step(state_.base, Wrench::FromVector(state_.wrench), last_disturbance_, h, uav_);
    } catch (const DynamicsBlowUp& e) {
      throw PlantBlowUp(e.what(), state_);
    }
    state_.theta = theta_next;
    state_.driven = driven_next;
    state_.theta_dot = rate_next;
    state_.t += h;

    if (!state_.base.v.allFinite() || state_.base.v.head<3>().norm() > config_.max_speed ||
        state_.base.v.tail<3>().norm() > 10.0 * config_.max_speed) {
      std::ostringstream msg;
      msg << "plant: state blow-up at t=" << state_.t << " p=" << state_.base.p.transpose()
          << " v=" << state_.base.v.transpose();
      throw PlantBlowUp(msg.str(), state_);
    }
  }
  return state_;
}

Measurement PlantSimulator::measure() {
  const NoiseConfig& n = config_.noise;
  std::normal_distribution<double> unit(0.0, 1.0);
  auto draw3 = [&](double std) {
    Vec3 v;
    for (int i = 0; i < 3; ++i) v(i) = unit(rng_);
    return Vec3(v * std);
  };
  Measurement m;
  m.t = state_.t;
  m.base = state_.base;
  m.theta = state_.theta;
  if (n.position > 0.0) {
    const Vec3 fresh = draw3(n.position);
    if (n.position_correlation_time > 0.0 && position_error_primed_) {
      const double a = std::exp(-config_.control_dt / n.position_correlation_time);
      position_error_ = a * position_error_ + std::sqrt(1.0 - a * a) * fresh;
    } else {
      position_error_ = fresh;
      position_error_primed_ = true;
    }
    m.base.p += position_error_;
  }
  if (n.rotation > 0.0) m.base.R = state_.base.R * exp_so3(draw3(n.rotation));
  if (n.velocity > 0.0) m.base.v.head<3>() += draw3(n.velocity);
  if (n.angular_velocity > 0.0) m.base.v.tail<3>() += draw3(n.angular_velocity);
  if (n.joint > 0.0) {
    for (int i = 0; i < 4; ++i) m.theta(i) += n.joint * unit(rng_);
  }
  return m;
}

double PlantSimulator::base_energy() const {
  const BaseState& s = state_.base;
  const double kinetic =
      0.5 * s.v.head<3>().cwiseAbs2().dot(uav_.translational_mass()) +
      0.5 * s.v.tail<3>().cwiseAbs2().dot(uav_.inertia_diag());
  // Gravity acts through the mass on the z axis.
  return kinetic + uav_.translational_mass().z() * uav_.gravity * s.p.z();
}

}  // namespace uam
