#include "uam/closed_loop.hpp"

#include <algorithm>
#include <chrono>
#include <stdexcept>

namespace uam {

ControllerKind parse_controller_kind(const std::string& name) {
  if (name == "mpc_l1") return ControllerKind::kMpcL1;
  if (name == "mpc") return ControllerKind::kMpc;
  if (name == "ik_pid") return ControllerKind::kIkPid;
  if (name == "dffc") return ControllerKind::kDffc;
  throw std::invalid_argument("unknown controller: " + name);
}

std::string to_string(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::kMpcL1: return "mpc_l1";
    case ControllerKind::kMpc: return "mpc";
    case ControllerKind::kIkPid: return "ik_pid";
    case ControllerKind::kDffc: return "dffc";
  }
  return "unknown";
}

void L1Config::validate() const {
  if (!(a_v.array() < 0.0).all() || !(a_d.array() < 0.0).all()) {
    throw std::invalid_argument("L1Config: A_v and A_d must be Hurwitz");
  }
  if (!(base_cutoff > 0.0) || !(joint_cutoff > 0.0)) throw std::invalid_argument("L1Config: cutoffs must be positive");
}

void LoopConfig::validate() const {
  nominal.validate();
  mpc.validate();
  weights.validate();
  l1.validate();
  pid.validate();
  dffc.validate();
  plant.validate();
  if (std::abs(plant.control_dt * mpc.control_rate - 1.0) > 1e-9) {
    throw std::invalid_argument("LoopConfig: plant control_dt must match the MPC control rate");
  }
}

MpcState hover_state_for_ee(const EeTarget& ee, const Vec4& theta, const UamParams& params) {
  MpcState x;
  x.theta = theta;
  x.base.p = ee.p_ref - x.ee_pose(params.arm).translation;
  IkOptions opt;
  opt.max_iterations = 500;
  opt.tolerance = 1e-10;
  const IkResult ik = ik_plan(ee, x, theta, params, opt);
  if (ik.unreachable) throw std::invalid_argument("hover_state_for_ee: target not reachable");
  x.base.p = ik.base.p;
  x.base.R = ik.base.R;
  x.theta = ik.theta;
  return x;
}

namespace {

PlantConfig plant_with_nominal(const LoopConfig& c) {
  PlantConfig p = c.plant;
  p.uav = c.nominal.uav;
  p.arm = c.nominal.arm;
  p.control_dt = 1.0 / c.mpc.control_rate;
  p.wrench_lb = c.mpc.wrench_lb;
  p.wrench_ub = c.mpc.wrench_ub;
  return p;
}

// Only mpc_l1 applies the augmentation; every other path runs the estimators
// for logging.
LoopConfig for_controller(LoopConfig c, ControllerKind kind) {
  if (kind != ControllerKind::kMpcL1) c.l1.enabled = false;
  return c;
}

}  // namespace

ClosedLoop::ClosedLoop(ControllerKind kind, LoopConfig config, const MpcState& initial,
                       std::uint64_t seed)
    : kind_(kind),
      config_(for_controller(std::move(config), kind)),
      plant_(plant_with_nominal(config_), initial.base, initial.theta, seed),
      mpc_(config_.mpc, config_.weights, config_.nominal),
      base_l1_(config_.l1.a_v.asDiagonal().toDenseMatrix(), config_.l1.base_cutoff, 1.0 / config_.mpc.control_rate),
      joint_l1_(config_.l1.a_d.asDiagonal().toDenseMatrix(), config_.l1.joint_cutoff, 1.0 / config_.mpc.control_rate),
      ik_seed_(initial) {
  config_.validate();
  tau_applied_ = hover_wrench(initial.base.R, config_.nominal.uav);
  theta_applied_ = initial.theta;
}

MpcState ClosedLoop::true_state() const {
  MpcState x;
  x.base = plant_.state().base;
  x.theta = plant_.state().theta;
  return x;
}

MpcControl ClosedLoop::control(const MpcState& x_hat, const TargetFn& target, double t, TraceRow& row) {
  const double dt = 1.0 / config_.mpc.control_rate;
  switch (kind_) {
    case ControllerKind::kMpcL1:
    case ControllerKind::kMpc: {
      std::vector<EeTarget> refs;
      refs.reserve(config_.mpc.steps + 1);
      for (int k = 0; k <= config_.mpc.steps; ++k) refs.push_back(target(t + k * config_.mpc.dt));
      MpcControl u = mpc_.step(x_hat, std::move(refs), t);
      if (mpc_.last_solution()) row.cost = mpc_.last_solution()->cost;
      row.degraded = mpc_.degraded();
      return u;
    }
    case ControllerKind::kIkPid: {
      const IkResult ik = ik_plan(target(t), ik_seed_, config_.mpc.theta_ref, config_.nominal, config_.ik);
      ik_seed_.base.p = ik.base.p;
      ik_seed_.base.R = ik.base.R;
      ik_seed_.theta = ik.theta;
      MpcControl u;
      u.tau = cascade_pid_step(ik.base, x_hat.base, config_.pid, pid_state_, dt, config_.nominal.uav,
                               config_.mpc.wrench_lb, config_.mpc.wrench_ub);
      u.theta_cmd = ik.theta;
      row.degraded = ik.unreachable;
      return u;
    }
    case ControllerKind::kDffc: {
      MpcControl u = dffc_step(target(t), x_hat, config_.mpc.theta_ref, config_.dffc, dffc_state_, dt, config_.nominal,
                               config_.mpc.wrench_lb, config_.mpc.wrench_ub);
      row.degraded = dffc_state_.singular;
      return u;
    }
  }
  throw std::logic_error("unhandled controller kind");
}

TraceRow ClosedLoop::step(const TargetFn& target) {
  const auto start = std::chrono::steady_clock::now();
  const Measurement m = plant_.measure();
  const double t = m.t;
  MpcState x_hat;
  x_hat.base = m.base;
  x_hat.theta = m.theta;

  const UamParams& nom = config_.nominal;
  base_l1_.update(m.base, tau_applied_, nom.uav);
  joint_l1_.update(m.theta, theta_applied_, nom.arm);

  TraceRow row;
  MpcControl u = control(x_hat, target, t, row);
  if (config_.l1.enabled) {
    tau_applied_ = base_augment(u.tau, base_l1_, config_.mpc.wrench_lb, config_.mpc.wrench_ub);
    theta_applied_ = joint_augment(u.theta_cmd, joint_l1_, nom.arm);
  } else {
    tau_applied_ = u.tau;
    theta_applied_ = u.theta_cmd;
  }
  row.cycle_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const PlantState& s = plant_.state();
  const Transform ee = fk_ee(s.theta, plant_.true_arm(), s.base.pose());
  const EeTarget ref = target(t);
  row.t = t;
  row.base = s.base;
  row.theta = s.theta;
  row.ee = ee.translation;
  row.ee_quat = to_wxyz(ee.rotation);
  row.ee_ref = ref.p_ref;
  row.ee_ref_quat = to_wxyz(ref.R_ref);
  const Transform ee_hat = x_hat.ee_pose(nom.arm);
  row.ee_measured = ee_hat.translation;
  row.ee_measured_quat = to_wxyz(ee_hat.rotation);
  row.tau_cmd = tau_applied_;
  row.theta_cmd = theta_applied_;
  row.tau_hat = base_l1_.estimate();
  row.d_hat = joint_l1_.estimate();
  row.tau_ext_true = plant_.last_disturbance();

  plant_.step(tau_applied_, theta_applied_);
  return row;
}

void summarize(RunResult& result) {
  if (result.rows.empty()) return;
  std::vector<TimedPoint> ref, meas;
  std::vector<double> cycles_s;
  ref.reserve(result.rows.size());
  meas.reserve(result.rows.size());
  for (const TraceRow& r : result.rows) {
    ref.push_back({r.t, r.ee_ref});
    meas.push_back({r.t, r.ee});
    cycles_s.push_back(r.cycle_time);
  }
  result.rmse_cm = rmse(ref, meas).rmse_cm;
  std::nth_element(cycles_s.begin(), cycles_s.begin() + cycles_s.size() / 2, cycles_s.end());
  result.median_cycle = cycles_s[cycles_s.size() / 2];
}

RunResult run_closed_loop(ControllerKind kind, const LoopConfig& config, const TargetFn& target,
                          double duration, const MpcState& initial, std::uint64_t seed) {
  RunResult result;
  ClosedLoop loop(kind, config, initial, seed);
  const int cycles = static_cast<int>(std::lround(duration * config.mpc.control_rate));
  result.rows.reserve(cycles);
  try {
    for (int k = 0; k < cycles; ++k) result.rows.push_back(loop.step(target));
  } catch (const PlantBlowUp& e) {
    result.failed = true;
    result.failure = e.what();
  }
  summarize(result);
  return result;
}

RunResult run_tracking(ControllerKind kind, const LoopConfig& config, const TrajectorySpec& trajectory,
                       std::uint64_t seed) {
  trajectory.validate();
  const EeTarget first = sample(trajectory, 0.0);
  const MpcState initial = hover_state_for_ee(first, config.mpc.theta_ref, config.nominal);
  const TargetFn target = [&trajectory](double t) { return sample(trajectory, t); };
  return run_closed_loop(kind, config, target, trajectory.duration, initial, seed);
}

}  // namespace uam
