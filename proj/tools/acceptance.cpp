// Acceptance gate: one PASS/FAIL line per criterion, INFO lines for context.
// Exit status is the number of failed criteria (capped at 1).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "uam/bench.hpp"
#include "uam/box_ddp.hpp"
#include "uam/peg_in_hole.hpp"

using namespace uam;

namespace {

int g_failed = 0;

void verdict(bool pass, const std::string& name, const std::string& detail) {
  std::printf("%s %s: %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failed;
}

void info(const std::string& text) {
  std::printf("INFO %s\n", text.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const RunResult& find(const std::vector<TrackingRun>& runs, ControllerKind c, TrajectoryKind k, std::uint64_t seed) {
  for (const auto& r : runs) {
    if (r.controller == c && r.trajectory == k && r.seed == seed) return r.result;
  }
  throw std::logic_error("missing run");
}

constexpr std::uint64_t kSeeds[] = {1, 2, 3};
constexpr double kDuration = 60.0;

// ---------------------------------------------------------------- tracking

void tracking_criteria(const AppConfig& app) {
  const LoopConfig loop = app.resolved_loop();
  MatrixOptions opt;
  opt.controllers = {ControllerKind::kMpcL1, ControllerKind::kMpc, ControllerKind::kIkPid, ControllerKind::kDffc};
  opt.trajectories = {TrajectoryKind::kEllipse, TrajectoryKind::kFigure8};
  opt.repeats = 3;
  opt.seed = 1;
  opt.duration = kDuration;

  const auto t0 = std::chrono::steady_clock::now();
  MatrixOptions main = opt;
  main.controllers = {ControllerKind::kMpcL1, ControllerKind::kMpc, ControllerKind::kIkPid};
  std::vector<TrackingRun> runs = run_matrix(loop, main);
  const double matrix_seconds = seconds_since(t0);

  MatrixOptions extra = opt;
  extra.controllers = {ControllerKind::kDffc};
  extra.trajectories = {TrajectoryKind::kEllipse};
  for (auto& r : run_matrix(loop, extra)) runs.push_back(std::move(r));
  extra.controllers = {ControllerKind::kMpcL1};
  extra.trajectories = {TrajectoryKind::kSetpoint};
  for (auto& r : run_matrix(loop, extra)) runs.push_back(std::move(r));

  std::printf("%s", format_table(rmse_table(runs)).c_str());
  bool any_failed = false;
  for (const auto& r : runs) any_failed = any_failed || r.result.failed;

  using C = ControllerKind;
  using K = TrajectoryKind;
  {
    bool ok = !any_failed && matrix_seconds <= 600.0;
    double worst_gain = 1.0;
    std::string detail;
    for (K k : {K::kEllipse, K::kFigure8}) {
      for (std::uint64_t s : kSeeds) {
        const double l1 = find(runs, C::kMpcL1, k, s).rmse_cm;
        const double mpc = find(runs, C::kMpc, k, s).rmse_cm;
        const double pid = find(runs, C::kIkPid, k, s).rmse_cm;
        const double gain = 1.0 - l1 / mpc;
        worst_gain = std::min(worst_gain, gain);
        ok = ok && l1 < mpc && mpc < pid && gain >= 0.20;
        detail += fmt("%s/%llu %.2f<%.2f<%.2f; ", to_string(k).c_str(), static_cast<unsigned long long>(s), l1, mpc, pid);
      }
    }
    verdict(ok, "tracking_ordering",
            detail + fmt("worst L1 gain %.0f%% (need >=20%%), matrix %.0f s (need <=600)", 100 * worst_gain,
                         matrix_seconds));
  }
  {
    bool ok = true;
    std::string detail;
    for (std::uint64_t s : kSeeds) {
      const RunResult& sp = find(runs, C::kMpcL1, K::kSetpoint, s);
      const RunResult& el = find(runs, C::kMpcL1, K::kEllipse, s);
      ok = ok && !sp.failed && sp.rmse_cm < el.rmse_cm;
      detail += fmt("seed %llu %.3f<%.3f; ", static_cast<unsigned long long>(s), sp.rmse_cm, el.rmse_cm);
    }
    verdict(ok, "setpoint_regime", detail + "mpc_l1 setpoint RMSE below its ellipse RMSE (cm)");
  }
  {
    bool ok = true;
    std::string detail;
    for (std::uint64_t s : kSeeds) {
      const double l1 = find(runs, C::kMpcL1, K::kEllipse, s).rmse_cm;
      const RunResult& d = find(runs, C::kDffc, K::kEllipse, s);
      const double pid = find(runs, C::kIkPid, K::kEllipse, s).rmse_cm;
      ok = ok && !d.failed && l1 < d.rmse_cm && d.rmse_cm < pid;
      detail += fmt("seed %llu %.2f<%.2f<%.2f; ", static_cast<unsigned long long>(s), l1, d.rmse_cm, pid);
    }
    verdict(ok, "dffc_ordering", detail + "mpc_l1 < dffc < ik_pid on ellipse (cm)");
  }
  {
    LoopConfig slow = loop;
    slow.weights.q_u_joint *= 5.0;
    MatrixOptions a = opt;
    a.controllers = {C::kMpc};
    a.trajectories = {K::kEllipse};
    const auto scaled = run_matrix(slow, a);
    std::vector<double> ratios;
    bool ok = true;
    for (const auto& r : scaled) {
      ok = ok && !r.result.failed;
      ratios.push_back(r.result.rmse_cm / find(runs, C::kMpc, K::kEllipse, r.seed).rmse_cm);
    }
    const MeanStd m = mean_std(ratios);
    verdict(ok && m.mean > 1.15, "arm_ablation",
            fmt("mpc ellipse RMSE ratio q_u_joint x5 / x1 = %.3f +- %.3f (seeds %.3f %.3f %.3f), need mean >1.15",
                m.mean, m.std, ratios[0], ratios[1], ratios[2]));

    a.controllers = {C::kMpcL1};
    const auto scaled_l1 = run_matrix(slow, a);
    std::vector<double> l1_ratios;
    for (const auto& r : scaled_l1) {
      l1_ratios.push_back(r.result.rmse_cm / find(runs, C::kMpcL1, K::kEllipse, r.seed).rmse_cm);
    }
    const MeanStd ml1 = mean_std(l1_ratios);
    info(fmt("arm_ablation with L1 (not gated): ratio %.3f +- %.3f", ml1.mean, ml1.std));
  }
  {
    std::vector<double> cycles;
    for (const auto& r : runs) {
      if (r.controller != C::kMpcL1) continue;
      for (const auto& row : r.result.rows) cycles.push_back(row.cycle_time);
    }
    std::nth_element(cycles.begin(), cycles.begin() + cycles.size() / 2, cycles.end());
    const double median = cycles[cycles.size() / 2];
    verdict(median <= 0.025, "realtime_cycle",
            fmt("median mpc_l1 cycle %.2f ms over %zu cycles at N=%d, need <=25 ms", 1e3 * median, cycles.size(),
                loop.mpc.steps));
  }
}

// -------------------------------------------------------------------- L1

void l1_criterion(const AppConfig& app) {
  LoopConfig loop = app.loop_for("nominal");
  loop.plant.disturbance.wrench_bias.force = Vec3(2.0 * kModelUnitsPerNewton, 0.0, 0.0);
  const Vec6 sigma = loop.plant.disturbance.wrench_bias.vector();
  TrajectorySpec spec;
  spec.kind = TrajectoryKind::kSetpoint;
  spec.duration = 10.0;
  double offset[2] = {0.0, 0.0};
  double residual = 0.0;
  int i = 0;
  bool failed = false;
  for (ControllerKind k : {ControllerKind::kMpcL1, ControllerKind::kMpc}) {
    const RunResult r = run_tracking(k, loop, spec, 1);
    failed = failed || r.failed;
    int n = 0;
    for (const auto& row : r.rows) {
      if (row.t >= spec.duration - 1.0) {
        offset[i] += (row.ee - row.ee_ref).norm();
        ++n;
      }
      if (i == 0 && row.t >= 2.0) residual = std::max(residual, (row.tau_hat.vector() - sigma).norm());
    }
    offset[i] /= std::max(n, 1);
    ++i;
  }
  const double ratio = offset[0] / offset[1];
  const double rel = residual / sigma.norm();
  verdict(!failed && ratio <= 0.2 && rel <= 0.05, "l1_disturbance",
          fmt("2 N lateral wrench at hover: EE offset %.3f mm with L1 vs %.3f mm without (%.1f%%, need <=20%%); "
              "max |tau_hat - sigma| after 2 s = %.1f%% of |sigma| (need <=5%%)",
              1e3 * offset[0], 1e3 * offset[1], 100 * ratio, 100 * rel));
}

// ------------------------------------------------------------------ sysid

void sysid_criterion(const AppConfig& app) {
  const auto t0 = std::chrono::steady_clock::now();
  const ArmParams nominal = app.loop.nominal.arm;
  double noiseless = 0.0;
  double noisy = 0.0;
  double beta = 0.0;
  for (std::uint64_t s : kSeeds) {
    const ArmParams truth = perturbed_arm(nominal, s);
    ExcitationConfig clean;
    clean.segments = 600;
    const SysidExperiment a = run_sysid_experiment(truth, nominal, clean, s);
    noiseless = std::max(noiseless, (dh_vector(a.dh.arm) - dh_vector(truth)).cwiseAbs().maxCoeff());

    ExcitationConfig pose = clean;
    pose.position_noise = 0.001;
    pose.rotation_noise = 0.001;
    noisy = std::max(noisy, run_sysid_experiment(truth, nominal, pose, s + 100).worst_dh_relative);

    ExcitationConfig joint;
    joint.segments = 60;
    joint.hold = 2.0;
    joint.joint_noise = 0.1 * M_PI / 180.0;
    beta = std::max(beta, run_sysid_experiment(truth, nominal, joint, s + 200).worst_beta_relative);
  }
  const double elapsed = seconds_since(t0);
  verdict(noiseless <= 1e-6 && noisy <= 0.01 && beta <= 0.05 && elapsed / 3.0 <= 60.0, "sysid_recovery",
          fmt("3 perturbed arms: noiseless DH max abs error %.1e (need <=1e-6); 1 mm/1 mrad pose noise worst DH "
              "error %.2f%% (need <=1%%); 0.1 deg joint noise worst beta error %.2f%% (need <=5%%); %.1f s per arm "
              "(need <=60)",
              noiseless, 100 * noisy, 100 * beta, elapsed / 3.0));
}

// -------------------------------------------------------------- numerics

double rk4_endpoint_error(double dt, const BaseState& ref, const BaseState& s0, const Wrench& tau,
                          const UavParams& params, double horizon) {
  BaseState x = s0;
  const int steps = static_cast<int>(std::lround(horizon / dt));
  for (int i = 0; i < steps; ++i) x = rk4_step(x, tau, Wrench{}, dt, params);
  return (x.p - ref.p).norm() + (x.R - ref.R).norm() + (x.v - ref.v).norm();
}

Mat3 random_rotation(std::mt19937& rng, double max_angle) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Vec3 w(u(rng), u(rng), u(rng));
  return exp_so3(Vec3(w.normalized() * max_angle * std::abs(u(rng))));
}

// Translational reduction of the tracking problem: double integrator per
// axis with the MPC's position, velocity and force weights.
struct DoubleIntegrator {
  static constexpr int kNx = 6;
  static constexpr int kNu = 3;
  static constexpr int kNr = 9;
  static constexpr int kNrTerminal = 6;
  using State = Eigen::Matrix<double, 6, 1>;
  using Control = Eigen::Vector3d;

  int n = 50;
  double dt = 0.05;
  double qp = 12.0, qv = 0.1, r = 0.03, terminal = 10.0;

  Eigen::Matrix<double, 6, 6> a() const {
    Eigen::Matrix<double, 6, 6> m = Eigen::Matrix<double, 6, 6>::Identity();
    m.block<3, 3>(0, 3) = dt * Eigen::Matrix3d::Identity();
    return m;
  }
  Eigen::Matrix<double, 6, 3> b() const {
    Eigen::Matrix<double, 6, 3> m = Eigen::Matrix<double, 6, 3>::Zero();
    m.block<3, 3>(3, 0) = dt * Eigen::Matrix3d::Identity();
    return m;
  }
  Eigen::Matrix<double, 6, 1> wdiag() const {
    Eigen::Matrix<double, 6, 1> w;
    w << qp, qp, qp, qv, qv, qv;
    return w;
  }
  int horizon() const { return n; }
  State step(const State& x, const Control& u, int) const { return a() * x + b() * u; }
  void linearize(const State&, const Control&, int, Eigen::Matrix<double, 6, 6>& fa,
                 Eigen::Matrix<double, 6, 3>& fb) const {
    fa = a();
    fb = b();
  }
  void stage_residual(const State& x, const Control& u, int, Eigen::Matrix<double, 9, 1>& res,
                      Eigen::Matrix<double, 9, 6>* jx, Eigen::Matrix<double, 9, 3>* ju) const {
    const Eigen::Matrix<double, 6, 1> s = wdiag().cwiseSqrt();
    res << s.cwiseProduct(x), std::sqrt(r) * u;
    if (jx) {
      jx->setZero();
      jx->topRows<6>() = s.asDiagonal();
    }
    if (ju) {
      ju->setZero();
      ju->bottomRows<3>() = std::sqrt(r) * Eigen::Matrix3d::Identity();
    }
  }
  void terminal_residual(const State& x, Eigen::Matrix<double, 6, 1>& res, Eigen::Matrix<double, 6, 6>* jx) const {
    const Eigen::Matrix<double, 6, 1> s = (terminal * wdiag()).cwiseSqrt();
    res = s.cwiseProduct(x);
    if (jx) *jx = s.asDiagonal();
  }
  State difference(const State& x, const State& y) const { return x - y; }
  void control_bounds(int, Control& lb, Control& ub) const {
    lb.setConstant(-1e9);
    ub.setConstant(1e9);
  }
};

void numerical_criterion() {
  std::string detail;
  bool ok = true;

  {
    const UavParams params;
    BaseState s0;
    s0.R = rot_y(0.3);
    s0.v << 0.5, -0.2, 0.1, 1.5, -2.0, 3.0;
    Wrench tau;
    tau.force = Vec3(0.1, 0.05, 1.2);
    tau.torque = Vec3(0.01, -0.02, 0.005);
    BaseState ref = s0;
    for (int i = 0; i < 4000; ++i) ref = rk4_step(ref, tau, Wrench{}, 1.0 / 4000, params);
    const double e1 = rk4_endpoint_error(0.05, ref, s0, tau, params, 1.0);
    const double e2 = rk4_endpoint_error(0.025, ref, s0, tau, params, 1.0);
    const double e3 = rk4_endpoint_error(0.0125, ref, s0, tau, params, 1.0);
    const double order = std::min(std::log2(e1 / e2), std::log2(e2 / e3));
    ok = ok && order >= 3.5;
    detail += fmt("RK4 observed order %.2f (need >=3.5); ", order);
  }

  {
    const UamParams p;
    MpcConfig c;
    c.steps = 20;
    c.horizon = 1.0;
    c.dt = 0.05;
    std::mt19937 rng(9);
    std::normal_distribution<double> n(0.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      MpcState x0;
      x0.base.p = Vec3(0.3 * n(rng), 0.3 * n(rng), 1.6 + 0.1 * n(rng));
      x0.base.R = random_rotation(rng, 0.3);
      for (int i = 0; i < 6; ++i) x0.base.v(i) = 0.2 * n(rng);
      x0.theta = c.theta_ref;
      for (int i = 0; i < 4; ++i) x0.theta(i) += 0.05 * n(rng);
      const Transform ee = x0.ee_pose(p.arm);
      EeTarget target;
      target.p_ref = ee.translation + Vec3(0.2 * n(rng), 0.2 * n(rng), 0.2 * n(rng));
      target.R_ref = ee.rotation * random_rotation(rng, 0.3);
      Vec10 hover;
      hover << hover_wrench(x0.base.R, p.uav).vector(), x0.theta;
      std::vector<Vec10> us(c.steps, hover);
      for (auto& u : us) {
        for (int i = 0; i < 3; ++i) u(i) += 0.1 * n(rng);
        for (int i = 3; i < 6; ++i) u(i) += 0.01 * n(rng);
        for (int i = 6; i < 10; ++i) u(i) += 0.1 * n(rng);
      }
      const MpcProblem prob = build_problem(x0, target, c, MpcWeights{}, p);
      const auto g = cost_gradient(prob, us);
      double num = 0.0, den = 0.0;
      const double h = 1e-6;
      for (int k = 0; k < c.steps; ++k) {
        for (int i = 0; i < 10; ++i) {
          auto up = us, um = us;
          up[k](i) += h;
          um[k](i) -= h;
          const double fd = (rollout_cost(prob, up) - rollout_cost(prob, um)) / (2 * h);
          num += (fd - g[k](i)) * (fd - g[k](i));
          den += fd * fd;
        }
      }
      worst = std::max(worst, std::sqrt(num / den));
    }
    ok = ok && worst <= 1e-4;
    detail += fmt("Gauss-Newton gradient vs central differences worst relative %.1e over 20 problems (need <=1e-4); ",
                  worst);
  }

  {
    std::mt19937 rng(21);
    std::normal_distribution<double> n(0.0, 1.0);
    int bad = 0;
    for (int i = 0; i < 1000; ++i) {
      const Vec3 w(n(rng), n(rng), n(rng));
      const Vec3 v(n(rng), n(rng), n(rng));
      if ((hat(w) * v - w.cross(v)).norm() > 1e-12 || (hat(w) + hat(w).transpose()).norm() > 0.0) ++bad;
      if ((vee(hat(w)) - w).norm() > 0.0) ++bad;
      const Vec3 phi = w.normalized() * std::fmod(std::abs(n(rng)), 3.0);
      const Mat3 r = exp_so3(phi);
      if ((r.transpose() * r - Mat3::Identity()).norm() > 1e-12 || std::abs(r.determinant() - 1.0) > 1e-12) ++bad;
      if ((log_so3(r) - phi).norm() > 1e-9) ++bad;
      const Mat3 a = random_rotation(rng, 3.0);
      const Mat3 b = random_rotation(rng, 3.0);
      const Mat3 g = random_rotation(rng, 3.0);
      if ((rotation_error(a, b) + rotation_error(b, a)).norm() > 1e-12) ++bad;
      if ((rotation_error(Mat3(g * a), Mat3(g * b)) - rotation_error(a, b)).norm() > 1e-12) ++bad;
      if (rotation_error(a, a).norm() > 1e-15) ++bad;
    }
    ok = ok && bad == 0;
    detail += fmt("hat/vee/exp/log/rotation_error sweeps 1000 cases each, %d violations; ", bad);
  }

  {
    DoubleIntegrator m;
    DdpOptions opt;
    opt.tolerance = 1e-12;
    BoxDdp<DoubleIntegrator> solver(m, opt);
    DoubleIntegrator::State x0;
    x0 << 0.4, -0.3, 0.2, 0.1, 0.0, -0.2;
    const auto sol = solver.solve(x0, std::vector<Eigen::Vector3d>(m.n, Eigen::Vector3d::Zero()));
    const Eigen::Matrix<double, 6, 6> a = m.a();
    const Eigen::Matrix<double, 6, 3> b = m.b();
    const Eigen::Matrix<double, 6, 6> q = m.wdiag().asDiagonal();
    const Eigen::Matrix3d r = m.r * Eigen::Matrix3d::Identity();
    Eigen::Matrix<double, 6, 6> p = m.terminal * q;
    std::vector<Eigen::Matrix<double, 3, 6>> gains(m.n);
    for (int k = m.n - 1; k >= 0; --k) {
      const Eigen::Matrix3d s = r + b.transpose() * p * b;
      gains[k] = s.ldlt().solve(b.transpose() * p * a);
      p = q + a.transpose() * p * a - a.transpose() * p * b * gains[k];
    }
    DoubleIntegrator::State x = x0;
    double err = 0.0;
    for (int k = 0; k < m.n; ++k) {
      const Eigen::Vector3d u = -gains[k] * x;
      err = std::max(err, (sol.us[k] - u).cwiseAbs().maxCoeff());
      x = a * x + b * u;
    }
    ok = ok && err <= 1e-6;
    detail += fmt("reduced translational problem vs Riccati LQR max control error %.1e (need <=1e-6)", err);
  }

  verdict(ok, "numerical_suite", detail);
}

// -------------------------------------------------------------------- peg

void peg_criteria(const AppConfig& app) {
  const LoopConfig loop = app.resolved_loop();
  const int scenes = 50;
  int ok = 0;
  int replayed = 0;
  double worst_replay = 0.0;
  for (int i = 0; i < scenes; ++i) {
    const std::uint64_t seed = 1 + static_cast<std::uint64_t>(i);
    const PegOutcome o = run_peg_episode(app, loop, seed);
    ok += o.success;
    if (!o.unreachable) {
      worst_replay = std::max(worst_replay, replay_episode(o.episode, loop).deviation_cm);
      ++replayed;
    }
  }
  const double rate = static_cast<double>(ok) / scenes;
  verdict(rate >= 0.9 && replayed > 0 && worst_replay < 1.0, "peg_in_hole",
          fmt("%d/%d scenes succeeded (need >=90%%); worst record->replay EE deviation %.3f cm RMSE over %d episodes "
              "(need <1 cm)",
              ok, scenes, worst_replay, replayed));

  LoopConfig noisy = loop;
  noisy.plant.noise.position = 0.01;
  int noisy_ok = 0;
  for (int i = 0; i < scenes; ++i) noisy_ok += run_peg_episode(app, noisy, 1 + static_cast<std::uint64_t>(i)).success;
  const double noisy_rate = static_cast<double>(noisy_ok) / scenes;
  verdict(noisy_rate >= 0.6, "state_noise_robustness",
          fmt("%d/%d scenes with 1 cm white position-estimate noise (need >=60%%)", noisy_ok, scenes));

  LoopConfig correlated = noisy;
  correlated.plant.noise.position_correlation_time = 1.5;
  int corr_ok = 0;
  const int corr_scenes = 10;
  for (int i = 0; i < corr_scenes; ++i) {
    corr_ok += run_peg_episode(app, correlated, 1 + static_cast<std::uint64_t>(i)).success;
  }
  info(fmt("1 cm position noise correlated over 1.5 s (not gated): %d/%d scenes", corr_ok, corr_scenes));
}

}  // namespace

int main(int argc, char** argv) {
  const std::string only = argc > 1 ? argv[1] : "";
  const auto t0 = std::chrono::steady_clock::now();
  const AppConfig app = AppConfig::defaults();
  const std::vector<std::pair<std::string, std::function<void()>>> groups{
      {"numerics", numerical_criterion},
      {"sysid", [&] { sysid_criterion(app); }},
      {"l1", [&] { l1_criterion(app); }},
      {"tracking", [&] { tracking_criteria(app); }},
      {"peg", [&] { peg_criteria(app); }},
  };
  for (const auto& [name, run] : groups) {
    if (!only.empty() && only != name) continue;
    try {
      run();
    } catch (const std::exception& e) {
      verdict(false, name, std::string("threw: ") + e.what());
    }
  }
  info(fmt("total %.0f s", seconds_since(t0)));
  return g_failed ? 1 : 0;
}
