#include "uam/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

#ifndef UAM_CODE_VERSION
#define UAM_CODE_VERSION "unknown"
#endif

namespace uam {

namespace {

// Runs f(i) for i in [0, n) on up to `jobs` threads.
template <typename F>
void parallel_for(std::size_t n, int jobs, F f) {
  const std::size_t workers = std::clamp<std::size_t>(jobs < 1 ? 1 : jobs, 1, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) f(i);
    });
  }
  for (auto& t : pool) t.join();
}

std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << std::setprecision(10);
  return out;
}

template <typename Derived>
void put(std::ostream& out, const Eigen::MatrixBase<Derived>& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) out << ',' << v(i);
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  return v[mid];
}

}  // namespace

std::vector<TrackingRun> run_matrix(const LoopConfig& loop, const MatrixOptions& options) {
  if (options.repeats < 1) throw std::invalid_argument("repeats must be at least 1");
  if (!(options.duration > 0.0)) throw std::invalid_argument("duration must be positive");
  std::vector<TrackingRun> runs;
  for (ControllerKind c : options.controllers) {
    for (TrajectoryKind k : options.trajectories) {
      if (k == TrajectoryKind::kFile) throw std::invalid_argument("file trajectories are replayed, not benchmarked");
      for (int i = 0; i < options.repeats; ++i) {
        TrackingRun r;
        r.controller = c;
        r.trajectory = k;
        r.seed = options.seed + static_cast<std::uint64_t>(i);
        runs.push_back(r);
      }
    }
  }
  parallel_for(runs.size(), options.jobs, [&](std::size_t i) {
    TrajectorySpec spec;
    spec.kind = runs[i].trajectory;
    spec.duration = options.duration;
    spec.rate = loop.mpc.control_rate;
    runs[i].result = run_tracking(runs[i].controller, loop, spec, runs[i].seed);
  });
  return runs;
}

std::vector<TableRow> rmse_table(const std::vector<TrackingRun>& runs) {
  std::vector<TableRow> rows;
  std::vector<std::vector<double>> values;
  std::vector<std::vector<double>> cycles;
  for (const TrackingRun& r : runs) {
    auto it = std::find_if(rows.begin(), rows.end(), [&](const TableRow& row) {
      return row.controller == r.controller && row.trajectory == r.trajectory;
    });
    if (it == rows.end()) {
      rows.push_back({r.controller, r.trajectory, {}, 0, 0, 0.0});
      values.emplace_back();
      cycles.emplace_back();
      it = rows.end() - 1;
    }
    const std::size_t k = static_cast<std::size_t>(it - rows.begin());
    ++it->runs;
    if (r.result.failed) {
      ++it->failed;
      continue;
    }
    values[k].push_back(r.result.rmse_cm);
    cycles[k].push_back(r.result.median_cycle);
  }
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (!values[k].empty()) rows[k].rmse_cm = mean_std(values[k]);
    rows[k].median_cycle_ms = 1e3 * median(cycles[k]);
  }
  return rows;
}

void write_table_csv(const std::string& path, const std::vector<TableRow>& rows) {
  std::ofstream out = open_csv(path);
  out << "controller,trajectory,rmse_cm_mean,rmse_cm_std,runs,failed,median_cycle_ms\n";
  for (const TableRow& r : rows) {
    out << to_string(r.controller) << ',' << to_string(r.trajectory) << ',' << r.rmse_cm.mean << ','
        << r.rmse_cm.std << ',' << r.runs << ',' << r.failed << ',' << r.median_cycle_ms << '\n';
  }
}

std::string format_table(const std::vector<TableRow>& rows) {
  std::ostringstream out;
  out << std::left << std::setw(12) << "controller" << std::setw(11) << "trajectory" << std::right << std::setw(18)
      << "RMSE (cm)" << std::setw(7) << "runs" << std::setw(8) << "failed" << std::setw(11) << "cycle ms"
      << '\n';
  for (const TableRow& r : rows) {
    std::ostringstream cell;
    cell << std::fixed << std::setprecision(2) << r.rmse_cm.mean << " +- " << r.rmse_cm.std;
    out << std::left << std::setw(12) << to_string(r.controller) << std::setw(11) << to_string(r.trajectory)
        << std::right << std::setw(18) << (r.failed == r.runs ? std::string("-") : cell.str()) << std::setw(7)
        << r.runs << std::setw(8) << r.failed << std::setw(11) << std::fixed << std::setprecision(2)
        << r.median_cycle_ms << '\n';
  }
  return out.str();
}

void write_trace_csv(const std::string& path, const RunResult& run) {
  std::ofstream out = open_csv(path);
  out << "t,ee_x,ee_y,ee_z,ref_x,ref_y,ref_z,meas_x,meas_y,meas_z,base_x,base_y,base_z,base_qw,base_qx,base_qy,"
         "base_qz,theta1,theta2,theta3,theta4,theta_cmd1,theta_cmd2,theta_cmd3,theta_cmd4,fx,fy,fz,mx,my,mz,"
         "fx_hat,fy_hat,fz_hat,mx_hat,my_hat,mz_hat,d1_hat,d2_hat,d3_hat,d4_hat,cost,cycle_ms,degraded\n";
  for (const TraceRow& r : run.rows) {
    out << r.t;
    put(out, r.ee);
    put(out, r.ee_ref);
    put(out, r.ee_measured);
    put(out, r.base.p);
    put(out, to_wxyz(r.base.R));
    put(out, r.theta);
    put(out, r.theta_cmd);
    put(out, r.tau_cmd.vector());
    put(out, r.tau_hat.vector());
    put(out, r.d_hat);
    out << ',' << r.cost << ',' << 1e3 * r.cycle_time << ',' << (r.degraded ? 1 : 0) << '\n';
  }
}

void write_error_distribution(const std::string& path, const std::vector<TrackingRun>& runs) {
  std::ofstream out = open_csv(path);
  out << "controller,trajectory,axis,error\n";
  const char* axes[3] = {"x", "y", "z"};
  for (const TrackingRun& r : runs) {
    const std::string prefix = to_string(r.controller) + ',' + to_string(r.trajectory) + ',';
    for (const TraceRow& row : r.result.rows) {
      const Vec3 e = row.ee - row.ee_ref;
      for (int a = 0; a < 3; ++a) out << prefix << axes[a] << ',' << e(a) << '\n';
    }
  }
}

AblationResult run_arm_ablation(const LoopConfig& loop, ControllerKind controller, TrajectoryKind trajectory,
                                double factor, int repeats, std::uint64_t seed, double duration, int jobs) {
  if (!(factor > 0.0)) throw std::invalid_argument("ablation factor must be positive");
  LoopConfig scaled = loop;
  scaled.weights.q_u_joint *= factor;
  MatrixOptions opt;
  opt.controllers = {controller};
  opt.trajectories = {trajectory};
  opt.repeats = repeats;
  opt.seed = seed;
  opt.duration = duration;
  opt.jobs = jobs;
  const auto base = run_matrix(loop, opt);
  const auto slow = factor == 1.0 ? base : run_matrix(scaled, opt);
  AblationResult out;
  for (std::size_t i = 0; i < base.size(); ++i) {
    if (base[i].result.failed || slow[i].result.failed) {
      ++out.failed;
      continue;
    }
    out.baseline_cm.push_back(base[i].result.rmse_cm);
    out.scaled_cm.push_back(slow[i].result.rmse_cm);
    out.ratios.push_back(slow[i].result.rmse_cm / base[i].result.rmse_cm);
  }
  if (!out.ratios.empty()) out.ratio = mean_std(out.ratios);
  return out;
}

ArmParams perturbed_arm(const ArmParams& nominal, std::uint64_t seed) {
  std::mt19937_64 rng(seed * 0x2545F4914F6CDD1Dull + 0xA11);
  std::uniform_real_distribution<double> length(-0.005, 0.005);
  std::uniform_real_distribution<double> angle(-0.02, 0.02);
  std::uniform_real_distribution<double> gain(0.9, 1.1);
  ArmParams arm = nominal;
  for (auto& j : arm.joints) {
    j.d += length(rng);
    j.a += length(rng);
    j.alpha += angle(rng);
  }
  for (int i = 0; i < 4; ++i) arm.beta(i) *= gain(rng);
  return arm;
}

DhVector dh_relative_error(const ArmParams& estimate, const ArmParams& truth) {
  const DhVector e = dh_vector(estimate);
  const DhVector t = dh_vector(truth);
  DhVector out;
  for (int i = 0; i < kDhParameterCount; ++i) out(i) = std::abs(e(i) - t(i)) / std::max(std::abs(t(i)), 0.1);
  return out;
}

SysidExperiment run_sysid_experiment(const ArmParams& truth, const ArmParams& initial,
                                     const ExcitationConfig& excitation, std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  SysidExperiment x;
  x.truth = truth;
  x.initial = initial;
  const Transform base{rot_z(0.3), Vec3(0.5, -0.2, 1.5)};
  const MotionLog log = simulate_excitation(truth, base, excitation, seed);
  x.dh = identify_dh(log, initial);
  x.beta = identify_beta(log);
  x.worst_dh_relative = dh_relative_error(x.dh.arm, truth).maxCoeff();
  x.worst_beta_relative = ((x.beta.beta - truth.beta).array() / truth.beta.array()).abs().maxCoeff();
  x.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return x;
}

void write_sysid_csv(const std::string& path, const SysidExperiment& x) {
  std::ofstream out = open_csv(path);
  out << "parameter,truth,initial,identified,relative_error\n";
  const DhVector t = dh_vector(x.truth);
  const DhVector i0 = dh_vector(x.initial);
  const DhVector id = dh_vector(x.dh.arm);
  const DhVector rel = dh_relative_error(x.dh.arm, x.truth);
  for (int i = 0; i < kDhParameterCount; ++i) {
    out << dh_parameter_name(i) << ',' << t(i) << ',' << i0(i) << ',' << id(i) << ',' << rel(i) << '\n';
  }
  for (int i = 0; i < 4; ++i) {
    out << "beta" << i + 1 << ',' << x.truth.beta(i) << ',' << x.initial.beta(i) << ',' << x.beta.beta(i) << ','
        << std::abs(x.beta.beta(i) - x.truth.beta(i)) / x.truth.beta(i) << '\n';
  }
}

std::string code_version() { return UAM_CODE_VERSION; }

void write_manifest(const std::string& dir, const AppConfig& app, const std::string& command,
                    const std::vector<std::pair<std::string, std::string>>& extra) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const std::string yaml = emit_config(app);
  {
    std::ofstream cfg(fs::path(dir) / "config.yaml");
    cfg << yaml;
  }
  const std::time_t now = std::time(nullptr);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  nlohmann::json j{{"command", command},
                   {"config_hash", fnv1a_hex(yaml)},
                   {"code_version", code_version()},
                   {"profile", app.profile},
                   {"seed", app.bench.seed},
                   {"repeats", app.bench.repeats},
                   {"created", stamp}};
  for (const auto& [k, v] : extra) j[k] = v;
  std::ofstream out(fs::path(dir) / "manifest.json");
  if (!out) throw std::runtime_error("cannot write manifest in " + dir);
  out << j.dump(2) << '\n';
}

}  // namespace uam
