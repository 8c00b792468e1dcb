#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "uam/bench.hpp"
#include "uam/peg_in_hole.hpp"
#include "uam/teleop_service.hpp"

namespace fs = std::filesystem;
using namespace uam;

namespace {

constexpr int kOk = 0;
constexpr int kRunsFailed = 1;
constexpr int kConfigError = 2;

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted = true; }

struct Common {
  std::string config;
  std::string profile;
  std::string output;
  std::uint64_t seed = 0;
  int repeats = 0;
  double duration = 0.0;
  int jobs = 1;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "YAML config file (built-in defaults when omitted)");
  app->add_option("--profile", c.profile, "Disturbance profile name");
  app->add_option("--output", c.output, "Output directory");
  app->add_option("--seed", c.seed, "Base seed; repeat i uses seed + i");
  app->add_option("--repeats", c.repeats, "Runs per cell")->check(CLI::PositiveNumber);
  app->add_option("--duration", c.duration, "Run length (s)")->check(CLI::PositiveNumber);
  app->add_option("--jobs", c.jobs, "Worker threads")->check(CLI::PositiveNumber);
}

// Config file first, then explicit flags.
AppConfig resolve(const Common& c) {
  AppConfig app = c.config.empty() ? AppConfig::defaults() : load_config(c.config);
  if (!c.profile.empty()) app.profile = c.profile;
  if (!c.output.empty()) app.bench.output = c.output;
  if (c.seed) app.bench.seed = c.seed;
  if (c.repeats) app.bench.repeats = c.repeats;
  if (c.duration > 0.0) app.bench.duration = c.duration;
  app.validate();
  return app;
}

std::string out_dir(const AppConfig& app, const std::string& sub) {
  const fs::path dir = fs::path(app.bench.output) / sub;
  fs::create_directories(dir);
  return dir.string();
}

std::string command_line(int argc, char** argv) {
  std::ostringstream s;
  for (int i = 1; i < argc; ++i) s << (i > 1 ? " " : "") << argv[i];
  return s.str();
}

template <typename T, typename Parse>
std::vector<T> parse_list(const std::vector<std::string>& names, Parse parse) {
  std::vector<T> out;
  for (const auto& n : names) out.push_back(parse(n));
  return out;
}

int cmd_track(const AppConfig& app, const Common& c, const std::vector<std::string>& controllers,
              const std::vector<std::string>& trajectories, bool traces, const std::string& cmd) {
  MatrixOptions opt;
  opt.controllers = parse_list<ControllerKind>(controllers, parse_controller_kind);
  opt.trajectories = parse_list<TrajectoryKind>(trajectories, parse_trajectory_kind);
  opt.repeats = app.bench.repeats;
  opt.seed = app.bench.seed;
  opt.duration = app.bench.duration;
  opt.jobs = c.jobs;
  const std::string dir = out_dir(app, "track");
  write_manifest(dir, app, cmd);
  const auto runs = run_matrix(app.resolved_loop(), opt);

  int failed = 0;
  if (traces) fs::create_directories(fs::path(dir) / "traces");
  for (const TrackingRun& r : runs) {
    if (r.result.failed) {
      ++failed;
      std::cerr << to_string(r.controller) << '/' << to_string(r.trajectory) << " seed " << r.seed
                << " failed: " << r.result.failure << '\n';
    }
    if (traces) {
      write_trace_csv((fs::path(dir) / "traces" /
                       (to_string(r.controller) + "_" + to_string(r.trajectory) + "_seed" + std::to_string(r.seed) +
                        ".csv"))
                          .string(),
                      r.result);
    }
  }
  const auto table = rmse_table(runs);
  write_table_csv((fs::path(dir) / "rmse_table.csv").string(), table);
  const std::string text = format_table(table);
  std::ofstream(fs::path(dir) / "rmse_table.txt") << text;
  write_error_distribution((fs::path(dir) / "error_distribution.csv").string(), runs);
  std::cout << text << "outputs in " << dir << '\n';
  return failed ? kRunsFailed : kOk;
}

int cmd_ablation(const AppConfig& app, const Common& c, const std::string& controller, const std::string& trajectory,
                 double factor, const std::string& cmd) {
  const std::string dir = out_dir(app, "ablation-arm");
  write_manifest(dir, app, cmd, {{"factor", std::to_string(factor)}});
  const AblationResult r =
      run_arm_ablation(app.resolved_loop(), parse_controller_kind(controller), parse_trajectory_kind(trajectory),
                       factor, app.bench.repeats, app.bench.seed, app.bench.duration, c.jobs);
  std::ofstream out(fs::path(dir) / "ablation.csv");
  out << "seed,baseline_cm,scaled_cm,ratio\n" << std::setprecision(10);
  for (std::size_t i = 0; i < r.ratios.size(); ++i) {
    out << app.bench.seed + i << ',' << r.baseline_cm[i] << ',' << r.scaled_cm[i] << ',' << r.ratios[i] << '\n';
  }
  std::cout << std::fixed << std::setprecision(3) << controller << " on " << trajectory << ", q_u_joint x" << factor
            << ": RMSE ratio " << r.ratio.mean << " +- " << r.ratio.std << " over " << r.ratios.size()
            << " seeds\noutputs in " << dir << '\n';
  return r.failed ? kRunsFailed : kOk;
}

int cmd_sysid(const AppConfig& app, const std::string& log_path, const ExcitationConfig& excitation,
              const std::string& cmd) {
  const std::string dir = out_dir(app, "sysid");
  write_manifest(dir, app, cmd);
  const ArmParams nominal = app.loop.nominal.arm;
  if (!log_path.empty()) {
    const MotionLog log = load_motion_log_csv(log_path);
    const DhReport dh = identify_dh(log, nominal);
    const BetaReport beta = identify_beta(log);
    std::ofstream out(fs::path(dir) / "sysid.csv");
    out << "parameter,initial,identified\n" << std::setprecision(10);
    const DhVector a = dh_vector(nominal);
    const DhVector b = dh_vector(dh.arm);
    for (int i = 0; i < kDhParameterCount; ++i) out << dh_parameter_name(i) << ',' << a(i) << ',' << b(i) << '\n';
    for (int i = 0; i < 4; ++i) out << "beta" << i + 1 << ',' << nominal.beta(i) << ',' << beta.beta(i) << '\n';
    std::cout << "pose residual " << dh.initial_rms << " -> " << dh.rms << " after " << dh.iterations
              << " iterations\noutputs in " << dir << '\n';
    return kOk;
  }
  const ArmParams truth = perturbed_arm(nominal, app.bench.seed);
  const SysidExperiment x = run_sysid_experiment(truth, nominal, excitation, app.bench.seed);
  write_sysid_csv((fs::path(dir) / "sysid.csv").string(), x);
  std::cout << std::setprecision(4) << "worst DH error " << 100.0 * x.worst_dh_relative << "%, worst beta error "
            << 100.0 * x.worst_beta_relative << "%, residual " << x.dh.rms << ", " << x.seconds
            << " s\noutputs in " << dir << '\n';
  return kOk;
}

int cmd_replay(const AppConfig& app, const std::string& path, const std::string& controller,
               const std::string& cmd) {
  const std::string dir = out_dir(app, "replay");
  write_manifest(dir, app, cmd, {{"input", path}});
  if (path.size() > 14 && path.substr(path.size() - 14) == ".episode.jsonl") {
    const Episode e = load_episode(path);
    const std::string hash = fnv1a_hex(emit_config(app));
    if (!e.header.config_hash.empty() && e.header.config_hash != hash) {
      std::cerr << "warning: episode was recorded with config " << e.header.config_hash << ", replaying with "
                << hash << '\n';
    }
    const ReplayResult r = replay_episode(e, app.loop_for(e.header.profile.empty() ? app.profile : e.header.profile));
    write_trace_csv((fs::path(dir) / "trace.csv").string(), r.run);
    std::cout << "replayed " << e.rows.size() << " rows, EE deviation " << std::setprecision(4) << r.deviation_cm
              << " cm RMSE\noutputs in " << dir << '\n';
    return r.run.failed ? kRunsFailed : kOk;
  }
  const TrajectorySpec spec = load_trajectory_csv(path);
  const RunResult r = run_tracking(parse_controller_kind(controller), app.resolved_loop(), spec, app.bench.seed);
  write_trace_csv((fs::path(dir) / "trace.csv").string(), r);
  std::cout << "tracked " << spec.samples.size() << " poses, RMSE " << std::setprecision(4) << r.rmse_cm
            << " cm\noutputs in " << dir << '\n';
  return r.failed ? kRunsFailed : kOk;
}

int cmd_demo(const AppConfig& app, int scenes, double noise, double correlation, bool record,
             const std::string& cmd) {
  const std::string dir = out_dir(app, "demo");
  write_manifest(dir, app, cmd);
  LoopConfig loop = app.resolved_loop();
  if (noise >= 0.0) loop.plant.noise.position = noise;
  if (correlation >= 0.0) loop.plant.noise.position_correlation_time = correlation;
  std::ofstream out(fs::path(dir) / "demo.csv");
  out << "seed,hole_x,hole_y,success,jammed,unreachable,run_failed,depth_m,lateral_m,reason\n" << std::setprecision(6);
  int ok = 0;
  int run_failures = 0;
  for (int i = 0; i < scenes; ++i) {
    const std::uint64_t seed = app.bench.seed + static_cast<std::uint64_t>(i);
    const PegOutcome o = run_peg_episode(app, loop, seed);
    ok += o.success;
    run_failures += o.run_failed;
    out << seed << ',' << o.scene.hole.x() << ',' << o.scene.hole.y() << ',' << o.success << ',' << o.jammed << ','
        << o.unreachable << ',' << o.run_failed << ',' << o.depth << ',' << o.lateral << ",\"" << o.reason << "\"\n";
    if (record && !o.unreachable) {
      save_episode((fs::path(dir) / ("peg_in_hole_seed" + std::to_string(seed) + ".episode.jsonl")).string(),
                   o.episode);
    }
    std::cout << "scene " << seed << ": " << (o.success ? "success" : o.reason) << '\n';
  }
  std::cout << "success " << ok << "/" << scenes << "\noutputs in " << dir << '\n';
  return run_failures ? kRunsFailed : kOk;
}

int cmd_teleop(AppConfig app, int port, const std::string& record, std::int64_t script_seed, double seconds) {
  if (port >= 0) app.teleop.port = port;
  app.teleop.validate();
  SessionOptions opt;
  opt.seed = app.bench.seed;
  opt.record_dir = record;
  if (script_seed >= 0) opt.script = make_peg_scene(app.peg, static_cast<std::uint64_t>(script_seed));
  TeleopSession session(app, opt);
  TeleopServer server(session, static_cast<unsigned short>(app.teleop.port));
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  session.start();
  server.start();
  std::cout << "teleop listening on ws://127.0.0.1:" << server.port() << "/  (profile " << app.profile
            << (opt.script ? ", scripted peg-in-hole" : "") << ")" << std::endl;
  const auto start = std::chrono::steady_clock::now();
  while (!g_interrupted) {
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    if (seconds > 0.0 &&
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() >= seconds) {
      break;
    }
  }
  server.stop();
  const std::string path = session.stop();
  const auto last = session.telemetry();
  if (!path.empty()) std::cout << "episode written to " << path << '\n';
  return last && last->status == "failed" ? kRunsFailed : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Aerial manipulator benchmark and teleoperation harness"};
  cli.require_subcommand(1);
  const std::string cmd = command_line(argc, argv);

  Common common;
  std::vector<std::string> controllers{"mpc_l1", "mpc", "ik_pid", "dffc"};
  std::vector<std::string> trajectories{"setpoint", "ellipse", "figure8"};
  bool no_traces = false;
  auto* track = cli.add_subcommand("track", "Tracking matrix: controllers x trajectories x repeats");
  add_common(track, common);
  track->add_option("--controllers", controllers, "mpc_l1, mpc, ik_pid, dffc");
  track->add_option("--trajectories", trajectories, "setpoint, ellipse, figure8");
  track->add_flag("--no-traces", no_traces, "Skip per-run trace CSVs");

  std::string ablation_controller = "mpc";
  std::string ablation_trajectory = "ellipse";
  double factor = 5.0;
  auto* ablation = cli.add_subcommand("ablation-arm", "Joint-effort weight scaling vs default");
  add_common(ablation, common);
  ablation->add_option("--controller", ablation_controller);
  ablation->add_option("--trajectory", ablation_trajectory);
  ablation->add_option("--factor", factor, "q_u_joint multiplier")->check(CLI::PositiveNumber);

  std::string log_path;
  ExcitationConfig excitation;
  excitation.segments = 600;
  excitation.position_noise = 0.001;
  excitation.rotation_noise = 0.001;
  excitation.joint_noise = 0.1 * M_PI / 180.0;
  auto* sysid = cli.add_subcommand("sysid", "DH and servo identification");
  add_common(sysid, common);
  sysid->add_option("--log", log_path, "Motion log CSV; simulated excitation of a perturbed arm when omitted");
  sysid->add_option("--segments", excitation.segments, "Excitation steps")->check(CLI::PositiveNumber);
  sysid->add_option("--position-noise", excitation.position_noise, "EE position noise std (m)");
  sysid->add_option("--rotation-noise", excitation.rotation_noise, "EE rotation noise std (rad)");
  sysid->add_option("--joint-noise", excitation.joint_noise, "Joint noise std (rad)");

  std::string replay_path;
  std::string replay_controller = "mpc_l1";
  auto* replay = cli.add_subcommand("replay", "Replay an episode or track a trajectory CSV");
  add_common(replay, common);
  replay->add_option("input", replay_path, "*.episode.jsonl or trajectory CSV")->required()->check(CLI::ExistingFile);
  replay->add_option("--controller", replay_controller, "Controller for trajectory CSVs");

  int scenes = 10;
  double noise = -1.0;
  double correlation = -1.0;
  bool record_demo = false;
  auto* demo = cli.add_subcommand("demo", "Scripted peg-in-hole over seeded scenes");
  add_common(demo, common);
  demo->add_option("--scenes", scenes)->check(CLI::PositiveNumber);
  demo->add_option("--noise", noise, "Position estimate noise std (m), overrides the profile");
  demo->add_option("--correlation-time", correlation, "Position noise correlation time (s), 0 for white");
  demo->add_flag("--record", record_demo, "Write one episode file per scene");

  int port = -1;
  std::string record_dir;
  std::int64_t script_seed = -1;
  double teleop_seconds = 0.0;
  auto* teleop = cli.add_subcommand("teleop", "WebSocket teleoperation service");
  add_common(teleop, common);
  teleop->add_option("--port", port, "TCP port (0 picks a free one)")->check(CLI::Range(0, 65535));
  teleop->add_option("--record", record_dir, "Directory for the session episode");
  teleop->add_option("--script", script_seed, "Drive the scripted peg-in-hole policy on this scene seed");
  teleop->add_option("--seconds", teleop_seconds, "Stop after this long (0: until interrupted)");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = cli.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  AppConfig app;
  try {
    app = resolve(common);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }

  try {
    if (*track) return cmd_track(app, common, controllers, trajectories, !no_traces, cmd);
    if (*ablation) return cmd_ablation(app, common, ablation_controller, ablation_trajectory, factor, cmd);
    if (*sysid) return cmd_sysid(app, log_path, excitation, cmd);
    if (*replay) return cmd_replay(app, replay_path, replay_controller, cmd);
    if (*demo) return cmd_demo(app, scenes, noise, correlation, record_demo, cmd);
    if (*teleop) return cmd_teleop(app, port, record_dir, script_seed, teleop_seconds);
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kConfigError;
  } catch (const EpisodeError& e) {
    std::cerr << "episode error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRunsFailed;
  }
  return kOk;
}
