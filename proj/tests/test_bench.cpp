#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "uam/bench.hpp"

namespace uam {
namespace {

namespace fs = std::filesystem;

std::vector<std::string> lines_of(const std::string& path) {
  std::ifstream in(path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

TrackingRun fake_run(ControllerKind c, TrajectoryKind k, double rmse, bool failed = false) {
  TrackingRun r;
  r.controller = c;
  r.trajectory = k;
  r.result.rmse_cm = rmse;
  r.result.failed = failed;
  r.result.median_cycle = 0.002;
  return r;
}

TEST(RmseTable, MeanAndSampleStdPerCell) {
  const std::vector<TrackingRun> runs{
      fake_run(ControllerKind::kMpcL1, TrajectoryKind::kEllipse, 1.0),
      fake_run(ControllerKind::kMpcL1, TrajectoryKind::kEllipse, 2.0),
      fake_run(ControllerKind::kMpcL1, TrajectoryKind::kEllipse, 3.0),
      fake_run(ControllerKind::kIkPid, TrajectoryKind::kFigure8, 5.0),
      fake_run(ControllerKind::kIkPid, TrajectoryKind::kFigure8, 99.0, true),
  };
  const auto rows = rmse_table(runs);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].controller, ControllerKind::kMpcL1);
  EXPECT_DOUBLE_EQ(rows[0].rmse_cm.mean, 2.0);
  EXPECT_DOUBLE_EQ(rows[0].rmse_cm.std, 1.0);
  EXPECT_EQ(rows[0].runs, 3);
  EXPECT_DOUBLE_EQ(rows[1].rmse_cm.mean, 5.0);
  EXPECT_EQ(rows[1].failed, 1);
  EXPECT_DOUBLE_EQ(rows[1].median_cycle_ms, 2.0);

  const std::string text = format_table(rows);
  EXPECT_NE(text.find("2.00 +- 1.00"), std::string::npos);
  EXPECT_NE(text.find("ik_pid"), std::string::npos);

  const std::string path = (fs::temp_directory_path() / "uam_table.csv").string();
  write_table_csv(path, rows);
  const auto lines = lines_of(path);
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0], "controller,trajectory,rmse_cm_mean,rmse_cm_std,runs,failed,median_cycle_ms");
  EXPECT_EQ(lines[1].rfind("mpc_l1,ellipse,2,1,3,0,", 0), 0u);
  fs::remove(path);
}

TEST(ErrorDistribution, EmptyIsHeaderOnly) {
  const std::string path = (fs::temp_directory_path() / "uam_dist_empty.csv").string();
  write_error_distribution(path, {});
  EXPECT_EQ(lines_of(path), std::vector<std::string>{"controller,trajectory,axis,error"});
  fs::remove(path);
}

TEST(ErrorDistribution, ConstantOffsetIsSingleValued) {
  TrackingRun r = fake_run(ControllerKind::kMpc, TrajectoryKind::kSetpoint, 1.0);
  for (int k = 0; k < 5; ++k) {
    TraceRow row;
    row.t = 0.01 * k;
    row.ee_ref = Vec3(0.1 * k, 0.0, 1.5);
    row.ee = row.ee_ref + Vec3(0.01, 0.0, -0.02);
    r.result.rows.push_back(row);
  }
  const std::string path = (fs::temp_directory_path() / "uam_dist.csv").string();
  write_error_distribution(path, {r});
  const auto lines = lines_of(path);
  ASSERT_EQ(lines.size(), 1u + 15u);
  std::map<std::string, std::set<double>> values;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::stringstream ss(lines[i]);
    std::string c, k, axis, e;
    std::getline(ss, c, ',');
    std::getline(ss, k, ',');
    std::getline(ss, axis, ',');
    std::getline(ss, e, ',');
    EXPECT_EQ(c, "mpc");
    EXPECT_EQ(k, "setpoint");
    values[axis].insert(std::round(std::stod(e) * 1e9) / 1e9);
  }
  EXPECT_EQ(values["x"], std::set<double>{0.01});
  EXPECT_EQ(values["y"], std::set<double>{0.0});
  EXPECT_EQ(values["z"], std::set<double>{-0.02});
  fs::remove(path);
}

TEST(RunMatrix, DeterministicAcrossRepeatsAndJobs) {
  const LoopConfig loop = AppConfig::defaults().resolved_loop();
  MatrixOptions opt;
  opt.controllers = {ControllerKind::kMpcL1, ControllerKind::kIkPid};
  opt.trajectories = {TrajectoryKind::kEllipse};
  opt.repeats = 2;
  opt.seed = 4;
  opt.duration = 2.0;
  const auto a = run_matrix(loop, opt);
  opt.jobs = 2;
  const auto b = run_matrix(loop, opt);
  ASSERT_EQ(a.size(), 4u);
  EXPECT_EQ(a[0].seed, 4u);
  EXPECT_EQ(a[1].seed, 5u);
  EXPECT_EQ(a[2].controller, ControllerKind::kIkPid);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_FALSE(a[i].result.failed);
    EXPECT_EQ(a[i].result.rmse_cm, b[i].result.rmse_cm);
    EXPECT_EQ(a[i].result.rows.size(), 200u);
  }
  EXPECT_NE(a[0].result.rmse_cm, a[1].result.rmse_cm);

  opt.repeats = 0;
  EXPECT_THROW(run_matrix(loop, opt), std::invalid_argument);
}

TEST(RunMatrix, NominalSetpointIsTight) {
  AppConfig app = AppConfig::defaults();
  app.profile = "nominal";
  MatrixOptions opt;
  opt.controllers = {ControllerKind::kMpcL1};
  opt.trajectories = {TrajectoryKind::kSetpoint};
  opt.repeats = 1;
  opt.duration = 20.0;
  const auto runs = run_matrix(app.resolved_loop(), opt);
  EXPECT_LT(runs[0].result.rmse_cm, 0.5);
}

TEST(ArmAblation, UnitFactorGivesUnitRatio) {
  const LoopConfig loop = AppConfig::defaults().resolved_loop();
  const AblationResult r = run_arm_ablation(loop, ControllerKind::kMpc, TrajectoryKind::kEllipse, 1.0, 2, 1, 1.0);
  ASSERT_EQ(r.ratios.size(), 2u);
  EXPECT_EQ(r.ratios[0], 1.0);
  EXPECT_EQ(r.ratio.mean, 1.0);
  EXPECT_EQ(r.ratio.std, 0.0);
  EXPECT_THROW(run_arm_ablation(loop, ControllerKind::kMpc, TrajectoryKind::kEllipse, 0.0, 1, 1, 1.0),
               std::invalid_argument);
}

TEST(TraceCsv, HeaderMatchesRows) {
  RunResult run;
  run.rows.resize(3);
  const std::string path = (fs::temp_directory_path() / "uam_trace.csv").string();
  write_trace_csv(path, run);
  const auto lines = lines_of(path);
  ASSERT_EQ(lines.size(), 4u);
  const auto columns = [](const std::string& s) { return std::count(s.begin(), s.end(), ',') + 1; };
  EXPECT_EQ(columns(lines[0]), 44);
  for (std::size_t i = 1; i < lines.size(); ++i) EXPECT_EQ(columns(lines[i]), 44);
  fs::remove(path);
}

TEST(PerturbedArm, DeterministicAndSmall) {
  const ArmParams nominal;
  const ArmParams a = perturbed_arm(nominal, 3);
  EXPECT_EQ(dh_vector(a), dh_vector(perturbed_arm(nominal, 3)));
  EXPECT_NE(dh_vector(a), dh_vector(perturbed_arm(nominal, 4)));
  const DhVector d = dh_vector(a) - dh_vector(nominal);
  EXPECT_GT(d.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_LE(d.cwiseAbs().maxCoeff(), 0.02);
  EXPECT_EQ(dh_relative_error(a, a), DhVector::Zero());
}

TEST(Manifest, RecordsHashAndVersion) {
  const AppConfig app = AppConfig::defaults();
  const fs::path dir = fs::temp_directory_path() / "uam_manifest";
  fs::remove_all(dir);
  write_manifest(dir.string(), app, "track --repeats 3", {{"note", "x"}});
  std::ifstream in(dir / "manifest.json");
  const auto j = nlohmann::json::parse(in);
  EXPECT_EQ(j["config_hash"], fnv1a_hex(emit_config(app)));
  EXPECT_EQ(j["command"], "track --repeats 3");
  EXPECT_EQ(j["note"], "x");
  EXPECT_FALSE(j["code_version"].get<std::string>().empty());
  EXPECT_EQ(load_config((dir / "config.yaml").string()).profile, app.profile);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace uam
