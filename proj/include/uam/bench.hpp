#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "uam/config.hpp"
#include "uam/sysid.hpp"
#include "uam/trajectories.hpp"

namespace uam {

struct TrackingRun {
  ControllerKind controller = ControllerKind::kMpcL1;
  TrajectoryKind trajectory = TrajectoryKind::kEllipse;
  std::uint64_t seed = 0;
  RunResult result;
};

struct MatrixOptions {
  std::vector<ControllerKind> controllers;
  std::vector<TrajectoryKind> trajectories;
  int repeats = 3;
  std::uint64_t seed = 1;  // repeat i uses seed + i
  double duration = 60.0;
  /// Worker threads; results do not depend on it.
  int jobs = 1;
};

/// Every controller x trajectory x repeat, ordered that way. A run that
/// blows up is kept with failed = true.
std::vector<TrackingRun> run_matrix(const LoopConfig& loop, const MatrixOptions& options);

struct TableRow {
  ControllerKind controller = ControllerKind::kMpcL1;
  TrajectoryKind trajectory = TrajectoryKind::kEllipse;
  MeanStd rmse_cm;
  int runs = 0;
  int failed = 0;
  double median_cycle_ms = 0.0;
};

/// Mean and sample std of RMSE over the completed runs of each cell, in
/// first-appearance order.
std::vector<TableRow> rmse_table(const std::vector<TrackingRun>& runs);
void write_table_csv(const std::string& path, const std::vector<TableRow>& rows);
std::string format_table(const std::vector<TableRow>& rows);

/// Columns: t, ee(3), ee_ref(3), ee_measured(3), base p(3), base q(4),
/// theta(4), theta_cmd(4), tau_cmd(6), tau_hat(6), d_hat(4), cost,
/// cycle_ms, degraded.
void write_trace_csv(const std::string& path, const RunResult& run);

/// Long format "controller,trajectory,axis,error" with error = true EE minus
/// reference (m) for every row and axis x, y, z.
void write_error_distribution(const std::string& path, const std::vector<TrackingRun>& runs);

struct AblationResult {
  std::vector<double> baseline_cm;
  std::vector<double> scaled_cm;
  std::vector<double> ratios;
  MeanStd ratio;
  int failed = 0;
};

/// Same controller, trajectory and seeds with q_u_joint multiplied by
/// `factor`; ratio = scaled RMSE / baseline RMSE per seed.
AblationResult run_arm_ablation(const LoopConfig& loop, ControllerKind controller, TrajectoryKind trajectory,
                                double factor, int repeats, std::uint64_t seed, double duration, int jobs = 1);

/// Deterministic DH perturbation (about 5 mm and 1 deg) used as the
/// unknown truth of simulated identification runs.
ArmParams perturbed_arm(const ArmParams& nominal, std::uint64_t seed);

/// Error relative to max(|truth|, 0.1) per DH number (m or rad).
DhVector dh_relative_error(const ArmParams& estimate, const ArmParams& truth);

struct SysidExperiment {
  ArmParams truth;
  ArmParams initial;
  DhReport dh;
  BetaReport beta;
  double worst_dh_relative = 0.0;
  double worst_beta_relative = 0.0;
  double seconds = 0.0;
};

/// Excites `truth` in simulation and identifies DH starting from `initial`
/// and beta from the same log.
SysidExperiment run_sysid_experiment(const ArmParams& truth, const ArmParams& initial,
                                     const ExcitationConfig& excitation, std::uint64_t seed);
/// Columns: parameter, truth, initial, identified, relative_error.
void write_sysid_csv(const std::string& path, const SysidExperiment& experiment);

/// Build identifier baked in at configure time.
std::string code_version();

/// manifest.json: command, config hash, code version, profile, seeds, UTC
/// timestamp and any extra key/value pairs; config.yaml: the effective
/// configuration.
void write_manifest(const std::string& dir, const AppConfig& app, const std::string& command,
                    const std::vector<std::pair<std::string, std::string>>& extra = {});

}  // namespace uam
