#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "uam/baseline_controllers.hpp"
#include "uam/ee_mpc.hpp"
#include "uam/l1_adaptation.hpp"
#include "uam/plant_simulator.hpp"
#include "uam/trajectories.hpp"

namespace uam {

enum class ControllerKind { kMpcL1, kMpc, kIkPid, kDffc };

ControllerKind parse_controller_kind(const std::string& name);
std::string to_string(ControllerKind kind);

struct L1Config {
  bool enabled = true;
  Vec6 a_v = Vec6::Constant(-2.0);  // diagonal of A_v
  Vec4 a_d = Vec4::Constant(-2.0);  // diagonal of A_d
  double base_cutoff = 5.0;
  double joint_cutoff = 5.0;

  void validate() const;
};

/// Everything a closed-loop run depends on besides the seed and the target
/// stream.
struct LoopConfig {
  UamParams nominal;
  MpcConfig mpc;
  MpcWeights weights;
  L1Config l1;
  PidGains pid;
  IkOptions ik;
  DffcGains dffc;
  PlantConfig plant;  // plant.uav / plant.arm are overwritten by nominal

  void validate() const;
};

struct TraceRow {
  double t = 0.0;
  BaseState base;
  Vec4 theta = Vec4::Zero();
  Vec3 ee = Vec3::Zero();
  Vec4 ee_quat = Vec4(1, 0, 0, 0);
  Vec3 ee_ref = Vec3::Zero();
  Vec4 ee_ref_quat = Vec4(1, 0, 0, 0);
  Vec3 ee_measured = Vec3::Zero();
  Vec4 ee_measured_quat = Vec4(1, 0, 0, 0);
  Wrench tau_cmd;
  Vec4 theta_cmd = Vec4::Zero();
  Wrench tau_hat;
  Vec4 d_hat = Vec4::Zero();
  Wrench tau_ext_true;
  double cost = 0.0;
  double cycle_time = 0.0;
  bool degraded = false;
};

struct RunResult {
  std::vector<TraceRow> rows;
  bool failed = false;
  std::string failure;
  double rmse_cm = 0.0;
  double median_cycle = 0.0;
};

/// Target at absolute time t.
using TargetFn = std::function<EeTarget(double)>;

/// Resting state with the EE on `ee`, solved by IK from a level base with
/// the arm at theta.
MpcState hover_state_for_ee(const EeTarget& ee, const Vec4& theta, const UamParams& params);

/// One controller driving one plant. step() performs measure -> estimate ->
/// control -> augment -> plant step for a single control period.
class ClosedLoop {
 public:
  ClosedLoop(ControllerKind kind, LoopConfig config, const MpcState& initial, std::uint64_t seed);

  TraceRow step(const TargetFn& target);

  double time() const { return plant_.state().t; }
  const PlantSimulator& plant() const { return plant_; }
  PlantSimulator& plant() { return plant_; }
  const L1BaseEstimator& base_estimator() const { return base_l1_; }
  const L1JointEstimator& joint_estimator() const { return joint_l1_; }
  MpcState true_state() const;
  const LoopConfig& config() const { return config_; }

 private:
  MpcControl control(const MpcState& x_hat, const TargetFn& target, double t, TraceRow& row);

  ControllerKind kind_;
  LoopConfig config_;
  PlantSimulator plant_;
  EeMpcController mpc_;
  L1BaseEstimator base_l1_;
  L1JointEstimator joint_l1_;
  PidState pid_state_;
  DffcState dffc_state_;
  MpcState ik_seed_;
  Wrench tau_applied_;
  Vec4 theta_applied_;
};

/// Fills rmse_cm (true EE against reference) and median_cycle from rows.
void summarize(RunResult& result);

/// Runs `duration` seconds; plant blow-ups mark the run failed and keep the
/// partial trace. RMSE compares the true EE position with the reference.
RunResult run_closed_loop(ControllerKind kind, const LoopConfig& config, const TargetFn& target,
                          double duration, const MpcState& initial, std::uint64_t seed);

/// Starts at hover with the EE on the trajectory's first sample.
RunResult run_tracking(ControllerKind kind, const LoopConfig& config, const TrajectorySpec& trajectory,
                       std::uint64_t seed);

}  // namespace uam
