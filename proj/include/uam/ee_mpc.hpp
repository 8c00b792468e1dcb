#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "uam/arm_model.hpp"
#include "uam/box_ddp.hpp"
#include "uam/geometry.hpp"
#include "uam/uav_dynamics.hpp"

namespace uam {

using Vec10 = Eigen::Matrix<double, 10, 1>;

/// Nominal model shared by controller, estimators and baselines.
struct UamParams {
  UavParams uav;
  ArmParams arm;

  void validate() const {
    uav.validate();
    arm.validate();
  }
};

struct MpcWeights {
  Vec3 q_p = Vec3::Constant(12.0);
  Vec3 q_r = Vec3::Constant(10.0);
  Vec6 q_v = Vec6::Constant(0.1);
  Vec4 q_theta = Vec4::Constant(0.1);
  Vec6 q_u_wrench = (Vec6() << 0.03, 0.03, 0.03, 0.1, 0.1, 0.1).finished();
  Vec4 q_u_joint = Vec4::Constant(0.1);
  double terminal_scale = 10.0;

  void validate() const;
};

/// Half-space n . x >= offset that every tracked body point must respect.
struct WallPlane {
  Vec3 normal = Vec3::UnitX();
  double offset = 0.0;
};

struct CollisionConfig {
  double base_radius = 0.45;
  double link_radius = 0.03;
  double floor_z = 0.15;
  double margin = 0.05;
  double weight = 100.0;
  std::vector<WallPlane> walls;  // at most kMaxWalls

  static constexpr int kMaxWalls = 2;
};

struct MpcConfig {
  double horizon = 2.5;
  int steps = 50;
  double dt = 0.05;
  double control_rate = 100.0;
  Vec6 wrench_lb = (Vec6() << -3.0, -3.0, 0.0, -0.5, -0.5, -0.5).finished();
  Vec6 wrench_ub = (Vec6() << 3.0, 3.0, 3.0, 0.5, 0.5, 0.5).finished();
  double max_linear_speed = 1.5;
  double max_angular_speed = 3.0;
  CollisionConfig collision;
  Vec4 theta_ref{-1.1, 1.5, -0.4, 0.0};
  SolverMode mode = SolverMode::kRealTimeIteration;
  int max_iterations = 50;
  // Projected-gradient bound relative to max(1, cost); tighter values sit
  // below the rounding floor of the rollout cost.
  double tolerance = 1e-5;

  void validate() const;
};

/// Whole-body state: base pose and twist plus joint angles. The EE pose is
/// derived through forward kinematics.
struct MpcState {
  BaseState base;
  Vec4 theta = Vec4::Zero();

  Transform ee_pose(const ArmParams& arm) const { return fk_ee(theta, arm, base.pose()); }
};

struct MpcControl {
  Wrench tau;
  Vec4 theta_cmd = Vec4::Zero();

  Vec10 vector() const {
    Vec10 u;
    u << tau.force, tau.torque, theta_cmd;
    return u;
  }
  static MpcControl FromVector(const Vec10& u) {
    MpcControl c;
    c.tau = Wrench::FromVector(u.head<6>());
    c.theta_cmd = u.tail<4>();
    return c;
  }
};

struct EeTarget {
  Vec3 p_ref = Vec3::Zero();
  Mat3 R_ref = Mat3::Identity();
  Vec6 v_ref = Vec6::Zero();
  double gripper = 0.0;
};

struct MpcSolution {
  std::vector<MpcControl> controls;
  std::vector<MpcState> states;
  std::vector<double> stamps;  // relative to the problem's initial time
  double solve_time = 0.0;
  int iterations = 0;
  double cost = 0.0;
  double kkt = 0.0;
  bool converged = false;
};

class InfeasibleStateError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class MpcDivergence : public std::runtime_error {
 public:
  MpcDivergence(const char* what, MpcSolution last)
      : std::runtime_error(what), last_iterate(std::move(last)) {}
  MpcSolution last_iterate;
};

/// Tracking part of the stage cost: e_p, e_R, e_v, e_theta and e_u, each as
/// e' Q e. The wrench reference is the hover wrench at the stage attitude and
/// the joint command reference is the measured joint state theta_hat.
double stage_cost(const MpcState& x, const MpcControl& u, const EeTarget& target,
                  const Vec4& theta_ref, const Vec4& theta_hat, const MpcWeights& weights,
                  const UamParams& params);

/// Transcribed least-squares problem; also serves as the solver model.
class MpcProblem {
 public:
  static constexpr int kNx = 16;  // [p, phi, v, theta]
  static constexpr int kNu = 10;  // [force, torque, theta_cmd]
  static constexpr int kNp = 14;  // soft constraint residuals
  static constexpr int kNr = 26 + kNp;
  static constexpr int kNrTerminal = 16 + kNp;
  using State = MpcState;
  using Control = Vec10;
  using Tangent = Eigen::Matrix<double, kNx, 1>;

  MpcProblem(const MpcState& x0, const EeTarget& target, const MpcConfig& config,
             const MpcWeights& weights, const UamParams& params);
  /// One target per node 0..N; a single entry is held over the horizon.
  MpcProblem(const MpcState& x0, std::vector<EeTarget> targets, const MpcConfig& config,
             const MpcWeights& weights, const UamParams& params);

  int horizon() const { return config_.steps; }
  const MpcState& x0() const { return x0_; }
  const EeTarget& target(int k = 0) const {
    return targets_[std::min<std::size_t>(static_cast<std::size_t>(k), targets_.size() - 1)];
  }
  const MpcConfig& config() const { return config_; }
  const MpcWeights& weights() const { return weights_; }
  const UamParams& params() const { return params_; }

  State step(const State& x, const Control& u, int k) const;
  void linearize(const State& x, const Control& u, int k, Eigen::Matrix<double, kNx, kNx>& a,
                 Eigen::Matrix<double, kNx, kNu>& b) const;
  void stage_residual(const State& x, const Control& u, int k, Eigen::Matrix<double, kNr, 1>& r,
                      Eigen::Matrix<double, kNr, kNx>* jx, Eigen::Matrix<double, kNr, kNu>* ju) const;
  void terminal_residual(const State& x, Eigen::Matrix<double, kNrTerminal, 1>& r,
                         Eigen::Matrix<double, kNrTerminal, kNx>* jx) const;
  Tangent difference(const State& a, const State& b) const;
  State retract(const State& x, const Tangent& dx) const;
  void control_bounds(int k, Control& lb, Control& ub) const;

  Control hover_control(const State& x) const;

 private:
  static constexpr int kKin = 18;
  template <typename Scalar>
  Eigen::Matrix<Scalar, kKin, 1> kinematic_terms(const Vector3<Scalar>& p, const Matrix3<Scalar>& r,
                                                  const Vector4<Scalar>& theta,
                                                  const EeTarget& target) const;
  void kinematic_block(const State& x, const EeTarget& target, Eigen::Matrix<double, kKin, 1>& r,
                       Eigen::Matrix<double, kKin, kNx>* jx) const;
  void speed_block(const State& x, Eigen::Matrix<double, 2, 1>& r,
                   Eigen::Matrix<double, 2, kNx>* jx) const;

  MpcState x0_;
  std::vector<EeTarget> targets_;
  MpcConfig config_;
  MpcWeights weights_;
  UamParams params_;
  Vec4 theta_hat_;
  Vec3 sq_p_, sq_r_;
  Vec6 sq_v_, sq_w_;
  Vec4 sq_theta_, sq_j_;
  double sq_pen_;
  double sq_term_;
  Vec4 servo_decay_;
};

MpcProblem build_problem(const MpcState& x0, const EeTarget& target, const MpcConfig& config,
                         const MpcWeights& weights, const UamParams& params);
MpcProblem build_problem(const MpcState& x0, std::vector<EeTarget> targets, const MpcConfig& config,
                         const MpcWeights& weights, const UamParams& params);

MpcSolution solve(const MpcProblem& problem, const MpcSolution* warm_start = nullptr);

/// Convenience wrappers used by gradient checks.
double rollout_cost(const MpcProblem& problem, const std::vector<Vec10>& controls);
std::vector<Vec10> cost_gradient(const MpcProblem& problem, const std::vector<Vec10>& controls);

/// Receding-horizon wrapper: one solve per call, warm-started from the
/// time-shifted previous solution.
class EeMpcController {
 public:
  EeMpcController(MpcConfig config, MpcWeights weights, UamParams params);

  MpcControl step(const MpcState& x_hat, const EeTarget& target, double t);
  MpcControl step(const MpcState& x_hat, std::vector<EeTarget> targets, double t);

  bool degraded() const { return degraded_; }
  const std::optional<MpcSolution>& last_solution() const { return solution_; }
  const MpcConfig& config() const { return config_; }
  const MpcWeights& weights() const { return weights_; }
  double last_cycle_time() const { return last_cycle_time_; }
  void reset();

 private:
  std::vector<MpcControl> shifted_controls(double t) const;

  MpcConfig config_;
  MpcWeights weights_;
  UamParams params_;
  std::optional<MpcSolution> solution_;
  double solution_time_ = 0.0;
  MpcControl last_safe_;
  bool has_safe_ = false;
  bool degraded_ = false;
  double last_cycle_time_ = 0.0;
};

}  // namespace uam
