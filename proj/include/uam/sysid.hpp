#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "uam/arm_model.hpp"

namespace uam {

struct MotionSample {
  double t = 0.0;
  Transform base;
  Vec4 theta_cmd = Vec4::Zero();
  Vec4 theta = Vec4::Zero();
  Transform ee;
};

struct MotionLog {
  std::vector<MotionSample> samples;

  /// Strictly increasing time, finite values, valid rotations.
  void validate() const;
};

/// CSV columns: t, base p(3) q(wxyz 4), theta_cmd(4), theta(4), ee p(3) q(4).
MotionLog load_motion_log_csv(const std::string& path);
void save_motion_log_csv(const std::string& path, const MotionLog& log);

class InsufficientExcitation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Identified DH numbers, (d, a, alpha) per joint. Theta offsets are part of
/// the joint zero and stay as given.
constexpr int kDhParameterCount = 12;
using DhVector = Eigen::Matrix<double, kDhParameterCount, 1>;

DhVector dh_vector(const ArmParams& arm);
ArmParams with_dh_vector(const ArmParams& arm, const DhVector& zeta);
std::string dh_parameter_name(int index);

struct DhOptions {
  int max_iterations = 100;
  /// Rotation residual weight (m per rad): 1 cm counts like 5.7 deg.
  double rotation_weight = 0.1;
  /// Relative singular value below which a direction is unidentifiable.
  double rank_tolerance = 1e-9;
  double step_tolerance = 1e-12;
};

struct DhReport {
  ArmParams arm;
  double initial_rms = 0.0;
  double rms = 0.0;
  int iterations = 0;
  int distinct_configurations = 0;
  /// Cost after every accepted iteration (first entry: initial cost).
  std::vector<double> cost_history;
};

/// Gauss-Newton with Levenberg damping on the base-frame EE pose residual.
/// Throws InsufficientExcitation naming the weakest parameter combination
/// when the stacked Jacobian is rank deficient.
DhReport identify_dh(const MotionLog& log, const ArmParams& init, const DhOptions& options = {});

struct BetaOptions {
  /// Multi-step prediction window (s) for the refinement stage.
  double window = 0.2;
  /// Relative 95% half-width above which the estimate is flagged.
  double max_relative_ci = 0.05;
};

struct BetaReport {
  Vec4 beta = Vec4::Zero();
  /// One-step regression estimate that seeds the refinement.
  Vec4 beta_regression = Vec4::Zero();
  Vec4 ci_half_width = Vec4::Zero();
  std::array<bool, 4> wide_ci{};
  bool any_wide() const { return wide_ci[0] || wide_ci[1] || wide_ci[2] || wide_ci[3]; }
};

/// Per-joint least squares on the sampled first-order servo. Throws
/// InsufficientExcitation when a joint never leaves its command.
BetaReport identify_beta(const MotionLog& log, const BetaOptions& options = {});

struct ExcitationConfig {
  int segments = 300;
  double hold = 0.5;
  double rate = 100.0;
  double position_noise = 0.0;
  double rotation_noise = 0.0;
  double joint_noise = 0.0;
  /// Fraction of the joint range spanned by the random step targets.
  double span = 0.7;
};

/// Arm-only excitation with a stationary base: random step commands through
/// the true first-order servo, EE pose and joints measured with noise.
MotionLog simulate_excitation(const ArmParams& truth, const Transform& base,
                              const ExcitationConfig& config, std::uint64_t seed);

}  // namespace uam
