#pragma once

#include <string>
#include <vector>

#include "uam/ee_mpc.hpp"

namespace uam {

enum class TrajectoryKind { kSetpoint, kEllipse, kFigure8, kFile };

TrajectoryKind parse_trajectory_kind(const std::string& name);
std::string to_string(TrajectoryKind kind);

struct TimedPose {
  double t = 0.0;
  Vec3 p = Vec3::Zero();
  Mat3 R = Mat3::Identity();
};

struct TrajectorySpec {
  TrajectoryKind kind = TrajectoryKind::kSetpoint;
  double duration = 60.0;
  double rate = 100.0;
  std::vector<TimedPose> samples;  // file kind only, strictly increasing t

  void validate() const;
};

/// EE reference at time t. Out-of-range t is clamped and reported through
/// `clamped`. The base twist reference carries the EE translational rate.
EeTarget sample(const TrajectorySpec& spec, double t, bool* clamped = nullptr);

/// CSV rows "t,px,py,pz,qw,qx,qy,qz" (s, m, unit quaternion); '#' lines and a
/// header line starting with "t" are skipped.
TrajectorySpec load_trajectory_csv(const std::string& path);
void save_trajectory_csv(const std::string& path, const std::vector<TimedPose>& poses);

struct TimedPoint {
  double t = 0.0;
  Vec3 p = Vec3::Zero();
};

struct RmseResult {
  double rmse_cm = 0.0;
  std::vector<double> t;
  std::vector<Vec3> error;  // measured - reference, m
};

/// Reference is linearly interpolated onto the measured timestamps inside
/// the common time range. Throws std::invalid_argument on an empty overlap.
RmseResult rmse(const std::vector<TimedPoint>& reference, const std::vector<TimedPoint>& measured);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

/// Sample standard deviation (n - 1); zero for a single value.
MeanStd mean_std(const std::vector<double>& values);

}  // namespace uam
