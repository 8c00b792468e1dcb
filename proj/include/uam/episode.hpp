#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "uam/closed_loop.hpp"
#include "uam/config.hpp"

namespace uam {

inline constexpr int kEpisodeSchemaVersion = 1;

class EpisodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EpisodeHeader {
  std::string task;
  std::uint64_t seed = 0;
  int schema_version = kEpisodeSchemaVersion;
  double source_rate = 100.0;
  double rate = 10.0;
  int chunk_size = 100;
  ControllerKind controller = ControllerKind::kMpcL1;
  std::string profile;
  std::string config_hash;
  /// Plant start state; replay restarts from it.
  MpcState initial;
};

/// One observation/action pair. Observation images are placeholders; the
/// pose is the controller's estimate of the EE, the action is the EE target.
struct EpisodeRow {
  double t = 0.0;
  Vec3 obs_p = Vec3::Zero();
  Vec4 obs_q = Vec4(1, 0, 0, 0);
  Vec3 act_p = Vec3::Zero();
  Vec4 act_q = Vec4(1, 0, 0, 0);
  double gripper = 0.0;
};

struct Episode {
  EpisodeHeader header;
  std::vector<EpisodeRow> rows;

  /// Uniform timestamps at header.rate, unit quaternions, actions inside
  /// the workspace box.
  void validate(const TeleopSettings& settings) const;
};

/// Keeps every (source_rate / rate)-th row starting with the first. The
/// ratio must be a positive integer.
std::vector<EpisodeRow> decimate(const std::vector<EpisodeRow>& rows, double source_rate, double rate);

/// Collects rows at the control rate and decimates on finish().
class EpisodeRecorder {
 public:
  explicit EpisodeRecorder(EpisodeHeader header);

  void add(const TraceRow& row, const EeTarget& action);
  Episode finish() const;
  std::size_t source_rows() const { return rows_.size(); }

 private:
  EpisodeHeader header_;
  std::vector<EpisodeRow> rows_;
};

/// Header line first, then one object per row (.episode.jsonl).
void save_episode(const std::string& path, const Episode& episode);
/// Throws EpisodeError on I/O problems, malformed lines or a schema-version
/// mismatch.
Episode load_episode(const std::string& path);

/// Action at time t: linear in position, slerp in rotation, held at the ends.
EeTarget episode_action(const Episode& episode, double t);

struct ReplayResult {
  RunResult run;
  /// RMSE (cm) between recorded and replayed observation positions at the
  /// recorded timestamps.
  double deviation_cm = 0.0;
};

/// Restarts from the recorded initial state with the recorded seed and
/// feeds the recorded actions as a held target stream.
ReplayResult replay_episode(const Episode& episode, const LoopConfig& config);

/// Wraps a target function so the controller sees only the present value
/// over its whole horizon, as with a live operator stream.
TargetFn held_stream(TargetFn source, const ClosedLoop& loop);

}  // namespace uam
