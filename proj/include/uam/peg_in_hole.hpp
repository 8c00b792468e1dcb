#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "uam/config.hpp"
#include "uam/episode.hpp"

namespace uam {

struct PegScene {
  std::uint64_t seed = 0;
  Vec3 hole = Vec3::Zero();  // centre of the mouth; the hole axis is vertical
};

/// Hole placed uniformly in the horizontal square of half-width
/// horizontal_range around the configured centre.
PegScene make_peg_scene(const PegSettings& settings, std::uint64_t seed);

struct PegWaypoint {
  double t = 0.0;
  Vec3 p = Vec3::Zero();  // EE position
  double gripper = 0.0;   // 0 closed on the peg, 1 open
  std::string phase;
};

/// Waypoints joined by minimum-jerk segments, level EE orientation.
struct PegScript {
  std::vector<PegWaypoint> waypoints;
  bool reachable = true;
  std::string failure;
  /// The peg leaves the gripper here; success is judged at this instant.
  double release_time = 0.0;

  double duration() const { return waypoints.empty() ? 0.0 : waypoints.back().t; }
  EeTarget sample(double t) const;
  std::string phase_at(double t) const;
};

/// home -> standoff above the hole -> align (dwell) -> insert along the
/// axis -> release -> retreat. Unreachable when any waypoint leaves the
/// teleop workspace.
PegScript scripted_peg_in_hole(const PegScene& scene, const PegSettings& settings, const TeleopSettings& teleop);

struct PegOutcome {
  PegScene scene;
  bool success = false;
  bool unreachable = false;
  /// Peg crossed the mouth plane outside the clearance.
  bool jammed = false;
  bool run_failed = false;
  std::string reason;
  double depth = 0.0;    // tip depth below the mouth at release (m)
  double lateral = 0.0;  // tip distance from the axis at release (m)
  Episode episode;
  RunResult run;
};

/// Peg tip and the point where the peg axis crosses the mouth plane, for an
/// EE pose. Returns lateral offsets from the hole axis.
struct PegContact {
  double depth = 0.0;
  double tip_lateral = 0.0;
  double mouth_lateral = 0.0;
};
PegContact peg_contact(const Transform& ee, const PegScene& scene, const PegSettings& settings);

/// Runs the scripted policy in closed loop on the given loop config (its
/// plant noise decides the estimate quality) and records the episode.
PegOutcome run_peg_episode(const AppConfig& app, const LoopConfig& loop, std::uint64_t seed,
                           ControllerKind controller = ControllerKind::kMpcL1);
/// Same on an explicit scene; scene.seed seeds the plant.
PegOutcome run_peg_scene(const AppConfig& app, const LoopConfig& loop, const PegScene& scene,
                         ControllerKind controller = ControllerKind::kMpcL1);

}  // namespace uam
