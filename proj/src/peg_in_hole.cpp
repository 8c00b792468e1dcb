#include "uam/peg_in_hole.hpp"

#include <cmath>
#include <random>

namespace uam {

namespace {

// Peak speed of a minimum-jerk segment is 1.875 times its mean speed.
constexpr double kMinJerkPeak = 1.875;

double segment_time(const Vec3& a, const Vec3& b, double peak_speed, double floor) {
  return std::max(floor, kMinJerkPeak * (b - a).norm() / peak_speed);
}

bool inside(const Vec3& p, const TeleopSettings& t) {
  return (p.array() >= t.workspace_lo.array()).all() && (p.array() <= t.workspace_hi.array()).all();
}

}  // namespace

PegScene make_peg_scene(const PegSettings& settings, std::uint64_t seed) {
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ull + 0x5065u);
  std::uniform_real_distribution<double> u(-settings.horizontal_range, settings.horizontal_range);
  PegScene s;
  s.seed = seed;
  s.hole = settings.hole;
  s.hole.x() += u(rng);
  s.hole.y() += u(rng);
  return s;
}

EeTarget PegScript::sample(double t) const {
  EeTarget out;
  if (waypoints.empty()) return out;
  if (t <= waypoints.front().t) {
    out.p_ref = waypoints.front().p;
    out.gripper = waypoints.front().gripper;
    return out;
  }
  if (t >= waypoints.back().t) {
    out.p_ref = waypoints.back().p;
    out.gripper = waypoints.back().gripper;
    return out;
  }
  std::size_t i = 0;
  while (waypoints[i + 1].t <= t) ++i;
  const PegWaypoint& a = waypoints[i];
  const PegWaypoint& b = waypoints[i + 1];
  const double span = b.t - a.t;
  const double s = (t - a.t) / span;
  const double h = s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
  const double dh = 30.0 * s * s * (1.0 - s) * (1.0 - s) / span;
  out.p_ref = a.p + h * (b.p - a.p);
  out.v_ref.head<3>() = dh * (b.p - a.p);
  out.gripper = a.gripper + h * (b.gripper - a.gripper);
  return out;
}

std::string PegScript::phase_at(double t) const {
  for (std::size_t i = 1; i < waypoints.size(); ++i) {
    if (t < waypoints[i].t) return waypoints[i].phase;
  }
  return waypoints.empty() ? "" : waypoints.back().phase;
}

PegScript scripted_peg_in_hole(const PegScene& scene, const PegSettings& s, const TeleopSettings& teleop) {
  PegScript script;
  const Vec3 lift(0.0, 0.0, s.peg_length);
  const Vec3 above = scene.hole + lift + Vec3(0.0, 0.0, s.standoff);
  const Vec3 inserted = scene.hole + lift - Vec3(0.0, 0.0, s.insert_depth);

  auto& w = script.waypoints;
  double t = 0.0;
  w.push_back({t, s.home, 0.0, "hold"});
  t += 0.5;
  w.push_back({t, s.home, 0.0, "hold"});
  t += segment_time(s.home, above, s.approach_speed, 1.0);
  w.push_back({t, above, 0.0, "approach"});
  t += s.dwell;
  w.push_back({t, above, 0.0, "align"});
  t += segment_time(above, inserted, s.insert_speed, 1.0);
  w.push_back({t, inserted, 0.0, "insert"});
  t += 0.5;
  w.push_back({t, inserted, 0.0, "settle"});
  script.release_time = t;
  t += 0.5;
  w.push_back({t, inserted, 1.0, "release"});
  t += segment_time(inserted, above, s.approach_speed, 1.0);
  w.push_back({t, above, 1.0, "retreat"});

  for (const PegWaypoint& p : w) {
    if (!inside(p.p, teleop)) {
      script.reachable = false;
      script.failure = "waypoint '" + p.phase + "' outside the workspace";
      break;
    }
  }
  return script;
}

PegContact peg_contact(const Transform& ee, const PegScene& scene, const PegSettings& settings) {
  const Vec3 axis = ee.rotation * Vec3(0.0, 0.0, -1.0);
  const Vec3 tip = ee.translation + settings.peg_length * axis;
  PegContact c;
  c.depth = scene.hole.z() - tip.z();
  c.tip_lateral = (tip - scene.hole).head<2>().norm();
  c.mouth_lateral = c.tip_lateral;
  if (c.depth > 0.0 && axis.z() < 0.0) {
    const double along = (ee.translation.z() - scene.hole.z()) / -axis.z();
    if (along >= 0.0 && along <= settings.peg_length) {
      c.mouth_lateral = (ee.translation + along * axis - scene.hole).head<2>().norm();
    }
  }
  return c;
}

PegOutcome run_peg_episode(const AppConfig& app, const LoopConfig& loop, std::uint64_t seed,
                           ControllerKind controller) {
  return run_peg_scene(app, loop, make_peg_scene(app.peg, seed), controller);
}

PegOutcome run_peg_scene(const AppConfig& app, const LoopConfig& loop, const PegScene& scene,
                         ControllerKind controller) {
  const std::uint64_t seed = scene.seed;
  PegOutcome out;
  out.scene = scene;
  const PegScript script = scripted_peg_in_hole(out.scene, app.peg, app.teleop);
  if (!script.reachable) {
    out.unreachable = true;
    out.reason = "unreachable: " + script.failure;
    return out;
  }

  const MpcState initial = hover_state_for_ee(script.sample(0.0), loop.mpc.theta_ref, loop.nominal);
  EpisodeHeader header;
  header.task = "peg_in_hole";
  header.seed = seed;
  header.source_rate = loop.mpc.control_rate;
  header.rate = app.teleop.record_rate;
  header.chunk_size = app.teleop.chunk_size;
  header.controller = controller;
  header.profile = app.profile;
  header.config_hash = fnv1a_hex(emit_config(app));
  header.initial = initial;
  EpisodeRecorder recorder(header);

  ClosedLoop cl(controller, loop, initial, seed);
  const TargetFn target = held_stream([&script](double t) { return script.sample(t); }, cl);
  const double clearance = 0.5 * (app.peg.hole_diameter - app.peg.peg_diameter);
  const int cycles = static_cast<int>(std::lround(script.duration() * loop.mpc.control_rate)) + 1;
  bool judged = false;
  try {
    for (int k = 0; k < cycles; ++k) {
      const TraceRow row = cl.step(target);
      recorder.add(row, script.sample(row.t));
      out.run.rows.push_back(row);
      if (judged) continue;
      const PegContact c = peg_contact(Transform{from_wxyz(row.ee_quat), row.ee}, out.scene, app.peg);
      if (c.depth > 0.0 && std::max(c.tip_lateral, c.mouth_lateral) > clearance) {
        out.jammed = true;
        out.reason = "jammed at the mouth in phase '" + script.phase_at(row.t) + "'";
        out.depth = c.depth;
        out.lateral = c.tip_lateral;
        judged = true;
        break;
      }
      if (row.t >= script.release_time - 1e-9) {
        out.depth = c.depth;
        out.lateral = c.tip_lateral;
        out.success = c.depth >= app.peg.success_depth;
        if (!out.success) out.reason = "too shallow at release";
        judged = true;
      }
    }
  } catch (const PlantBlowUp& e) {
    out.run_failed = true;
    out.success = false;
    out.reason = std::string("plant blow-up: ") + e.what();
  }
  summarize(out.run);
  out.episode = recorder.finish();
  return out;
}

}  // namespace uam
