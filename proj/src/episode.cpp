#include "uam/episode.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include <Eigen/Geometry>
#include <json.hpp>

namespace uam {

using nlohmann::json;

namespace {

template <typename Derived>
json to_array(const Eigen::MatrixBase<Derived>& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

template <int N>
Eigen::Matrix<double, N, 1> from_array(const json& a) {
  if (!a.is_array() || a.size() != N) throw EpisodeError("expected " + std::to_string(N) + " numbers");
  Eigen::Matrix<double, N, 1> out;
  for (int i = 0; i < N; ++i) out(i) = a[i].get<double>();
  return out;
}

json header_json(const EpisodeHeader& h) {
  Eigen::Matrix<double, 9, 1> r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(3 * i + j) = h.initial.base.R(i, j);
  return {{"type", "header"},
          {"schema_version", h.schema_version},
          {"task", h.task},
          {"seed", h.seed},
          {"source_rate", h.source_rate},
          {"rate", h.rate},
          {"chunk_size", h.chunk_size},
          {"controller", to_string(h.controller)},
          {"profile", h.profile},
          {"config_hash", h.config_hash},
          {"initial",
           {{"p", to_array(h.initial.base.p)},
            {"R", to_array(r)},
            {"v", to_array(h.initial.base.v)},
            {"theta", to_array(h.initial.theta)}}},
          {"observation", {"images.base", "images.ee", "p", "q"}},
          {"action", {"p", "q", "gripper"}}};
}

EpisodeHeader parse_header(const json& j) {
  if (j.value("type", "") != "header") throw EpisodeError("first line is not a header");
  EpisodeHeader h;
  h.schema_version = j.at("schema_version").get<int>();
  if (h.schema_version != kEpisodeSchemaVersion) {
    throw EpisodeError("episode schema_version " + std::to_string(h.schema_version) + " does not match " +
                       std::to_string(kEpisodeSchemaVersion));
  }
  h.task = j.at("task").get<std::string>();
  h.seed = j.at("seed").get<std::uint64_t>();
  h.source_rate = j.at("source_rate").get<double>();
  h.rate = j.at("rate").get<double>();
  h.chunk_size = j.at("chunk_size").get<int>();
  h.controller = parse_controller_kind(j.at("controller").get<std::string>());
  h.profile = j.at("profile").get<std::string>();
  h.config_hash = j.at("config_hash").get<std::string>();
  const json& init = j.at("initial");
  h.initial.base.p = from_array<3>(init.at("p"));
  const auto r = from_array<9>(init.at("R"));
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) h.initial.base.R(i, k) = r(3 * i + k);
  h.initial.base.v = from_array<6>(init.at("v"));
  h.initial.theta = from_array<4>(init.at("theta"));
  return h;
}

json row_json(const EpisodeRow& r) {
  return {{"t", r.t},
          {"obs", {{"images", {{"base", nullptr}, {"ee", nullptr}}}, {"p", to_array(r.obs_p)}, {"q", to_array(r.obs_q)}}},
          {"action", {{"p", to_array(r.act_p)}, {"q", to_array(r.act_q)}, {"gripper", r.gripper}}}};
}

EpisodeRow parse_row(const json& j) {
  EpisodeRow r;
  r.t = j.at("t").get<double>();
  r.obs_p = from_array<3>(j.at("obs").at("p"));
  r.obs_q = from_array<4>(j.at("obs").at("q"));
  r.act_p = from_array<3>(j.at("action").at("p"));
  r.act_q = from_array<4>(j.at("action").at("q"));
  r.gripper = j.at("action").at("gripper").get<double>();
  return r;
}

Eigen::Quaterniond quat(const Vec4& wxyz) { return Eigen::Quaterniond(wxyz(0), wxyz(1), wxyz(2), wxyz(3)); }

}  // namespace

void Episode::validate(const TeleopSettings& settings) const {
  if (!(header.rate > 0.0)) throw EpisodeError("episode rate must be positive");
  const double dt = 1.0 / header.rate;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const EpisodeRow& r = rows[i];
    if (i > 0 && std::abs(r.t - rows[i - 1].t - dt) > 1e-6) {
      throw EpisodeError("row " + std::to_string(i) + ": timestamps not uniform at the declared rate");
    }
    if (std::abs(r.obs_q.norm() - 1.0) > 1e-6 || std::abs(r.act_q.norm() - 1.0) > 1e-6) {
      throw EpisodeError("row " + std::to_string(i) + ": quaternion not normalized");
    }
    const double slack = 1e-9;
    if ((r.act_p.array() < settings.workspace_lo.array() - slack).any() ||
        (r.act_p.array() > settings.workspace_hi.array() + slack).any()) {
      throw EpisodeError("row " + std::to_string(i) + ": action outside the workspace");
    }
  }
}

std::vector<EpisodeRow> decimate(const std::vector<EpisodeRow>& rows, double source_rate, double rate) {
  if (!(source_rate > 0.0) || !(rate > 0.0)) throw std::invalid_argument("decimate: rates must be positive");
  const double ratio = source_rate / rate;
  const long step = std::lround(ratio);
  if (step < 1 || std::abs(ratio - static_cast<double>(step)) > 1e-9) {
    throw std::invalid_argument("decimate: source rate must be an integer multiple of the target rate");
  }
  std::vector<EpisodeRow> out;
  out.reserve(rows.size() / step + 1);
  for (std::size_t i = 0; i < rows.size(); i += static_cast<std::size_t>(step)) out.push_back(rows[i]);
  return out;
}

EpisodeRecorder::EpisodeRecorder(EpisodeHeader header) : header_(std::move(header)) {}

void EpisodeRecorder::add(const TraceRow& row, const EeTarget& action) {
  EpisodeRow r;
  r.t = row.t;
  r.obs_p = row.ee_measured;
  r.obs_q = row.ee_measured_quat;
  r.act_p = action.p_ref;
  r.act_q = to_wxyz(action.R_ref);
  r.gripper = action.gripper;
  rows_.push_back(r);
}

Episode EpisodeRecorder::finish() const {
  Episode e;
  e.header = header_;
  e.rows = decimate(rows_, header_.source_rate, header_.rate);
  // Pin timestamps to the declared grid; plant time accumulates rounding.
  if (!e.rows.empty()) {
    const double t0 = e.rows.front().t;
    for (std::size_t i = 0; i < e.rows.size(); ++i) e.rows[i].t = t0 + static_cast<double>(i) / header_.rate;
  }
  return e;
}

void save_episode(const std::string& path, const Episode& episode) {
  std::ofstream out(path);
  if (!out) throw EpisodeError("cannot write " + path);
  out << header_json(episode.header).dump() << '\n';
  for (const EpisodeRow& r : episode.rows) out << row_json(r).dump() << '\n';
  if (!out) throw EpisodeError("write failed for " + path);
}

Episode load_episode(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw EpisodeError("cannot open " + path);
  Episode e;
  std::string line;
  int lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      if (!have_header) {
        e.header = parse_header(j);
        have_header = true;
      } else {
        e.rows.push_back(parse_row(j));
      }
    } catch (const json::exception& ex) {
      throw EpisodeError(path + ":" + std::to_string(lineno) + ": " + ex.what());
    } catch (const EpisodeError& ex) {
      throw EpisodeError(path + ":" + std::to_string(lineno) + ": " + ex.what());
    } catch (const std::invalid_argument& ex) {
      throw EpisodeError(path + ":" + std::to_string(lineno) + ": " + ex.what());
    }
  }
  if (!have_header) throw EpisodeError(path + ": missing header");
  return e;
}

EeTarget episode_action(const Episode& episode, double t) {
  if (episode.rows.empty()) throw EpisodeError("episode has no rows");
  const auto& rows = episode.rows;
  EeTarget out;
  if (t <= rows.front().t || rows.size() == 1) {
    out.p_ref = rows.front().act_p;
    out.R_ref = from_wxyz(rows.front().act_q);
    out.gripper = rows.front().gripper;
    return out;
  }
  if (t >= rows.back().t) {
    out.p_ref = rows.back().act_p;
    out.R_ref = from_wxyz(rows.back().act_q);
    out.gripper = rows.back().gripper;
    return out;
  }
  const double dt = 1.0 / episode.header.rate;
  std::size_t i = static_cast<std::size_t>(std::floor((t - rows.front().t) / dt));
  i = std::min(i, rows.size() - 2);
  const EpisodeRow& a = rows[i];
  const EpisodeRow& b = rows[i + 1];
  const double f = std::clamp((t - a.t) / (b.t - a.t), 0.0, 1.0);
  out.p_ref = a.act_p + f * (b.act_p - a.act_p);
  out.R_ref = quat(a.act_q).slerp(f, quat(b.act_q)).toRotationMatrix();
  out.v_ref.head<3>() = (b.act_p - a.act_p) / (b.t - a.t);
  out.gripper = a.gripper + f * (b.gripper - a.gripper);
  return out;
}

TargetFn held_stream(TargetFn source, const ClosedLoop& loop) {
  return [source = std::move(source), &loop](double t) { return source(std::min(t, loop.time())); };
}

ReplayResult replay_episode(const Episode& episode, const LoopConfig& config) {
  if (episode.header.schema_version != kEpisodeSchemaVersion) throw EpisodeError("schema_version mismatch");
  ReplayResult out;
  if (episode.rows.empty()) return out;
  const double t0 = episode.rows.front().t;
  ClosedLoop loop(episode.header.controller, config, episode.header.initial, episode.header.seed);
  const TargetFn target = held_stream([&](double t) { return episode_action(episode, t + t0); }, loop);
  const double rate = config.mpc.control_rate;
  const int cycles = static_cast<int>(std::lround((episode.rows.back().t - t0) * rate)) + 1;
  try {
    for (int k = 0; k < cycles; ++k) out.run.rows.push_back(loop.step(target));
  } catch (const PlantBlowUp& e) {
    out.run.failed = true;
    out.run.failure = e.what();
  }
  summarize(out.run);

  double sum = 0.0;
  std::size_t n = 0;
  for (const EpisodeRow& r : episode.rows) {
    const long k = std::lround((r.t - t0) * rate);
    if (k < 0 || k >= static_cast<long>(out.run.rows.size())) continue;
    sum += (out.run.rows[k].ee_measured - r.obs_p).squaredNorm();
    ++n;
  }
  if (n < episode.rows.size()) {
    out.deviation_cm = std::numeric_limits<double>::infinity();
  } else {
    out.deviation_cm = 100.0 * std::sqrt(sum / static_cast<double>(n));
  }
  return out;
}

}  // namespace uam
