#include "uam/teleop_protocol.hpp"

#include <cmath>
#include <set>

#include <json.hpp>

namespace uam {

using nlohmann::json;

std::string to_string(CommandType type) {
  switch (type) {
    case CommandType::kEeDelta: return "ee_delta";
    case CommandType::kEeAbsolute: return "ee_absolute";
    case CommandType::kGripper: return "gripper";
    case CommandType::kPause: return "pause";
    case CommandType::kReset: return "reset";
  }
  return "?";
}

namespace {

template <int N>
Eigen::Matrix<double, N, 1> read_vec(const json& j, const char* key, std::uint64_t seq) {
  const json& v = j.at(key);
  if (!v.is_array() || v.size() != N) {
    throw ProtocolError("malformed", std::string(key) + ": expected " + std::to_string(N) + " numbers", seq);
  }
  Eigen::Matrix<double, N, 1> out;
  for (int i = 0; i < N; ++i) {
    if (!v[i].is_number()) throw ProtocolError("malformed", std::string(key) + ": expected numbers", seq);
    out(i) = v[i].get<double>();
  }
  if (!out.allFinite()) throw ProtocolError("malformed", std::string(key) + ": not finite", seq);
  return out;
}

template <typename Derived>
json to_array(const Eigen::MatrixBase<Derived>& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Vec4 unit(const Vec4& q) { return q / q.norm(); }

json pose_json(const Vec3& p, const Vec4& q) { return {{"p", to_array(p)}, {"q", to_array(unit(q))}}; }

}  // namespace

CommandMsg parse_command(const std::string& text, const TeleopSettings& settings) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ProtocolError("malformed", std::string("not JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) {
    throw ProtocolError("malformed", "expected an object with a string 'type'");
  }
  CommandMsg m;
  if (!j.contains("seq") || !j["seq"].is_number_unsigned() || j["seq"].get<std::uint64_t>() == 0) {
    throw ProtocolError("malformed", "seq: expected a positive integer");
  }
  m.seq = j["seq"].get<std::uint64_t>();

  const std::string type = j["type"];
  std::set<std::string> allowed{"type", "seq"};
  try {
    if (type == "ee_delta") {
      m.type = CommandType::kEeDelta;
      allowed.insert({"dp", "drot"});
      if (j.contains("dp")) m.dp = read_vec<3>(j, "dp", m.seq);
      if (j.contains("drot")) m.drot = read_vec<3>(j, "drot", m.seq);
      if (m.dp.norm() > settings.max_dp * (1.0 + 1e-12)) {
        throw ProtocolError("cap_exceeded", "dp exceeds the per-message cap", m.seq);
      }
      if (m.drot.norm() > settings.max_drot * (1.0 + 1e-12)) {
        throw ProtocolError("cap_exceeded", "drot exceeds the per-message cap", m.seq);
      }
    } else if (type == "ee_absolute") {
      m.type = CommandType::kEeAbsolute;
      allowed.insert({"p", "q"});
      m.p = read_vec<3>(j, "p", m.seq);
      m.q = read_vec<4>(j, "q", m.seq);
      if (std::abs(m.q.norm() - 1.0) > 1e-3) throw ProtocolError("malformed", "q: not a unit quaternion", m.seq);
      m.q = unit(m.q);
    } else if (type == "gripper") {
      m.type = CommandType::kGripper;
      allowed.insert("gripper");
      if (!j.at("gripper").is_number()) throw ProtocolError("malformed", "gripper: expected a number", m.seq);
      m.gripper = j["gripper"].get<double>();
      if (!(m.gripper >= 0.0 && m.gripper <= 1.0)) {
        throw ProtocolError("malformed", "gripper: expected a value in [0, 1]", m.seq);
      }
    } else if (type == "pause") {
      m.type = CommandType::kPause;
      allowed.insert("paused");
      if (j.contains("paused")) {
        if (!j["paused"].is_boolean()) throw ProtocolError("malformed", "paused: expected a boolean", m.seq);
        m.paused = j["paused"].get<bool>();
      }
    } else if (type == "reset") {
      m.type = CommandType::kReset;
    } else {
      throw ProtocolError("malformed", "unknown command type '" + type + "'", m.seq);
    }
  } catch (const json::exception& e) {
    throw ProtocolError("malformed", std::string("missing field: ") + e.what(), m.seq);
  }
  for (const auto& item : j.items()) {
    if (!allowed.count(item.key())) throw ProtocolError("malformed", "unknown field '" + item.key() + "'", m.seq);
  }
  return m;
}

std::string encode_command(const CommandMsg& m) {
  json j{{"type", to_string(m.type)}, {"seq", m.seq}};
  switch (m.type) {
    case CommandType::kEeDelta:
      j["dp"] = to_array(m.dp);
      j["drot"] = to_array(m.drot);
      break;
    case CommandType::kEeAbsolute:
      j["p"] = to_array(m.p);
      j["q"] = to_array(m.q);
      break;
    case CommandType::kGripper: j["gripper"] = m.gripper; break;
    case CommandType::kPause: j["paused"] = m.paused; break;
    case CommandType::kReset: break;
  }
  return j.dump();
}

EeTarget apply_command(const EeTarget& current, const CommandMsg& msg, const TeleopSettings& settings,
                       bool* clamped) {
  EeTarget next = current;
  next.v_ref.setZero();
  switch (msg.type) {
    case CommandType::kEeDelta:
      next.p_ref += msg.dp;
      next.R_ref = orthonormalize(exp_so3(msg.drot) * current.R_ref);
      break;
    case CommandType::kEeAbsolute:
      next.p_ref = msg.p;
      next.R_ref = from_wxyz(msg.q);
      break;
    case CommandType::kGripper: next.gripper = msg.gripper; break;
    case CommandType::kPause:
    case CommandType::kReset: break;
  }
  const Vec3 bounded = next.p_ref.cwiseMax(settings.workspace_lo).cwiseMin(settings.workspace_hi);
  if (clamped) *clamped = bounded != next.p_ref;
  next.p_ref = bounded;
  return next;
}

CommandIntake::CommandIntake(const EeTarget& home, TeleopSettings settings)
    : home_(home), target_(home), settings_(std::move(settings)) {
  home_.v_ref.setZero();
  target_ = home_;
}

CommandIntake::Outcome CommandIntake::apply(const CommandMsg& msg) {
  Outcome out;
  if (msg.seq <= last_seq_) {
    out.stale = true;
    return out;
  }
  last_seq_ = msg.seq;
  switch (msg.type) {
    case CommandType::kPause:
      paused_ = msg.paused;
      out.applied = true;
      return out;
    case CommandType::kReset:
      target_ = home_;
      paused_ = false;
      out.applied = true;
      return out;
    default:
      break;
  }
  if (paused_) return out;
  target_ = apply_command(target_, msg, settings_, &out.clamped);
  out.applied = true;
  return out;
}

std::string encode_telemetry(const TelemetryFrame& f) {
  json j{{"type", "telemetry"},
         {"t", f.t},
         {"ee", pose_json(f.ee_p, f.ee_q)},
         {"base", pose_json(f.base_p, f.base_q)},
         {"theta", to_array(f.theta)},
         {"target", pose_json(f.target_p, f.target_q)},
         {"tau_ext", to_array(f.tau_ext)},
         {"status", f.status},
         {"last_seq", f.last_seq}};
  j["target"]["gripper"] = f.gripper;
  return j.dump();
}

TelemetryFrame decode_telemetry(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.at("type") != "telemetry") throw ProtocolError("malformed", "not a telemetry frame");
    TelemetryFrame f;
    f.t = j.at("t").get<double>();
    f.ee_p = read_vec<3>(j.at("ee"), "p", 0);
    f.ee_q = read_vec<4>(j.at("ee"), "q", 0);
    f.base_p = read_vec<3>(j.at("base"), "p", 0);
    f.base_q = read_vec<4>(j.at("base"), "q", 0);
    f.theta = read_vec<4>(j, "theta", 0);
    f.target_p = read_vec<3>(j.at("target"), "p", 0);
    f.target_q = read_vec<4>(j.at("target"), "q", 0);
    f.gripper = j.at("target").at("gripper").get<double>();
    f.tau_ext = read_vec<6>(j, "tau_ext", 0);
    f.status = j.at("status").get<std::string>();
    f.last_seq = j.at("last_seq").get<std::uint64_t>();
    return f;
  } catch (const json::exception& e) {
    throw ProtocolError("malformed", e.what());
  }
}

std::string encode_hello(const std::string& role, const ArmParams& arm, const TeleopSettings& settings,
                         double control_rate) {
  json dh = json::array();
  for (const auto& jt : arm.joints) dh.push_back({jt.theta_offset, jt.d, jt.a, jt.alpha});
  json j{{"type", "hello"},
         {"schema_version", kProtocolSchemaVersion},
         {"role", role},
         {"dh", dh},
         {"mount", pose_json(arm.mount.translation, to_wxyz(arm.mount.rotation))},
         {"rates", {{"telemetry", settings.telemetry_rate}, {"control", control_rate}}},
         {"caps", {{"max_dp", settings.max_dp}, {"max_drot", settings.max_drot}}},
         {"workspace", {{"lo", to_array(settings.workspace_lo)}, {"hi", to_array(settings.workspace_hi)}}},
         {"lease_timeout", settings.lease_timeout}};
  return j.dump();
}

std::string encode_error(const std::string& code, const std::string& message, std::uint64_t seq) {
  json j{{"type", "error"}, {"code", code}, {"message", message}};
  if (seq) j["seq"] = seq;
  return j.dump();
}

std::string encode_ack(std::uint64_t seq, bool applied, bool clamped) {
  return json{{"type", "ack"}, {"seq", seq}, {"applied", applied}, {"clamped", clamped}}.dump();
}

std::string encode_role(const std::string& role) { return json{{"type", "role"}, {"role", role}}.dump(); }

bool is_heartbeat(const std::string& text) {
  const json j = json::parse(text, nullptr, false);
  return j.is_object() && j.size() == 1 && j.contains("type") && j["type"] == "heartbeat";
}

std::string encode_heartbeat() { return json{{"type", "heartbeat"}}.dump(); }

}  // namespace uam
