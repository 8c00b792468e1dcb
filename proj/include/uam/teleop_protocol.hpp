#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "uam/config.hpp"

namespace uam {

inline constexpr int kProtocolSchemaVersion = 1;

class ProtocolError : public std::runtime_error {
 public:
  ProtocolError(const std::string& code, const std::string& what, std::uint64_t seq = 0)
      : std::runtime_error(what), code(code), seq(seq) {}
  std::string code;
  std::uint64_t seq;
};

enum class CommandType { kEeDelta, kEeAbsolute, kGripper, kPause, kReset };

std::string to_string(CommandType type);

struct CommandMsg {
  std::uint64_t seq = 0;
  CommandType type = CommandType::kEeDelta;
  Vec3 dp = Vec3::Zero();    // m, world frame
  Vec3 drot = Vec3::Zero();  // rad, rotation vector applied on the left
  Vec3 p = Vec3::Zero();     // ee_absolute only
  Vec4 q = Vec4(1, 0, 0, 0); // ee_absolute only, wxyz
  double gripper = 0.0;      // [0, 1]
  bool paused = true;        // pause only
};

/// Decodes one command object ("type" names the command). Throws ProtocolError with code
/// "malformed" or "cap_exceeded".
CommandMsg parse_command(const std::string& text, const TeleopSettings& settings);
std::string encode_command(const CommandMsg& msg);

/// Pure target update: deltas compose (p + dp, exp(drot) R), absolute poses
/// replace, the result is clamped to the workspace box.
EeTarget apply_command(const EeTarget& current, const CommandMsg& msg, const TeleopSettings& settings,
                       bool* clamped = nullptr);

/// Sequence-aware command state: ids at or below the last applied one are
/// ignored, so duplicates and reordered stale messages never move the target.
class CommandIntake {
 public:
  CommandIntake(const EeTarget& home, TeleopSettings settings);

  struct Outcome {
    bool applied = false;
    bool stale = false;
    bool clamped = false;
  };

  Outcome apply(const CommandMsg& msg);

  const EeTarget& target() const { return target_; }
  bool paused() const { return paused_; }
  std::uint64_t last_seq() const { return last_seq_; }
  /// Restarts sequence numbering (new commanding client).
  void reset_sequence() { last_seq_ = 0; }

 private:
  EeTarget home_;
  EeTarget target_;
  TeleopSettings settings_;
  std::uint64_t last_seq_ = 0;
  bool paused_ = false;
};

struct TelemetryFrame {
  double t = 0.0;
  Vec3 ee_p = Vec3::Zero();
  Vec4 ee_q = Vec4(1, 0, 0, 0);
  Vec3 base_p = Vec3::Zero();
  Vec4 base_q = Vec4(1, 0, 0, 0);
  Vec4 theta = Vec4::Zero();
  Vec3 target_p = Vec3::Zero();
  Vec4 target_q = Vec4(1, 0, 0, 0);
  double gripper = 0.0;
  Vec6 tau_ext = Vec6::Zero();  // L1 wrench estimate, body frame
  std::string status = "ok";    // ok | degraded | paused | failed
  std::uint64_t last_seq = 0;
};

std::string encode_telemetry(const TelemetryFrame& frame);
TelemetryFrame decode_telemetry(const std::string& text);

/// Server greeting: schema version, the client's role and the kinematic
/// constants a viewer needs to mirror forward kinematics.
std::string encode_hello(const std::string& role, const ArmParams& arm, const TeleopSettings& settings,
                         double control_rate);
std::string encode_error(const std::string& code, const std::string& message, std::uint64_t seq = 0);
std::string encode_ack(std::uint64_t seq, bool applied, bool clamped);
/// Sent when a client gains or loses the commanding lease.
std::string encode_role(const std::string& role);
/// {"type": "heartbeat"} keeps the lease alive without a command.
bool is_heartbeat(const std::string& text);
std::string encode_heartbeat();

}  // namespace uam
