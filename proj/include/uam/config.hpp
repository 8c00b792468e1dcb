#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>

#include "uam/closed_loop.hpp"

namespace uam {

inline constexpr int kConfigSchemaVersion = 1;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Plant-side departures from the nominal model, selected by name.
struct DisturbanceProfile {
  Mismatch mismatch;
  Wrench wrench_bias;
  double coupling_scale = 0.0;  // multiple of DisturbanceConfig::default_coupling()
  double backlash = 0.0;
  Vec4 servo_bias = Vec4::Zero();
  GroundEffect ground_effect;
  NoiseConfig noise;

  void apply(PlantConfig& plant) const;
};

DisturbanceProfile nominal_profile();
/// Mass/inertia/servo mismatch, backlash, arm coupling, servo and wrench
/// bias and mocap-grade measurement noise.
DisturbanceProfile default_profile();

struct BenchSettings {
  int repeats = 3;
  std::uint64_t seed = 1;
  double duration = 60.0;
  std::string output = "runs";
};

struct TeleopSettings {
  int port = 8765;
  double telemetry_rate = 30.0;
  double lease_timeout = 2.0;
  double record_rate = 10.0;
  int chunk_size = 100;
  double max_dp = 0.05;
  double max_drot = 0.1;
  Vec3 workspace_lo = Vec3(-1.0, -1.0, 0.5);
  Vec3 workspace_hi = Vec3(1.0, 1.0, 2.2);

  void validate() const;
};

struct PegSettings {
  /// Centre of the hole mouth.
  Vec3 hole = Vec3(0.0, 0.0, 1.5);
  /// Half-width of the uniform horizontal randomization square.
  double horizontal_range = 0.3;
  double hole_diameter = 0.05;
  double peg_diameter = 0.02;
  /// Peg tip sits this far along -z of the EE frame.
  double peg_length = 0.10;
  double standoff = 0.10;
  double insert_depth = 0.04;
  double success_depth = 0.03;
  double approach_speed = 0.15;
  double insert_speed = 0.04;
  double dwell = 1.0;
  Vec3 home = Vec3(0.0, -0.3, 1.8);

  void validate() const;
};

struct AppConfig {
  LoopConfig loop;
  std::map<std::string, DisturbanceProfile> profiles;
  std::string profile = "default";
  BenchSettings bench;
  TeleopSettings teleop;
  PegSettings peg;

  /// Built-in defaults: both named profiles, "default" selected.
  static AppConfig defaults();

  /// Loop config with the named profile applied to the plant.
  LoopConfig loop_for(const std::string& profile_name) const;
  LoopConfig resolved_loop() const { return loop_for(profile); }

  void validate() const;
};

/// Keys absent from the document keep their defaults; unknown keys, a
/// missing or different schema_version and invalid values throw ConfigError.
AppConfig parse_config(const std::string& yaml_text);
AppConfig load_config(const std::string& path);
std::string emit_config(const AppConfig& config);

/// 64-bit FNV-1a, hex encoded.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace uam
