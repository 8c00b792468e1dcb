#include "uam/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace uam {

void DisturbanceProfile::apply(PlantConfig& plant) const {
  plant.mismatch = mismatch;
  plant.disturbance.wrench_bias = wrench_bias;
  plant.disturbance.coupling = coupling_scale * DisturbanceConfig::default_coupling();
  plant.disturbance.backlash = backlash;
  plant.disturbance.servo_bias = servo_bias;
  plant.disturbance.ground_effect = ground_effect;
  plant.noise = noise;
}

DisturbanceProfile nominal_profile() { return {}; }

DisturbanceProfile default_profile() {
  DisturbanceProfile p;
  p.mismatch = {0.10, 0.05, 0.15};
  p.wrench_bias = Wrench::FromVector((Vec6() << 0.05, 0.0, -0.05, 0.0, 0.01, 0.0).finished());
  p.coupling_scale = 1.0;
  p.backlash = 0.5 * M_PI / 180.0;
  p.servo_bias = Vec4(0.03, -0.03, 0.02, 0.0);
  p.noise.position = 0.001;
  p.noise.rotation = 0.002;
  p.noise.velocity = 0.005;
  p.noise.angular_velocity = 0.01;
  p.noise.joint = 0.001;
  return p;
}

void TeleopSettings::validate() const {
  if (port < 0 || port > 65535) throw std::invalid_argument("teleop: port out of range");
  if (!(telemetry_rate > 0.0) || !(record_rate > 0.0)) {
    throw std::invalid_argument("teleop: rates must be positive");
  }
  if (!(lease_timeout > 0.0)) throw std::invalid_argument("teleop: lease_timeout must be positive");
  if (chunk_size < 1) throw std::invalid_argument("teleop: chunk_size must be >= 1");
  if (!(max_dp > 0.0) || !(max_drot > 0.0)) throw std::invalid_argument("teleop: caps must be positive");
  if (!(workspace_lo.array() < workspace_hi.array()).all()) {
    throw std::invalid_argument("teleop: workspace_lo must be below workspace_hi");
  }
}

void PegSettings::validate() const {
  if (!(peg_diameter > 0.0) || !(hole_diameter > peg_diameter)) {
    throw std::invalid_argument("peg: hole must be wider than the peg");
  }
  if (!(horizontal_range >= 0.0)) throw std::invalid_argument("peg: horizontal_range must be >= 0");
  if (!(peg_length > 0.0) || !(standoff > 0.0)) throw std::invalid_argument("peg: lengths must be positive");
  if (!(success_depth > 0.0) || insert_depth < success_depth) {
    throw std::invalid_argument("peg: insert_depth must reach success_depth");
  }
  if (!(approach_speed > 0.0) || !(insert_speed > 0.0) || dwell < 0.0) {
    throw std::invalid_argument("peg: speeds must be positive");
  }
}

AppConfig AppConfig::defaults() {
  AppConfig c;
  c.profiles["nominal"] = nominal_profile();
  c.profiles["default"] = default_profile();
  return c;
}

LoopConfig AppConfig::loop_for(const std::string& profile_name) const {
  const auto it = profiles.find(profile_name);
  if (it == profiles.end()) throw ConfigError("unknown disturbance profile '" + profile_name + "'");
  LoopConfig out = loop;
  it->second.apply(out.plant);
  return out;
}

void AppConfig::validate() const {
  try {
    resolved_loop().validate();
    for (const auto& [name, p] : profiles) loop_for(name).validate();
    if (bench.repeats < 1) throw std::invalid_argument("bench: repeats must be >= 1");
    if (!(bench.duration > 0.0)) throw std::invalid_argument("bench: duration must be positive");
    teleop.validate();
    peg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

namespace {

// Reads keys out of one mapping and remembers which ones were used.
class Section {
 public:
  Section(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path)) {
    if (node_ && !node_.IsNull() && !node_.IsMap()) throw ConfigError(path_ + ": expected a mapping");
  }

  bool has(const std::string& key) const { return node_ && node_.IsMap() && node_[key]; }

  template <typename T>
  void get(const std::string& key, T& out) {
    if (!has(key)) return;
    used_.insert(key);
    try {
      out = node_[key].as<T>();
    } catch (const YAML::Exception&) {
      throw ConfigError(where(key) + ": bad value");
    }
  }

  template <int N>
  void get(const std::string& key, Eigen::Matrix<double, N, 1>& out) {
    if (!has(key)) return;
    used_.insert(key);
    const YAML::Node v = node_[key];
    if (!v.IsSequence() || static_cast<int>(v.size()) != N) {
      throw ConfigError(where(key) + ": expected " + std::to_string(N) + " numbers");
    }
    try {
      for (int i = 0; i < N; ++i) out(i) = v[i].as<double>();
    } catch (const YAML::Exception&) {
      throw ConfigError(where(key) + ": bad value");
    }
  }

  void get(const std::string& key, Wrench& out) {
    Vec6 w = out.vector();
    get(key, w);
    out = Wrench::FromVector(w);
  }

  Section child(const std::string& key) {
    if (!has(key)) return Section(YAML::Node(), where(key));
    used_.insert(key);
    return Section(node_[key], where(key));
  }

  YAML::Node raw(const std::string& key) {
    used_.insert(key);
    return node_[key];
  }

  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    if (!node_ || !node_.IsMap()) return;
    for (const auto& kv : node_) {
      const std::string key = kv.first.as<std::string>();
      if (!used_.count(key)) throw ConfigError(where(key) + ": unknown key");
    }
  }

 private:
  YAML::Node node_;
  std::string path_;
  std::set<std::string> used_;
};

std::string solver_mode_name(SolverMode m) { return m == SolverMode::kFullConverge ? "full" : "rti"; }

SolverMode parse_solver_mode(const std::string& s, const std::string& where) {
  if (s == "full") return SolverMode::kFullConverge;
  if (s == "rti") return SolverMode::kRealTimeIteration;
  throw ConfigError(where + ": expected 'rti' or 'full'");
}

void read_model(Section s, UamParams& m) {
  s.get("mass_diag", m.uav.mass_diag);
  s.get("gravity", m.uav.gravity);
  s.get("max_speed", m.uav.max_speed);
  Section arm = s.child("arm");
  if (arm.has("dh")) {
    const std::string where = arm.where("dh");
    const YAML::Node dh = arm.raw("dh");
    if (!dh.IsSequence() || dh.size() != 4) throw ConfigError(where + ": expected 4 rows");
    for (int i = 0; i < 4; ++i) {
      if (!dh[i].IsSequence() || dh[i].size() != 4) {
        throw ConfigError(where + ": rows are [theta_offset, d, a, alpha]");
      }
      auto& j = m.arm.joints[i];
      j.theta_offset = dh[i][0].as<double>();
      j.d = dh[i][1].as<double>();
      j.a = dh[i][2].as<double>();
      j.alpha = dh[i][3].as<double>();
    }
  }
  arm.get("mount_translation", m.arm.mount.translation);
  if (arm.has("mount_rotation")) {
    Vec3 r = Vec3::Zero();
    arm.get("mount_rotation", r);
    m.arm.mount.rotation = exp_so3(r);
  }
  arm.get("beta", m.arm.beta);
  arm.get("lower", m.arm.lower);
  arm.get("upper", m.arm.upper);
  arm.get("rate_limit", m.arm.rate_limit);
  arm.finish();
  s.finish();
}

void read_mpc(Section s, MpcConfig& c) {
  s.get("horizon", c.horizon);
  s.get("steps", c.steps);
  s.get("dt", c.dt);
  s.get("control_rate", c.control_rate);
  s.get("wrench_lb", c.wrench_lb);
  s.get("wrench_ub", c.wrench_ub);
  s.get("max_linear_speed", c.max_linear_speed);
  s.get("max_angular_speed", c.max_angular_speed);
  s.get("theta_ref", c.theta_ref);
  if (s.has("mode")) c.mode = parse_solver_mode(s.raw("mode").as<std::string>(), s.where("mode"));
  s.get("max_iterations", c.max_iterations);
  s.get("tolerance", c.tolerance);
  Section col = s.child("collision");
  col.get("base_radius", c.collision.base_radius);
  col.get("link_radius", c.collision.link_radius);
  col.get("floor_z", c.collision.floor_z);
  col.get("margin", c.collision.margin);
  col.get("weight", c.collision.weight);
  if (col.has("walls")) {
    const std::string where = col.where("walls");
    const YAML::Node walls = col.raw("walls");
    if (!walls.IsSequence()) throw ConfigError(where + ": expected a list");
    c.collision.walls.clear();
    for (std::size_t i = 0; i < walls.size(); ++i) {
      Section w(walls[i], where + "[" + std::to_string(i) + "]");
      WallPlane p;
      w.get("normal", p.normal);
      w.get("offset", p.offset);
      w.finish();
      c.collision.walls.push_back(p);
    }
  }
  col.finish();
  s.finish();
}

void read_weights(Section s, MpcWeights& w) {
  s.get("q_p", w.q_p);
  s.get("q_r", w.q_r);
  s.get("q_v", w.q_v);
  s.get("q_theta", w.q_theta);
  s.get("q_u_wrench", w.q_u_wrench);
  s.get("q_u_joint", w.q_u_joint);
  s.get("terminal_scale", w.terminal_scale);
  s.finish();
}

void read_l1(Section s, L1Config& c) {
  s.get("enabled", c.enabled);
  s.get("a_v", c.a_v);
  s.get("a_d", c.a_d);
  s.get("base_cutoff", c.base_cutoff);
  s.get("joint_cutoff", c.joint_cutoff);
  s.finish();
}

void read_pid(Section s, PidGains& g) {
  s.get("kp_outer", g.kp_outer);
  s.get("ki_outer", g.ki_outer);
  s.get("kd_outer", g.kd_outer);
  s.get("kp_inner", g.kp_inner);
  s.get("ki_inner", g.ki_inner);
  s.get("kd_inner", g.kd_inner);
  s.get("integral_clamp", g.integral_clamp);
  s.finish();
}

void read_ik(Section s, IkOptions& o) {
  s.get("max_iterations", o.max_iterations);
  s.get("damping", o.damping);
  s.get("tolerance", o.tolerance);
  s.get("null_gain", o.null_gain);
  s.get("weights", o.weights);
  s.finish();
}

void read_dffc(Section s, DffcGains& g) {
  s.get("kp", g.kp);
  s.get("kd", g.kd);
  s.get("ki", g.ki);
  s.get("integral_clamp", g.integral_clamp);
  s.get("allocation", g.allocation);
  s.get("damping", g.damping);
  s.get("joint_rate_leak", g.joint_rate_leak);
  s.get("posture_kp", g.posture_kp);
  s.get("posture_kd", g.posture_kd);
  s.finish();
}

void read_plant(Section s, PlantConfig& p) {
  s.get("substep", p.substep);
  s.get("control_dt", p.control_dt);
  s.get("wrench_lb", p.wrench_lb);
  s.get("wrench_ub", p.wrench_ub);
  s.get("max_speed", p.max_speed);
  s.get("servo_driver_lag", p.disturbance.servo_driver_lag);
  s.get("rotor_lag", p.disturbance.rotor_lag);
  s.get("floor_z", p.disturbance.floor_z);
  s.finish();
}

void read_profile(Section s, DisturbanceProfile& p) {
  Section m = s.child("mismatch");
  m.get("mass", p.mismatch.mass);
  m.get("inertia", p.mismatch.inertia);
  m.get("beta", p.mismatch.beta);
  m.finish();
  s.get("wrench_bias", p.wrench_bias);
  s.get("coupling_scale", p.coupling_scale);
  s.get("backlash", p.backlash);
  s.get("servo_bias", p.servo_bias);
  Section g = s.child("ground_effect");
  g.get("enabled", p.ground_effect.enabled);
  g.get("z_threshold", p.ground_effect.z_threshold);
  g.get("gain", p.ground_effect.gain);
  g.finish();
  Section n = s.child("noise");
  n.get("position", p.noise.position);
  n.get("position_correlation_time", p.noise.position_correlation_time);
  n.get("rotation", p.noise.rotation);
  n.get("velocity", p.noise.velocity);
  n.get("angular_velocity", p.noise.angular_velocity);
  n.get("joint", p.noise.joint);
  n.finish();
  s.finish();
}

void read_bench(Section s, BenchSettings& b) {
  s.get("repeats", b.repeats);
  s.get("seed", b.seed);
  s.get("duration", b.duration);
  s.get("output", b.output);
  s.finish();
}

void read_teleop(Section s, TeleopSettings& t) {
  s.get("port", t.port);
  s.get("telemetry_rate", t.telemetry_rate);
  s.get("lease_timeout", t.lease_timeout);
  s.get("record_rate", t.record_rate);
  s.get("chunk_size", t.chunk_size);
  s.get("max_dp", t.max_dp);
  s.get("max_drot", t.max_drot);
  s.get("workspace_lo", t.workspace_lo);
  s.get("workspace_hi", t.workspace_hi);
  s.finish();
}

void read_peg(Section s, PegSettings& p) {
  s.get("hole", p.hole);
  s.get("horizontal_range", p.horizontal_range);
  s.get("hole_diameter", p.hole_diameter);
  s.get("peg_diameter", p.peg_diameter);
  s.get("peg_length", p.peg_length);
  s.get("standoff", p.standoff);
  s.get("insert_depth", p.insert_depth);
  s.get("success_depth", p.success_depth);
  s.get("approach_speed", p.approach_speed);
  s.get("insert_speed", p.insert_speed);
  s.get("dwell", p.dwell);
  s.get("home", p.home);
  s.finish();
}

template <typename Derived>
void put(YAML::Emitter& out, const char* key, const Eigen::MatrixBase<Derived>& v) {
  out << YAML::Key << key << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (Eigen::Index i = 0; i < v.size(); ++i) out << v(i);
  out << YAML::EndSeq;
}

template <typename T>
  requires(!std::is_base_of_v<Eigen::EigenBase<T>, T>)
void put(YAML::Emitter& out, const char* key, const T& v) {
  out << YAML::Key << key << YAML::Value << v;
}

void emit_profile(YAML::Emitter& out, const DisturbanceProfile& p) {
  out << YAML::BeginMap;
  out << YAML::Key << "mismatch" << YAML::Value << YAML::BeginMap;
  put(out, "mass", p.mismatch.mass);
  put(out, "inertia", p.mismatch.inertia);
  put(out, "beta", p.mismatch.beta);
  out << YAML::EndMap;
  put(out, "wrench_bias", p.wrench_bias.vector());
  put(out, "coupling_scale", p.coupling_scale);
  put(out, "backlash", p.backlash);
  put(out, "servo_bias", p.servo_bias);
  out << YAML::Key << "ground_effect" << YAML::Value << YAML::BeginMap;
  put(out, "enabled", p.ground_effect.enabled);
  put(out, "z_threshold", p.ground_effect.z_threshold);
  put(out, "gain", p.ground_effect.gain);
  out << YAML::EndMap;
  out << YAML::Key << "noise" << YAML::Value << YAML::BeginMap;
  put(out, "position", p.noise.position);
  put(out, "position_correlation_time", p.noise.position_correlation_time);
  put(out, "rotation", p.noise.rotation);
  put(out, "velocity", p.noise.velocity);
  put(out, "angular_velocity", p.noise.angular_velocity);
  put(out, "joint", p.noise.joint);
  out << YAML::EndMap;
  out << YAML::EndMap;
}

}  // namespace

AppConfig parse_config(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (!root.IsMap()) throw ConfigError("config: top level must be a mapping");
  Section top(root, "");
  if (!top.has("schema_version")) throw ConfigError("schema_version: missing");
  int version = 0;
  top.get("schema_version", version);
  if (version != kConfigSchemaVersion) {
    throw ConfigError("schema_version: expected " + std::to_string(kConfigSchemaVersion) + ", got " +
                      std::to_string(version));
  }

  AppConfig c = AppConfig::defaults();
  try {
    read_model(top.child("model"), c.loop.nominal);
    read_mpc(top.child("mpc"), c.loop.mpc);
    read_weights(top.child("weights"), c.loop.weights);
    read_l1(top.child("l1"), c.loop.l1);
    read_pid(top.child("pid"), c.loop.pid);
    read_ik(top.child("ik"), c.loop.ik);
    read_dffc(top.child("dffc"), c.loop.dffc);
    read_plant(top.child("plant"), c.loop.plant);
    if (top.has("profiles")) {
      const YAML::Node profiles = top.raw("profiles");
      if (!profiles.IsMap()) throw ConfigError("profiles: expected a mapping");
      for (const auto& kv : profiles) {
        const std::string name = kv.first.as<std::string>();
        DisturbanceProfile p = c.profiles.count(name) ? c.profiles[name] : DisturbanceProfile{};
        read_profile(Section(kv.second, "profiles." + name), p);
        c.profiles[name] = p;
      }
    }
    top.get("profile", c.profile);
    read_bench(top.child("bench"), c.bench);
    read_teleop(top.child("teleop"), c.teleop);
    read_peg(top.child("peg"), c.peg);
    top.finish();
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

AppConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string emit_config(const AppConfig& c) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  put(out, "schema_version", kConfigSchemaVersion);

  const UamParams& m = c.loop.nominal;
  out << YAML::Key << "model" << YAML::Value << YAML::BeginMap;
  put(out, "mass_diag", m.uav.mass_diag);
  put(out, "gravity", m.uav.gravity);
  put(out, "max_speed", m.uav.max_speed);
  out << YAML::Key << "arm" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "dh" << YAML::Value << YAML::BeginSeq;
  for (const auto& j : m.arm.joints) {
    out << YAML::Flow << YAML::BeginSeq << j.theta_offset << j.d << j.a << j.alpha << YAML::EndSeq;
  }
  out << YAML::EndSeq;
  put(out, "mount_translation", m.arm.mount.translation);
  put(out, "mount_rotation", log_so3(m.arm.mount.rotation));
  put(out, "beta", m.arm.beta);
  put(out, "lower", m.arm.lower);
  put(out, "upper", m.arm.upper);
  put(out, "rate_limit", m.arm.rate_limit);
  out << YAML::EndMap << YAML::EndMap;

  const MpcConfig& mpc = c.loop.mpc;
  out << YAML::Key << "mpc" << YAML::Value << YAML::BeginMap;
  put(out, "horizon", mpc.horizon);
  put(out, "steps", mpc.steps);
  put(out, "dt", mpc.dt);
  put(out, "control_rate", mpc.control_rate);
  put(out, "wrench_lb", mpc.wrench_lb);
  put(out, "wrench_ub", mpc.wrench_ub);
  put(out, "max_linear_speed", mpc.max_linear_speed);
  put(out, "max_angular_speed", mpc.max_angular_speed);
  put(out, "theta_ref", mpc.theta_ref);
  put(out, "mode", solver_mode_name(mpc.mode));
  put(out, "max_iterations", mpc.max_iterations);
  put(out, "tolerance", mpc.tolerance);
  out << YAML::Key << "collision" << YAML::Value << YAML::BeginMap;
  put(out, "base_radius", mpc.collision.base_radius);
  put(out, "link_radius", mpc.collision.link_radius);
  put(out, "floor_z", mpc.collision.floor_z);
  put(out, "margin", mpc.collision.margin);
  put(out, "weight", mpc.collision.weight);
  out << YAML::Key << "walls" << YAML::Value << YAML::BeginSeq;
  for (const auto& w : mpc.collision.walls) {
    out << YAML::BeginMap;
    put(out, "normal", w.normal);
    put(out, "offset", w.offset);
    out << YAML::EndMap;
  }
  out << YAML::EndSeq << YAML::EndMap << YAML::EndMap;

  const MpcWeights& w = c.loop.weights;
  out << YAML::Key << "weights" << YAML::Value << YAML::BeginMap;
  put(out, "q_p", w.q_p);
  put(out, "q_r", w.q_r);
  put(out, "q_v", w.q_v);
  put(out, "q_theta", w.q_theta);
  put(out, "q_u_wrench", w.q_u_wrench);
  put(out, "q_u_joint", w.q_u_joint);
  put(out, "terminal_scale", w.terminal_scale);
  out << YAML::EndMap;

  const L1Config& l1 = c.loop.l1;
  out << YAML::Key << "l1" << YAML::Value << YAML::BeginMap;
  put(out, "enabled", l1.enabled);
  put(out, "a_v", l1.a_v);
  put(out, "a_d", l1.a_d);
  put(out, "base_cutoff", l1.base_cutoff);
  put(out, "joint_cutoff", l1.joint_cutoff);
  out << YAML::EndMap;

  const PidGains& pid = c.loop.pid;
  out << YAML::Key << "pid" << YAML::Value << YAML::BeginMap;
  put(out, "kp_outer", pid.kp_outer);
  put(out, "ki_outer", pid.ki_outer);
  put(out, "kd_outer", pid.kd_outer);
  put(out, "kp_inner", pid.kp_inner);
  put(out, "ki_inner", pid.ki_inner);
  put(out, "kd_inner", pid.kd_inner);
  put(out, "integral_clamp", pid.integral_clamp);
  out << YAML::EndMap;

  const IkOptions& ik = c.loop.ik;
  out << YAML::Key << "ik" << YAML::Value << YAML::BeginMap;
  put(out, "max_iterations", ik.max_iterations);
  put(out, "damping", ik.damping);
  put(out, "tolerance", ik.tolerance);
  put(out, "null_gain", ik.null_gain);
  put(out, "weights", ik.weights);
  out << YAML::EndMap;

  const DffcGains& d = c.loop.dffc;
  out << YAML::Key << "dffc" << YAML::Value << YAML::BeginMap;
  put(out, "kp", d.kp);
  put(out, "kd", d.kd);
  put(out, "ki", d.ki);
  put(out, "integral_clamp", d.integral_clamp);
  put(out, "allocation", d.allocation);
  put(out, "damping", d.damping);
  put(out, "joint_rate_leak", d.joint_rate_leak);
  put(out, "posture_kp", d.posture_kp);
  put(out, "posture_kd", d.posture_kd);
  out << YAML::EndMap;

  const PlantConfig& p = c.loop.plant;
  out << YAML::Key << "plant" << YAML::Value << YAML::BeginMap;
  put(out, "substep", p.substep);
  put(out, "control_dt", p.control_dt);
  put(out, "wrench_lb", p.wrench_lb);
  put(out, "wrench_ub", p.wrench_ub);
  put(out, "max_speed", p.max_speed);
  put(out, "servo_driver_lag", p.disturbance.servo_driver_lag);
  put(out, "rotor_lag", p.disturbance.rotor_lag);
  put(out, "floor_z", p.disturbance.floor_z);
  out << YAML::EndMap;

  out << YAML::Key << "profiles" << YAML::Value << YAML::BeginMap;
  for (const auto& [name, prof] : c.profiles) {
    out << YAML::Key << name << YAML::Value;
    emit_profile(out, prof);
  }
  out << YAML::EndMap;
  put(out, "profile", c.profile);

  out << YAML::Key << "bench" << YAML::Value << YAML::BeginMap;
  put(out, "repeats", c.bench.repeats);
  put(out, "seed", c.bench.seed);
  put(out, "duration", c.bench.duration);
  put(out, "output", c.bench.output);
  out << YAML::EndMap;

  const TeleopSettings& t = c.teleop;
  out << YAML::Key << "teleop" << YAML::Value << YAML::BeginMap;
  put(out, "port", t.port);
  put(out, "telemetry_rate", t.telemetry_rate);
  put(out, "lease_timeout", t.lease_timeout);
  put(out, "record_rate", t.record_rate);
  put(out, "chunk_size", t.chunk_size);
  put(out, "max_dp", t.max_dp);
  put(out, "max_drot", t.max_drot);
  put(out, "workspace_lo", t.workspace_lo);
  put(out, "workspace_hi", t.workspace_hi);
  out << YAML::EndMap;

  const PegSettings& g = c.peg;
  out << YAML::Key << "peg" << YAML::Value << YAML::BeginMap;
  put(out, "hole", g.hole);
  put(out, "horizontal_range", g.horizontal_range);
  put(out, "hole_diameter", g.hole_diameter);
  put(out, "peg_diameter", g.peg_diameter);
  put(out, "peg_length", g.peg_length);
  put(out, "standoff", g.standoff);
  put(out, "insert_depth", g.insert_depth);
  put(out, "success_depth", g.success_depth);
  put(out, "approach_speed", g.approach_speed);
  put(out, "insert_speed", g.insert_speed);
  put(out, "dwell", g.dwell);
  put(out, "home", g.home);
  out << YAML::EndMap;

  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace uam
