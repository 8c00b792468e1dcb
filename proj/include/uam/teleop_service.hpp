#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "uam/episode.hpp"
#include "uam/peg_in_hole.hpp"
#include "uam/teleop_protocol.hpp"

namespace uam {

/// Single-writer latest-value slot. Readers always get the newest value;
/// older ones are overwritten, never queued.
template <typename T>
class LatestSlot {
 public:
  void put(T value) {
    std::lock_guard lock(mutex_);
    value_ = std::move(value);
    ++version_;
  }
  std::optional<T> get() const {
    std::lock_guard lock(mutex_);
    return value_;
  }
  std::uint64_t version() const {
    std::lock_guard lock(mutex_);
    return version_;
  }

 private:
  mutable std::mutex mutex_;
  std::optional<T> value_;
  std::uint64_t version_ = 0;
};

/// Commanding lease. One holder at a time; it lapses after `timeout`
/// seconds without a claim from the holder.
class Lease {
 public:
  explicit Lease(double timeout) : timeout_(timeout) {}

  /// Grants the lease to `client` if it is free, lapsed or already held by
  /// it, and refreshes it. `fresh` is set when the client did not hold it.
  bool claim(int client, double now, bool* fresh = nullptr);
  void release(int client);
  std::optional<int> holder(double now) const;

 private:
  double timeout_;
  std::optional<int> holder_;
  double last_ = 0.0;
};

struct SessionOptions {
  std::uint64_t seed = 1;
  ControllerKind controller = ControllerKind::kMpcL1;
  /// Empty: no recording. Otherwise one episode file is written on stop().
  std::string record_dir;
  /// When set, the scripted peg-in-hole policy drives the target and
  /// operator commands are acknowledged but not applied.
  std::optional<PegScene> script;
  /// false runs the loop as fast as it computes (tests, offline demos).
  bool real_time = true;
};

/// Owns the closed loop and its 100 Hz control thread. The network side
/// writes targets into a latest-value slot and reads telemetry from another;
/// neither call waits on a control cycle.
class TeleopSession {
 public:
  TeleopSession(const AppConfig& app, SessionOptions options);
  ~TeleopSession();
  TeleopSession(const TeleopSession&) = delete;
  TeleopSession& operator=(const TeleopSession&) = delete;

  void start();
  /// Joins the control thread and writes the recording, if any. Returns the
  /// episode path or an empty string.
  std::string stop();

  /// Target the session starts from and returns to on reset.
  const EeTarget& home() const { return home_; }
  void set_target(const EeTarget& target, bool paused, std::uint64_t last_seq);
  std::optional<TelemetryFrame> telemetry() const { return telemetry_.get(); }
  std::uint64_t telemetry_version() const { return telemetry_.version(); }

  const AppConfig& app() const { return app_; }
  const LoopConfig& loop() const { return loop_; }
  bool running() const { return running_; }
  std::uint64_t cycles() const { return cycles_; }
  /// Recording so far, decimated. Only safe after stop().
  Episode episode() const;

 private:
  struct Command {
    EeTarget target;
    bool paused = false;
    std::uint64_t last_seq = 0;
  };

  void run();

  AppConfig app_;
  LoopConfig loop_;
  SessionOptions options_;
  EeTarget home_;
  std::optional<PegScript> script_;
  MpcState initial_;
  std::unique_ptr<ClosedLoop> closed_loop_;
  std::unique_ptr<EpisodeRecorder> recorder_;
  LatestSlot<Command> command_;
  LatestSlot<TelemetryFrame> telemetry_;
  std::thread thread_;
  std::atomic<bool> running_{false};
  std::atomic<bool> stop_requested_{false};
  std::atomic<std::uint64_t> cycles_{0};
};

/// WebSocket front end. All client I/O runs on one network thread; each
/// client has its own connection state and outgoing queue. Telemetry goes
/// out at the configured rate with latest-wins dropping for slow readers.
class TeleopServer {
 public:
  /// port 0 picks a free port.
  TeleopServer(TeleopSession& session, unsigned short port);
  ~TeleopServer();
  TeleopServer(const TeleopServer&) = delete;
  TeleopServer& operator=(const TeleopServer&) = delete;

  void start();
  void stop();
  unsigned short port() const;

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

}  // namespace uam
