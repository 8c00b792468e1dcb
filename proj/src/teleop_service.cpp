#include "uam/teleop_service.hpp"

#include <chrono>
#include <ctime>
#include <deque>
#include <filesystem>
#include <limits>
#include <map>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

namespace uam {

bool Lease::claim(int client, double now, bool* fresh) {
  const bool live = holder_ && now - last_ <= timeout_;
  if (live && *holder_ != client) return false;
  if (fresh) *fresh = !(live && *holder_ == client);
  holder_ = client;
  last_ = now;
  return true;
}

void Lease::release(int client) {
  if (holder_ == client) holder_.reset();
}

std::optional<int> Lease::holder(double now) const {
  if (holder_ && now - last_ <= timeout_) return holder_;
  return std::nullopt;
}

TeleopSession::TeleopSession(const AppConfig& app, SessionOptions options)
    : app_(app), loop_(app.resolved_loop()), options_(std::move(options)) {
  home_.p_ref = app_.peg.home;
  if (options_.script) {
    script_ = scripted_peg_in_hole(*options_.script, app_.peg, app_.teleop);
    if (!script_->reachable) throw std::invalid_argument("scripted scene unreachable: " + script_->failure);
    home_ = script_->sample(0.0);
  }
  initial_ = hover_state_for_ee(home_, loop_.mpc.theta_ref, loop_.nominal);
  closed_loop_ = std::make_unique<ClosedLoop>(options_.controller, loop_, initial_, options_.seed);
  if (!options_.record_dir.empty()) {
    EpisodeHeader h;
    h.task = options_.script ? "peg_in_hole" : "teleop";
    h.seed = options_.seed;
    h.source_rate = loop_.mpc.control_rate;
    h.rate = app_.teleop.record_rate;
    h.chunk_size = app_.teleop.chunk_size;
    h.controller = options_.controller;
    h.profile = app_.profile;
    h.config_hash = fnv1a_hex(emit_config(app_));
    h.initial = initial_;
    recorder_ = std::make_unique<EpisodeRecorder>(h);
  }
  command_.put({home_, false, 0});
}

TeleopSession::~TeleopSession() {
  stop_requested_ = true;
  if (thread_.joinable()) thread_.join();
}

void TeleopSession::start() {
  if (running_ || thread_.joinable()) return;
  stop_requested_ = false;
  running_ = true;
  thread_ = std::thread([this] { run(); });
}

void TeleopSession::set_target(const EeTarget& target, bool paused, std::uint64_t last_seq) {
  EeTarget t = target;
  t.v_ref.setZero();
  command_.put({t, paused, last_seq});
}

void TeleopSession::run() {
  using clock = std::chrono::steady_clock;
  const auto period = std::chrono::duration_cast<clock::duration>(
      std::chrono::duration<double>(1.0 / loop_.mpc.control_rate));
  auto next = clock::now();
  while (!stop_requested_) {
    const Command cmd = *command_.get();
    const double t = closed_loop_->time();
    const EeTarget action = script_ ? script_->sample(t) : cmd.target;
    TelemetryFrame f;
    try {
      const TraceRow row = closed_loop_->step([&action](double) { return action; });
      if (recorder_) recorder_->add(row, action);
      f.t = row.t;
      f.ee_p = row.ee;
      f.ee_q = row.ee_quat;
      f.base_p = row.base.p;
      f.base_q = to_wxyz(row.base.R);
      f.theta = row.theta;
      f.status = cmd.paused ? "paused" : row.degraded ? "degraded" : "ok";
      f.tau_ext = row.tau_hat.vector();
    } catch (const PlantBlowUp&) {
      f = telemetry_.get().value_or(TelemetryFrame{});
      f.t += 1.0 / loop_.mpc.control_rate;
      f.status = "failed";
      stop_requested_ = true;
    }
    f.target_p = action.p_ref;
    f.target_q = to_wxyz(action.R_ref);
    f.gripper = action.gripper;
    f.last_seq = cmd.last_seq;
    telemetry_.put(f);
    ++cycles_;
    if (options_.real_time) {
      // An overrun shifts the schedule instead of bursting to catch up.
      next += period;
      const auto now = clock::now();
      if (next < now) next = now;
      std::this_thread::sleep_until(next);
    }
  }
  running_ = false;
}

std::string TeleopSession::stop() {
  stop_requested_ = true;
  if (thread_.joinable()) thread_.join();
  if (!recorder_) return {};
  namespace fs = std::filesystem;
  fs::create_directories(options_.record_dir);
  const std::time_t now = std::time(nullptr);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y%m%d-%H%M%S", std::localtime(&now));
  const Episode episode = recorder_->finish();
  const fs::path path = fs::path(options_.record_dir) /
                        (episode.header.task + "_seed" + std::to_string(options_.seed) + "_" + stamp + ".episode.jsonl");
  save_episode(path.string(), episode);
  return path.string();
}

Episode TeleopSession::episode() const {
  if (!recorder_) return Episode{};
  return recorder_->finish();
}

namespace beast = boost::beast;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace {

constexpr std::size_t kMaxQueued = 256;

struct Client : std::enable_shared_from_this<Client> {
  Client(tcp::socket socket, int id) : ws(std::move(socket)), id(id) {}

  websocket::stream<beast::tcp_stream> ws;
  int id;
  beast::flat_buffer buffer;
  std::deque<std::string> queue;
  std::string telemetry;  // latest frame not yet written; replaced, never queued
  bool writing = false;
  bool open = false;
  double last_t = -std::numeric_limits<double>::infinity();
};

}  // namespace

struct TeleopServer::Impl {
  Impl(TeleopSession& s, unsigned short port)
      : session(s),
        acceptor(ioc, tcp::endpoint(net::ip::make_address("127.0.0.1"), port)),
        tick(ioc),
        intake(s.home(), s.app().teleop),
        lease(s.app().teleop.lease_timeout),
        epoch(std::chrono::steady_clock::now()),
        bound_port(acceptor.local_endpoint().port()) {}

  TeleopSession& session;
  net::io_context ioc;
  tcp::acceptor acceptor;
  net::steady_timer tick;
  std::thread thread;
  CommandIntake intake;
  Lease lease;
  int commander = 0;
  int next_id = 1;
  std::map<int, std::shared_ptr<Client>> clients;
  std::chrono::steady_clock::time_point epoch;
  unsigned short bound_port;

  double now() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch).count(); }

  void accept() {
    acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      auto c = std::make_shared<Client>(std::move(socket), next_id++);
      c->ws.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
      c->ws.async_accept([this, c](beast::error_code ec2) {
        if (ec2) return;
        c->open = true;
        clients[c->id] = c;
        const bool commanding = claim(c->id);
        send(c, encode_hello(commanding ? "commander" : "viewer", session.loop().nominal.arm, session.app().teleop,
                             session.loop().mpc.control_rate));
        read(c);
      });
      accept();
    });
  }

  // Claims the lease for `id`, telling a displaced or lapsed holder.
  bool claim(int id) {
    bool fresh = false;
    if (!lease.claim(id, now(), &fresh)) return false;
    if (fresh) {
      if (commander && commander != id) notify_role(commander, "viewer");
      commander = id;
      intake.reset_sequence();
    }
    return true;
  }

  void notify_role(int id, const std::string& role) {
    auto it = clients.find(id);
    if (it != clients.end()) send(it->second, encode_role(role));
  }

  void read(const std::shared_ptr<Client>& c) {
    c->ws.async_read(c->buffer, [this, c](beast::error_code ec, std::size_t) {
      if (ec) {
        drop(c);
        return;
      }
      const std::string text = beast::buffers_to_string(c->buffer.data());
      c->buffer.consume(c->buffer.size());
      handle(c, text);
      if (c->open) read(c);
    });
  }

  void handle(const std::shared_ptr<Client>& c, const std::string& text) {
    if (is_heartbeat(text)) {
      if (lease.holder(now()) == c->id) lease.claim(c->id, now());
      return;
    }
    CommandMsg msg;
    try {
      msg = parse_command(text, session.app().teleop);
    } catch (const ProtocolError& e) {
      send(c, encode_error(e.code, e.what(), e.seq));
      return;
    }
    const bool was_commander = lease.holder(now()) == c->id;
    if (!claim(c->id)) {
      send(c, encode_error("not_commander", "another client holds the commanding lease", msg.seq));
      return;
    }
    if (!was_commander) send(c, encode_role("commander"));
    const auto last = session.telemetry();
    if (last && last->status == "failed") {
      send(c, encode_error("session_failed", "the simulation stopped", msg.seq));
      return;
    }
    const CommandIntake::Outcome out = intake.apply(msg);
    session.set_target(intake.target(), intake.paused(), intake.last_seq());
    send(c, encode_ack(msg.seq, out.applied, out.clamped));
  }

  void send(const std::shared_ptr<Client>& c, std::string text) {
    if (!c->open) return;
    if (c->queue.size() >= kMaxQueued) {
      drop(c);
      return;
    }
    c->queue.push_back(std::move(text));
    write(c);
  }

  void write(const std::shared_ptr<Client>& c) {
    if (c->writing || !c->open) return;
    auto msg = std::make_shared<std::string>();
    if (!c->queue.empty()) {
      *msg = std::move(c->queue.front());
      c->queue.pop_front();
    } else if (!c->telemetry.empty()) {
      msg->swap(c->telemetry);
    } else {
      return;
    }
    c->writing = true;
    c->ws.text(true);
    c->ws.async_write(net::buffer(*msg), [this, c, msg](beast::error_code ec, std::size_t) {
      c->writing = false;
      if (ec) {
        drop(c);
        return;
      }
      write(c);
    });
  }

  void drop(const std::shared_ptr<Client>& c) {
    if (!c->open) return;
    c->open = false;
    beast::error_code ignored;
    beast::get_lowest_layer(c->ws).socket().close(ignored);
    clients.erase(c->id);
    lease.release(c->id);
    if (commander == c->id) commander = 0;
  }

  void schedule(std::chrono::steady_clock::duration period) {
    tick.expires_at(tick.expiry() + period);
    tick.async_wait([this, period](beast::error_code ec) {
      if (ec) return;
      broadcast();
      schedule(period);
    });
  }

  void broadcast() {
    if (commander && !lease.holder(now())) {
      notify_role(commander, "viewer");
      commander = 0;
    }
    const auto frame = session.telemetry();
    if (!frame || clients.empty()) return;
    const std::string text = encode_telemetry(*frame);
    for (auto& [id, c] : clients) {
      if (!(frame->t > c->last_t)) continue;
      c->last_t = frame->t;
      c->telemetry = text;
      write(c);
    }
  }
};

TeleopServer::TeleopServer(TeleopSession& session, unsigned short port)
    : impl_(std::make_unique<Impl>(session, port)) {}

TeleopServer::~TeleopServer() { stop(); }

void TeleopServer::start() {
  if (impl_->thread.joinable()) return;
  const auto period = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
      std::chrono::duration<double>(1.0 / impl_->session.app().teleop.telemetry_rate));
  impl_->accept();
  impl_->tick.expires_after(period);
  impl_->tick.async_wait([this, period](beast::error_code ec) {
    if (ec) return;
    impl_->broadcast();
    impl_->schedule(period);
  });
  impl_->thread = std::thread([this] { impl_->ioc.run(); });
}

void TeleopServer::stop() {
  if (!impl_ || !impl_->thread.joinable()) return;
  net::post(impl_->ioc, [this] {
    beast::error_code ignored;
    impl_->acceptor.close(ignored);
    impl_->tick.cancel();
    auto clients = impl_->clients;
    for (auto& [id, c] : clients) impl_->drop(c);
    impl_->ioc.stop();
  });
  impl_->thread.join();
}

unsigned short TeleopServer::port() const { return impl_->bound_port; }

}  // namespace uam
