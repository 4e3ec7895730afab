#include "gradcode/net.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <bit>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstring>
#include <mutex>
#include <thread>

#include "gradcode/linalg.hpp"
#include "gradcode/log.hpp"

namespace gradcode::net {

namespace {

using Clock = std::chrono::steady_clock;

constexpr std::uint32_t kMaxFrame = 1u << 30;

void append_u8(std::vector<std::uint8_t>& out, std::uint8_t v) { out.push_back(v); }

void append_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void append_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void append_f64(std::vector<std::uint8_t>& out, double v) {
  append_u64(out, std::bit_cast<std::uint64_t>(v));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}
  std::uint8_t u8() { return take(1)[0]; }
  std::uint32_t u32() {
    auto b = take(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    auto b = take(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  std::span<const std::uint8_t> take(std::size_t n) {
    if (pos_ + n > data_.size()) throw ProtocolError("truncated frame body");
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
  }
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// sockets

struct Fd {
  int fd = -1;
  Fd() = default;
  explicit Fd(int f) : fd(f) {}
  Fd(Fd&& other) noexcept : fd(other.fd) { other.fd = -1; }
  Fd& operator=(Fd&& other) noexcept {
    if (this != &other) {
      reset();
      fd = other.fd;
      other.fd = -1;
    }
    return *this;
  }
  ~Fd() { reset(); }
  void reset() {
    if (fd >= 0) ::close(fd);
    fd = -1;
  }
  explicit operator bool() const { return fd >= 0; }
};

std::pair<std::string, std::uint16_t> parse_addr(const std::string& addr) {
  auto colon = addr.rfind(':');
  if (colon == std::string::npos)
    throw std::invalid_argument("address '" + addr + "' must be host:port");
  std::string host = addr.substr(0, colon);
  int port = std::stoi(addr.substr(colon + 1));
  if (port < 0 || port > 65535) throw std::invalid_argument("port out of range in " + addr);
  return {host, static_cast<std::uint16_t>(port)};
}

sockaddr_in make_sockaddr(const std::string& host, std::uint16_t port) {
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &sa.sin_addr) != 1)
    throw std::invalid_argument("cannot parse IPv4 address '" + host + "'");
  return sa;
}

void set_nodelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

Fd tcp_listen(const std::string& host, std::uint16_t port) {
  Fd fd(::socket(AF_INET, SOCK_STREAM, 0));
  if (!fd) throw IoError("socket() failed: " + std::string(std::strerror(errno)));
  int one = 1;
  ::setsockopt(fd.fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  auto sa = make_sockaddr(host, port);
  if (::bind(fd.fd, reinterpret_cast<sockaddr*>(&sa), sizeof(sa)) != 0)
    throw IoError("bind(" + host + ":" + std::to_string(port) +
                  ") failed: " + std::strerror(errno));
  if (::listen(fd.fd, 64) != 0) throw IoError("listen() failed: " + std::string(std::strerror(errno)));
  return fd;
}

std::uint16_t bound_port(int fd) {
  sockaddr_in sa{};
  socklen_t len = sizeof(sa);
  if (::getsockname(fd, reinterpret_cast<sockaddr*>(&sa), &len) != 0)
    throw IoError("getsockname() failed");
  return ntohs(sa.sin_port);
}

Fd tcp_connect(const std::string& host, std::uint16_t port) {
  Fd fd(::socket(AF_INET, SOCK_STREAM, 0));
  if (!fd) throw IoError("socket() failed: " + std::string(std::strerror(errno)));
  auto sa = make_sockaddr(host, port);
  if (::connect(fd.fd, reinterpret_cast<sockaddr*>(&sa), sizeof(sa)) != 0)
    throw IoError("connect(" + host + ":" + std::to_string(port) +
                  ") failed: " + std::strerror(errno));
  set_nodelay(fd.fd);
  return fd;
}

void send_all(int fd, const std::uint8_t* data, std::size_t len) {
  while (len > 0) {
    ssize_t n = ::send(fd, data, len, MSG_NOSIGNAL);
    if (n <= 0) throw IoError("send failed: " + std::string(std::strerror(errno)));
    data += n;
    len -= static_cast<std::size_t>(n);
  }
}

// false on clean EOF before the first byte; throws on mid-read EOF or error.
bool recv_exact(int fd, std::uint8_t* data, std::size_t len) {
  std::size_t got = 0;
  while (got < len) {
    ssize_t n = ::recv(fd, data + got, len - got, 0);
    if (n == 0) {
      if (got == 0) return false;
      throw ProtocolError("connection closed mid-frame");
    }
    if (n < 0) {
      if (errno == EINTR) continue;
      throw IoError("recv failed: " + std::string(std::strerror(errno)));
    }
    got += static_cast<std::size_t>(n);
  }
  return true;
}

void write_frame(int fd, const Message& msg) {
  auto body = encode(msg);
  std::vector<std::uint8_t> frame;
  frame.reserve(body.size() + 4);
  append_u32(frame, static_cast<std::uint32_t>(body.size()));
  frame.insert(frame.end(), body.begin(), body.end());
  send_all(fd, frame.data(), frame.size());
}

std::optional<Message> read_frame(int fd) {
  std::uint8_t len_buf[4];
  if (!recv_exact(fd, len_buf, 4)) return std::nullopt;
  std::uint32_t len = 0;
  for (int i = 0; i < 4; ++i) len |= static_cast<std::uint32_t>(len_buf[i]) << (8 * i);
  if (len > kMaxFrame) throw ProtocolError("frame length " + std::to_string(len) + " too large");
  std::vector<std::uint8_t> body(len);
  if (len > 0 && !recv_exact(fd, body.data(), len)) throw ProtocolError("connection closed mid-frame");
  return decode(body);
}

bool readable_now(int fd) {
  pollfd p{fd, POLLIN, 0};
  return ::poll(&p, 1, 0) == 1 && (p.revents & POLLIN);
}

bool wait_readable(int fd, double timeout_s) {
  pollfd p{fd, POLLIN, 0};
  int ms = timeout_s < 0 ? -1 : static_cast<int>(timeout_s * 1000.0);
  return ::poll(&p, 1, ms) == 1 && (p.revents & (POLLIN | POLLHUP));
}

}  // namespace

// ---------------------------------------------------------------------------
// codec

std::vector<std::uint8_t> encode(const Message& msg) {
  std::vector<std::uint8_t> body;
  append_u8(body, static_cast<std::uint8_t>(msg.kind));
  append_u64(body, msg.round);
  switch (msg.kind) {
    case MsgKind::assign:
      append_u32(body, msg.worker_id);
      append_u32(body, msg.block_id);
      append_u32(body, static_cast<std::uint32_t>(msg.indices.size()));
      for (auto idx : msg.indices) append_u64(body, idx);
      break;
    case MsgKind::model:
      append_u32(body, static_cast<std::uint32_t>(msg.vec.size()));
      for (double v : msg.vec) append_f64(body, v);
      break;
    case MsgKind::gradient:
      append_u32(body, msg.worker_id);
      append_u32(body, msg.block_id);
      append_u32(body, static_cast<std::uint32_t>(msg.vec.size()));
      for (double v : msg.vec) append_f64(body, v);
      break;
    case MsgKind::stop:
      break;
    default:
      throw ProtocolError("encode: unknown message kind");
  }
  if (body.size() > kMaxFrame) throw ProtocolError("encode: message too large");
  return body;
}

Message decode(std::span<const std::uint8_t> data) {
  Reader r(data);
  Message msg;
  std::uint8_t kind = r.u8();
  msg.round = r.u64();
  switch (kind) {
    case static_cast<std::uint8_t>(MsgKind::assign): {
      msg.kind = MsgKind::assign;
      msg.worker_id = r.u32();
      msg.block_id = r.u32();
      std::uint32_t count = r.u32();
      if (r.remaining() != static_cast<std::size_t>(count) * 8)
        throw ProtocolError("assign frame length mismatch");
      msg.indices.resize(count);
      for (auto& idx : msg.indices) idx = r.u64();
      break;
    }
    case static_cast<std::uint8_t>(MsgKind::model): {
      msg.kind = MsgKind::model;
      std::uint32_t count = r.u32();
      if (r.remaining() != static_cast<std::size_t>(count) * 8)
        throw ProtocolError("model frame length mismatch");
      msg.vec.resize(count);
      for (auto& v : msg.vec) v = r.f64();
      break;
    }
    case static_cast<std::uint8_t>(MsgKind::gradient): {
      msg.kind = MsgKind::gradient;
      msg.worker_id = r.u32();
      msg.block_id = r.u32();
      std::uint32_t count = r.u32();
      if (r.remaining() != static_cast<std::size_t>(count) * 8)
        throw ProtocolError("gradient frame length mismatch");
      msg.vec.resize(count);
      for (auto& v : msg.vec) v = r.f64();
      break;
    }
    case static_cast<std::uint8_t>(MsgKind::stop):
      msg.kind = MsgKind::stop;
      break;
    default:
      throw ProtocolError("unknown message kind " + std::to_string(kind));
  }
  if (r.remaining() != 0) throw ProtocolError("trailing bytes in frame");
  return msg;
}

// ---------------------------------------------------------------------------
// master

struct Master::Impl {
  MasterOptions opts;
  Fd listener;
  std::uint16_t port = 0;

  codes::AssignmentMatrix matrix;
  optim::Objective objective;
  sim::WaitPolicy policy;
  int threshold = 0;  // agc finisher count
  double p_debias = 0.0;

  struct Round {
    std::uint64_t index = 0;
    std::vector<std::vector<double>> block_out;
    std::vector<char> have_block;
    std::vector<int> finishers;
    int arrivals = 0;  // current-round gradients seen, including post-fire ones
    int covered = 0;
    bool fired = false;
    double fire_elapsed = 0.0;
    Clock::time_point start;
  };

  std::mutex mu;
  std::condition_variable cv;
  Round round;
  std::vector<char> dead;
  int alive = 0;
  std::string abort_reason;

  std::vector<Fd> conns;        // by worker id
  std::vector<std::thread> readers;

  explicit Impl(MasterOptions o) : opts(std::move(o)) {
    config::validate(opts.config);
    auto [host, want_port] = parse_addr(opts.listen);
    listener = tcp_listen(host, want_port);
    port = bound_port(listener.fd);
  }

  bool rule_satisfied() const {
    int blocks = matrix.params.block_count();
    switch (policy.kind) {
      case sim::WaitKind::uncoded_all:
        return !round.finishers.empty() && static_cast<int>(round.finishers.size()) >= alive;
      case sim::WaitKind::egc_all_blocks:
        return round.covered == blocks;
      case sim::WaitKind::agc_fraction:
        return static_cast<int>(round.finishers.size()) >= threshold ||
               round.covered == blocks;
    }
    return false;
  }

  // Drops the triggering check under the lock whenever state changes.
  void on_state_change() {
    if (!round.fired && rule_satisfied()) {
      round.fired = true;
      round.fire_elapsed =
          std::chrono::duration<double>(Clock::now() - round.start).count();
    }
    cv.notify_all();
  }

  void reader_loop(int worker_id) {
    int fd = conns[worker_id].fd;
    try {
      while (true) {
        auto msg = read_frame(fd);
        if (!msg) break;  // worker closed
        if (msg->kind != MsgKind::gradient) throw ProtocolError("unexpected frame from worker");
        std::lock_guard<std::mutex> lock(mu);
        if (msg->round != round.index) continue;  // stale round, discard
        ++round.arrivals;
        if (!round.fired) {
          round.finishers.push_back(static_cast<int>(msg->worker_id));
          int b = static_cast<int>(msg->block_id);
          if (b >= 0 && b < matrix.params.block_count() && !round.have_block[b]) {
            round.have_block[b] = 1;
            round.block_out[b] = std::move(msg->vec);
            ++round.covered;
          }
        }
        on_state_change();
      }
    } catch (const std::exception& e) {
      log::warn(std::string("master: worker ") + std::to_string(worker_id) +
                " connection error: " + e.what());
    }
    std::lock_guard<std::mutex> lock(mu);
    if (!dead[worker_id]) {
      dead[worker_id] = 1;
      --alive;
      log::info("master: worker " + std::to_string(worker_id) +
                " disconnected; treating as a permanent straggler");
    }
    on_state_change();
  }

  void accept_workers() {
    const auto& cfg = opts.config;
    conns.resize(cfg.k);
    dead.assign(cfg.k, 0);
    alive = cfg.k;
    auto deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(
                                       std::chrono::duration<double>(opts.accept_timeout_s));
    int joined = 0;
    while (joined < cfg.k) {
      double left = std::chrono::duration<double>(deadline - Clock::now()).count();
      if (left <= 0 || !wait_readable(listener.fd, left))
        throw IoError("master: timed out waiting for workers (" + std::to_string(joined) + "/" +
                      std::to_string(cfg.k) + " joined)");
      Fd conn(::accept(listener.fd, nullptr, nullptr));
      if (!conn) continue;
      set_nodelay(conn.fd);
      double join_left = std::chrono::duration<double>(deadline - Clock::now()).count();
      if (join_left <= 0 || !wait_readable(conn.fd, join_left))
        throw IoError("master: worker connected but sent no join frame");
      auto hello = read_frame(conn.fd);
      if (!hello || hello->kind != MsgKind::assign)
        throw ProtocolError("master: expected join frame");
      int id = static_cast<int>(hello->worker_id);
      if (id < 0 || id >= cfg.k) throw ProtocolError("master: worker id out of range");
      if (conns[id]) throw ProtocolError("master: duplicate worker id " + std::to_string(id));
      conns[id] = std::move(conn);
      ++joined;
    }
    // real assignments
    for (int j = 0; j < cfg.k; ++j) {
      Message assign;
      assign.kind = MsgKind::assign;
      assign.round = 0;
      assign.worker_id = static_cast<std::uint32_t>(j);
      assign.block_id = static_cast<std::uint32_t>(matrix.group_of_worker(j));
      for (int t : matrix.supports[j]) assign.indices.push_back(static_cast<std::uint64_t>(t));
      write_frame(conns[j].fd, assign);
    }
  }

  // Under the exact-code wait a block whose workers are all dead and that has
  // not reported this round can never be covered again.
  int doomed_block_locked() const {
    if (policy.kind != sim::WaitKind::egc_all_blocks) return -1;
    for (int b = 0; b < matrix.params.block_count(); ++b) {
      if (round.have_block[b]) continue;
      bool any = false;
      for (int j : matrix.block_workers(b))
        if (!dead[j]) any = true;
      if (!any) return b;
    }
    return -1;
  }

  void shutdown_connections() {
    for (auto& conn : conns)
      if (conn) ::shutdown(conn.fd, SHUT_RDWR);
  }

  void join_readers() {
    for (auto& r : readers)
      if (r.joinable()) r.join();
    readers.clear();
  }

  sim::RunResult run() {
    const auto& cfg = opts.config;
    matrix = codes::build_frc(cfg.n, cfg.k, cfg.c);
    objective = sim::make_objective(cfg);
    policy = sim::wait_policy_for(cfg.method, cfg.delta);
    threshold = sim::agc_threshold(cfg.delta, cfg.k);
    if (cfg.method == analysis::Method::agc)
      p_debias = analysis::moments_exact(cfg.k, matrix.params.ell, threshold).p;

    accept_workers();
    for (int j = 0; j < cfg.k; ++j)
      readers.emplace_back([this, j] { reader_loop(j); });
    try {
      return run_rounds();
    } catch (...) {
      // release any worker still blocked on the socket before propagating
      shutdown_connections();
      join_readers();
      throw;
    }
  }

  sim::RunResult run_rounds() {
    const auto& cfg = opts.config;
    sim::RunResult result;
    result.config = cfg;
    result.seed = cfg.seed;
    std::vector<double> x = objective.start_point;
    if (x.empty()) x.assign(objective.dim, 0.0);
    if (cfg.track_iterates) result.iterates.push_back(x);

    int blocks = matrix.params.block_count();
    for (int t = 0; t < cfg.iterations; ++t) {
      {
        std::lock_guard<std::mutex> lock(mu);
        round.index = static_cast<std::uint64_t>(t);
        round.block_out.assign(blocks, {});
        round.have_block.assign(blocks, 0);
        round.finishers.clear();
        round.arrivals = 0;
        round.covered = 0;
        round.fired = false;
        round.fire_elapsed = 0.0;
        round.start = Clock::now();
      }
      Message model;
      model.kind = MsgKind::model;
      model.round = static_cast<std::uint64_t>(t);
      model.vec = x;
      for (int j = 0; j < cfg.k; ++j) {
        std::lock_guard<std::mutex> lock(mu);
        if (dead[j]) continue;
        try {
          write_frame(conns[j].fd, model);
        } catch (const std::exception&) {
          dead[j] = 1;
          --alive;
        }
      }

      auto deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(
                                         std::chrono::duration<double>(cfg.timeout_s));
      {
        std::unique_lock<std::mutex> lock(mu);
        bool ok = cv.wait_until(lock, deadline, [&] {
          if (alive == 0) return true;
          if (doomed_block_locked() >= 0) return true;
          return round.fired;
        });
        if (alive == 0) {
          lock.unlock();
          throw IoError("master: all workers disconnected");
        }
        if (int doomed = doomed_block_locked(); doomed >= 0 && !round.fired) {
          lock.unlock();
          throw IoError("master: all workers of block " + std::to_string(doomed) +
                        " disconnected; the exact-code wait cannot complete");
        }
        if (!ok || !round.fired) {
          lock.unlock();
          throw IoError("master: round " + std::to_string(t) + " timed out after " +
                        std::to_string(cfg.timeout_s) + "s");
        }
        if (cfg.round_sync) {
          // Drain the rest of the round so every worker is idle before the
          // next broadcast; keeps replay comparable with injected delays.
          bool drained = cv.wait_until(lock, deadline, [&] { return round.arrivals >= alive; });
          if (!drained)
            log::warn("master: round " + std::to_string(t) + " drain timed out; continuing");
        }
      }

      codes::CoverageIndicators y;
      std::vector<std::vector<double>> block_sums(blocks);
      sim::IterationRecord rec;
      {
        std::lock_guard<std::mutex> lock(mu);
        y.y.assign(blocks, 0);
        for (int b = 0; b < blocks; ++b) {
          if (round.have_block[b]) {
            y.y[b] = 1;
            block_sums[b] = round.block_out[b];
          } else {
            block_sums[b].assign(objective.dim, 0.0);
          }
        }
        rec.finished_workers = round.finishers;
        rec.covered_blocks = round.covered;
        rec.wall_time = round.fire_elapsed;
      }

      auto g = codes::combine(block_sums, y, cfg.n);
      if (cfg.debias) g = codes::debias(std::move(g), p_debias);
      double gamma = optim::step_size(cfg.gamma, objective.constants, p_debias, t);

      rec.t = t;
      rec.loss = objective.value(x);
      double sigma_t = 0.0;
      auto full = optim::full_gradient(objective, x, &sigma_t);
      result.sigma_observed = std::max(result.sigma_observed, sigma_t);
      double err2 = 0.0;
      for (int d = 0; d < objective.dim; ++d) {
        double diff = g[d] - full[d];
        err2 += diff * diff;
      }
      rec.grad_error = std::sqrt(err2);

      x = optim::gd_step(x, g, gamma);
      result.total_time += rec.wall_time;
      result.records.push_back(std::move(rec));
      if (cfg.track_iterates) result.iterates.push_back(x);
    }

    Message stop;
    stop.kind = MsgKind::stop;
    stop.round = static_cast<std::uint64_t>(cfg.iterations);
    for (int j = 0; j < cfg.k; ++j) {
      std::lock_guard<std::mutex> lock(mu);
      if (dead[j]) continue;
      try {
        write_frame(conns[j].fd, stop);
      } catch (const std::exception&) {
        dead[j] = 1;
        --alive;
      }
    }
    join_readers();

    result.final_loss = objective.value(x);
    result.final_x = std::move(x);
    return result;
  }
};

Master::Master(MasterOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}

Master::~Master() {
  if (!impl_) return;
  impl_->shutdown_connections();
  impl_->join_readers();
}

std::uint16_t Master::port() const { return impl_->port; }

sim::RunResult Master::run() { return impl_->run(); }

sim::RunResult serve_master(const MasterOptions& options) { return Master(options).run(); }

// ---------------------------------------------------------------------------
// worker

void run_worker(const WorkerOptions& options) {
  const auto& cfg = options.config;
  config::validate(cfg);
  auto [host, port] = parse_addr(options.master_addr);

  Fd conn;
  for (int attempt = 0;; ++attempt) {
    try {
      conn = tcp_connect(host, port);
      break;
    } catch (const IoError&) {
      if (attempt >= options.connect_retries) throw;
      std::this_thread::sleep_for(std::chrono::duration<double>(options.retry_interval_s));
    }
  }

  Message join;
  join.kind = MsgKind::assign;
  join.round = 0;
  join.worker_id = static_cast<std::uint32_t>(options.worker_id);
  write_frame(conn.fd, join);

  auto assign = read_frame(conn.fd);
  if (!assign || assign->kind != MsgKind::assign)
    throw ProtocolError("worker: expected assignment frame");
  int block_id = static_cast<int>(assign->block_id);
  std::vector<int> tasks(assign->indices.begin(), assign->indices.end());

  // Sanity-check against the locally derived code structure.
  auto matrix = codes::build_frc(cfg.n, cfg.k, cfg.c);
  if (tasks != matrix.supports[options.worker_id])
    throw ProtocolError("worker: assignment does not match the code parameters");

  optim::Objective objective;
  if (cfg.objective.kind == "quadratic") {
    objective = sim::make_objective(cfg);
  } else if (!options.data_dir.empty()) {
    auto shards = dataset::load_shards(options.data_dir, tasks, cfg.objective.label_column);
    objective = optim::make_sharded(shards, cfg.objective.kind, cfg.n);
  } else {
    objective = sim::make_objective(cfg);  // full local copy of the dataset
  }

  std::optional<sim::DelayTable> table;
  if (!options.delay_table.empty()) table = sim::DelayTable::load(options.delay_table);

  log::info("worker " + std::to_string(options.worker_id) + ": joined, block " +
            std::to_string(block_id) + ", " + std::to_string(tasks.size()) + " tasks");

  while (true) {
    auto msg = read_frame(conn.fd);
    if (!msg) throw ProtocolError("worker: master closed the connection unexpectedly");
    // Skip ahead to the newest queued frame so a lagging worker rejoins the
    // current round instead of grinding through stale models.
    while (msg->kind == MsgKind::model && readable_now(conn.fd)) {
      auto next = read_frame(conn.fd);
      if (!next) throw ProtocolError("worker: master closed the connection unexpectedly");
      msg = std::move(next);
    }
    if (msg->kind == MsgKind::stop) break;
    if (msg->kind != MsgKind::model) throw ProtocolError("worker: unexpected frame kind");

    int t = static_cast<int>(msg->round);
    if (options.fail_after_round >= 0 && t >= options.fail_after_round) {
      log::info("worker " + std::to_string(options.worker_id) + ": injected failure at round " +
                std::to_string(t));
      return;
    }
    if (static_cast<int>(msg->vec.size()) != objective.dim)
      throw ProtocolError("worker: model dimension mismatch");

    auto y = optim::block_sum(objective, block_id, msg->vec, cfg.c);

    double sleep_s = 0.0;
    if (table) {
      sleep_s = table->at(t, options.worker_id);
    } else if (options.delay_seed) {
      Rng rng = Rng(*options.delay_seed)
                    .substream({static_cast<std::uint64_t>(options.worker_id),
                                static_cast<std::uint64_t>(t)});
      sleep_s = rng.exponential(options.delay_lambda);
    }
    if (sleep_s > 0.0) std::this_thread::sleep_for(std::chrono::duration<double>(sleep_s));

    Message grad;
    grad.kind = MsgKind::gradient;
    grad.round = msg->round;
    grad.worker_id = static_cast<std::uint32_t>(options.worker_id);
    grad.block_id = static_cast<std::uint32_t>(block_id);
    grad.vec = std::move(y);
    write_frame(conn.fd, grad);
  }
  log::info("worker " + std::to_string(options.worker_id) + ": stop received, exiting");
}

}  // namespace gradcode::net
