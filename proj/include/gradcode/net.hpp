#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gradcode/config.hpp"
#include "gradcode/simulator.hpp"

namespace gradcode::net {

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Wire protocol: little-endian, length-prefixed frames.
//
//   frame   := u32 body_length | body
//   body    := u8 kind | u64 round | payload
//   assign  := u32 worker_id | u32 block_id | u32 count | count x u64 task ids
//   model   := u32 count | count x f64
//   gradient:= u32 worker_id | u32 block_id | u32 count | count x f64
//   stop    := (empty)
//
// Doubles travel as raw IEEE-754 bits, so values round-trip exactly. Rounds
// are 0-based; a worker announces itself by sending an `assign` frame with
// its worker id and no task ids, and the master replies with the real
// assignment.
enum class MsgKind : std::uint8_t { assign = 1, model = 2, gradient = 3, stop = 4 };

struct Message {
  MsgKind kind = MsgKind::stop;
  std::uint64_t round = 0;
  std::uint32_t worker_id = 0;   // assign, gradient
  std::uint32_t block_id = 0;    // assign, gradient
  std::vector<std::uint64_t> indices;  // assign
  std::vector<double> vec;       // model, gradient

  bool operator==(const Message&) const = default;
};

std::vector<std::uint8_t> encode(const Message& msg);
// Throws ProtocolError on truncated frames, unknown kinds or length mismatches.
Message decode(std::span<const std::uint8_t> body);

struct MasterOptions {
  config::ExperimentConfig config;
  std::string listen = "127.0.0.1:0";
  double accept_timeout_s = 30.0;
};

// One master serving k workers for T synchronous rounds. Construction binds
// the listening socket (port() reports the bound port, useful with port 0);
// run() blocks until the experiment finishes and returns the same RunResult
// shape the simulator produces, with wall times measured in real seconds.
class Master {
 public:
  explicit Master(MasterOptions options);
  ~Master();
  Master(const Master&) = delete;
  Master& operator=(const Master&) = delete;

  std::uint16_t port() const;
  sim::RunResult run();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

sim::RunResult serve_master(const MasterOptions& options);

struct WorkerOptions {
  std::string master_addr;
  int worker_id = 0;
  config::ExperimentConfig config;  // objective construction + n/k/c
  std::string data_dir;             // shard directory for dataset objectives
  std::string delay_table;          // injected sleeps, same format as the simulator's
  std::optional<std::uint64_t> delay_seed;  // seeded exponential sleeps
  double delay_lambda = 0.5;
  int fail_after_round = -1;  // test hook: drop the connection at this round
  int connect_retries = 50;
  double retry_interval_s = 0.1;
};

// Blocks until the master sends stop (returns normally) or the connection
// fails (throws). Sleeps, when configured, happen between computing and
// sending each gradient.
void run_worker(const WorkerOptions& options);

}  // namespace gradcode::net
