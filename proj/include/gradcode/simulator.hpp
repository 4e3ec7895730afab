#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gradcode/codes.hpp"
#include "gradcode/config.hpp"
#include "gradcode/optim.hpp"
#include "gradcode/rng.hpp"
#include "gradcode/straggler.hpp"

namespace gradcode::sim {

enum class WaitKind { uncoded_all, egc_all_blocks, agc_fraction };

// Stopping rule applied to the sorted completion times of one round:
//   uncoded_all     wait for every worker (requires c = 1)
//   egc_all_blocks  wait until every block has a finisher
//   agc_fraction    wait for ceil(delta*k) finishers, or full coverage if
//                   that happens first
struct WaitPolicy {
  WaitKind kind = WaitKind::egc_all_blocks;
  double delta = 1.0;
};

WaitPolicy wait_policy_for(analysis::Method method, double delta);

// ceil(delta * k) with a tolerance so exact integer products stay put.
int agc_threshold(double delta, int k);

struct IterationRecord {
  int t = 0;
  std::vector<int> finished_workers;  // non-straggler set, completion order
  int covered_blocks = 0;
  double wall_time = 0.0;  // when the stopping rule fired
  double loss = 0.0;       // f(x_t), before the step
  double grad_error = 0.0; // ||g_used - grad f(x_t)||
};

struct RunResult {
  config::ExperimentConfig config;
  std::uint64_t seed = 0;
  std::vector<IterationRecord> records;
  double total_time = 0.0;
  double final_loss = 0.0;
  double sigma_observed = 0.0;  // max_i ||grad f_i|| seen along the run
  std::vector<double> final_x;
  std::vector<std::vector<double>> iterates;  // filled when config.track_iterates
};

// Injected per-(round, worker) delays; rounds or workers without an entry get
// delay 0. File format: whitespace-separated "round worker seconds" lines,
// '#' comments.
class DelayTable {
 public:
  static DelayTable load(const std::string& path);
  void set(int round, int worker, double seconds);
  double at(int round, int worker) const;

 private:
  std::vector<std::vector<double>> by_round_;
};

// One synchronous round: sample (or inject) completion times, apply the
// waiting rule, combine the covered block sums, optionally debias, and take
// the descent step. p_debias is the analytical uncovered-block probability
// used by debiasing and the scaled step.
struct IterationOutcome {
  std::vector<double> x_next;
  std::vector<double> gradient_used;
  IterationRecord record;
  double max_component_grad_norm = 0.0;  // max_i ||grad f_i(x_t)||
};

IterationOutcome run_iteration(const codes::AssignmentMatrix& matrix,
                               const optim::Objective& objective, std::span<const double> x,
                               const WaitPolicy& policy, const straggler::DelayModel& delays,
                               const optim::StepPolicy& step, bool debias, double p_debias, int t,
                               Rng& rng, const DelayTable* table = nullptr);

// Builds the objective named by the config (loading datasets if needed).
optim::Objective make_objective(const config::ExperimentConfig& cfg);

RunResult run_experiment(const config::ExperimentConfig& cfg);
RunResult run_experiment(const config::ExperimentConfig& cfg, std::uint64_t seed_override);
// Same replay over a caller-supplied objective (cfg.objective is ignored).
RunResult run_experiment(const config::ExperimentConfig& cfg, std::uint64_t seed_override,
                         const optim::Objective& objective);

struct Summary {
  int iterations = 0;
  int runs = 0;
  std::vector<double> loss_mean, loss_lo, loss_hi;  // 95% band across runs
  std::vector<double> wall_mean, wall_lo, wall_hi;
  double total_time_mean = 0.0;
  std::optional<double> threshold;
  std::optional<double> time_to_threshold_mean;  // mean over runs that reached it
  int runs_reaching_threshold = 0;
};

Summary summarize(const std::vector<RunResult>& results,
                  std::optional<double> threshold = std::nullopt);

// Time-to-threshold ratio base/target; > 1 means target reached it faster.
// Empty when either side lacks a threshold time.
std::optional<double> speedup_ratio(const Summary& base, const Summary& target);

}  // namespace gradcode::sim
