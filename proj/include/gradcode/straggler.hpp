#pragma once

#include <cstdint>
#include <vector>

#include "gradcode/rng.hpp"

namespace gradcode::straggler {

// Shifted-exponential completion-time model. A full-gradient job takes
// 1 + Exp(lambda); split into `subtasks` groups, each group takes
// 1/subtasks + Exp(subtasks * lambda). Times are in units of one full job.
// Smaller lambda means a heavier straggler tail.
struct DelayModel {
  double lambda = 1.0;
  int subtasks = 1;  // B

  double shift() const { return 1.0 / subtasks; }
  double rate() const { return subtasks * lambda; }
  // P[time <= t]
  double cdf(double t) const;
};

DelayModel make_delay_model(double lambda, int subtasks);

struct DelaySample {
  std::vector<double> times;
  std::uint64_t seed = 0;
};

// k i.i.d. completion times; deterministic given the generator state.
DelaySample sample_times(const DelayModel& model, int k, Rng& rng);

// Partial harmonic sum H_m = 1 + 1/2 + ... + 1/m, with H_0 = 0.
double harmonic(long long m);

// E[r-th smallest of k i.i.d. Exp(lambda)] = (H_k - H_{k-r}) / lambda.
double expected_order_statistic(int k, int r, double lambda);

// Expected per-iteration wall time when each of n workers computes one task
// and all must finish: 1/n + H_n/(lambda n). Assumes n = k.
double expected_runtime_uncoded(int n, double lambda);

// Closed form c/n + (H_n - H_c)/(lambda n) for the exact-code wait with c
// tasks per worker. Assumes n = k. Note: the operational block-coverage stop
// (every block has a finisher) has mean expected_block_coverage_time below,
// which is strictly larger; both are kept so either can be reported.
double expected_runtime_egc(int n, int c, double lambda);

// Exact mean of the block-coverage stopping time: max over n/c blocks of the
// min over c replicas, i.e. c/n + H_{n/c}/(lambda n). Assumes n = k.
double expected_block_coverage_time(int n, int c, double lambda);

// Upper bound on the approximate-code wait via the r-th order statistic:
// c/n + (c/(lambda n)) (H_n - H_{n-r}). Assumes n = k.
double expected_runtime_agc(int n, int c, int r, double lambda);

}  // namespace gradcode::straggler
