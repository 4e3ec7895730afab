#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace gradcode::verify {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct SuiteResult {
  std::string suite;
  std::vector<CheckResult> checks;
  bool all_pass() const;
};

// Exhaustive-enumeration and Monte-Carlo checks of the coverage moments:
// enumeration equality for k <= 12, sampled first/second moments at
// (k=30, ell=3, r=10), p <= q <= 2p, the exponential bound on p, and the
// first two moments of the combined gradient on a random quadratic.
// `budget` is the Monte-Carlo draw count (>= 10000).
SuiteResult run_moments_suite(long budget, std::uint64_t seed);

// Exact-descent replay against the closed-form trajectory, plus mean
// loss-gap envelopes for the debiased unit-step and the scaled-step
// configurations over `budget` seeds (>= 50). bound_scale deliberately
// rescales the theoretical bounds; anything but 1.0 is a corruption hook for
// negative-control testing.
SuiteResult run_convergence_suite(long budget, std::uint64_t seed, double bound_scale = 1.0);

// Monte-Carlo per-iteration times for the three waiting rules against the
// closed forms, `budget` trials per point (>= 10000).
SuiteResult run_runtime_suite(long budget, std::uint64_t seed);

void print(const SuiteResult& result);

}  // namespace gradcode::verify
