#include "gradcode/straggler.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace gradcode::straggler {

double DelayModel::cdf(double t) const {
  if (t <= shift()) return 0.0;
  return 1.0 - std::exp(-rate() * (t - shift()));
}

DelayModel make_delay_model(double lambda, int subtasks) {
  if (!(lambda > 0.0)) throw std::invalid_argument("DelayModel: lambda must be positive");
  if (subtasks < 1) throw std::invalid_argument("DelayModel: subtasks must be >= 1");
  return DelayModel{lambda, subtasks};
}

DelaySample sample_times(const DelayModel& model, int k, Rng& rng) {
  if (k < 1) throw std::invalid_argument("sample_times: k must be >= 1");
  DelaySample out;
  out.seed = rng.root_seed();
  out.times.resize(k);
  for (int j = 0; j < k; ++j) out.times[j] = model.shift() + rng.exponential(model.rate());
  return out;
}

double harmonic(long long m) {
  if (m < 0) throw std::invalid_argument("harmonic: m must be >= 0 (m=" + std::to_string(m) + ")");
  double h = 0.0;
  for (long long i = m; i >= 1; --i) h += 1.0 / static_cast<double>(i);  // small terms first
  return h;
}

double expected_order_statistic(int k, int r, double lambda) {
  if (r < 1 || r > k)
    throw std::invalid_argument("expected_order_statistic: need 1 <= r <= k (k=" +
                                std::to_string(k) + ", r=" + std::to_string(r) + ")");
  if (!(lambda > 0.0)) throw std::invalid_argument("expected_order_statistic: lambda must be positive");
  return (harmonic(k) - harmonic(k - r)) / lambda;
}

double expected_runtime_uncoded(int n, double lambda) {
  if (n < 1) throw std::invalid_argument("expected_runtime_uncoded: n must be >= 1");
  if (!(lambda > 0.0)) throw std::invalid_argument("expected_runtime_uncoded: lambda must be positive");
  return 1.0 / n + harmonic(n) / (lambda * n);
}

double expected_runtime_egc(int n, int c, double lambda) {
  if (n < 1 || c < 1 || n % c != 0)
    throw std::invalid_argument("expected_runtime_egc: c must divide n (n=" + std::to_string(n) +
                                ", c=" + std::to_string(c) + ")");
  if (!(lambda > 0.0)) throw std::invalid_argument("expected_runtime_egc: lambda must be positive");
  return static_cast<double>(c) / n + (harmonic(n) - harmonic(c)) / (lambda * n);
}

double expected_block_coverage_time(int n, int c, double lambda) {
  if (n < 1 || c < 1 || n % c != 0)
    throw std::invalid_argument("expected_block_coverage_time: c must divide n (n=" +
                                std::to_string(n) + ", c=" + std::to_string(c) + ")");
  if (!(lambda > 0.0))
    throw std::invalid_argument("expected_block_coverage_time: lambda must be positive");
  // Each block's first replica finishes after Exp(c * (n/c) lambda) = Exp(n lambda)
  // past the shift; the blocks are independent, so the coverage wait is the max
  // of n/c such variables.
  return static_cast<double>(c) / n + harmonic(n / c) / (lambda * n);
}

double expected_runtime_agc(int n, int c, int r, double lambda) {
  if (n < 1 || c < 1 || n % c != 0)
    throw std::invalid_argument("expected_runtime_agc: c must divide n (n=" + std::to_string(n) +
                                ", c=" + std::to_string(c) + ")");
  if (r < 1 || r > n)
    throw std::invalid_argument("expected_runtime_agc: need 1 <= r <= n (n=" + std::to_string(n) +
                                ", r=" + std::to_string(r) + ")");
  if (!(lambda > 0.0)) throw std::invalid_argument("expected_runtime_agc: lambda must be positive");
  return static_cast<double>(c) / n +
         static_cast<double>(c) / (lambda * n) * (harmonic(n) - harmonic(n - r));
}

}  // namespace gradcode::straggler
