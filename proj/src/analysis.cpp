#include "gradcode/analysis.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace gradcode::analysis {

namespace {

using u128 = unsigned __int128;

// C(a, b) in 128-bit integers; sets overflow instead of wrapping.
// Convention: C(a, b) = 0 for a < 0, b < 0 or a < b.
u128 binom_u128(long long a, long long b, bool& overflow) {
  if (a < 0 || b < 0 || b > a) return 0;
  if (b > a - b) b = a - b;
  u128 result = 1;
  for (long long i = 1; i <= b; ++i) {
    u128 factor = static_cast<u128>(a - b + i);
    if (result > ~static_cast<u128>(0) / factor) {
      overflow = true;
      return 0;
    }
    result = result * factor / static_cast<u128>(i);  // divides exactly at each step
  }
  return result;
}

// C(a, r) / C(k, r) as a product of ratios in [0, 1]; stable for any size.
double binom_ratio(long long a, long long k, long long r) {
  if (a < 0 || r > a) return 0.0;
  double out = 1.0;
  for (long long i = 0; i < r; ++i)
    out *= static_cast<double>(a - i) / static_cast<double>(k - i);
  return out;
}

void check_moment_args(int k, int ell, int r) {
  if (k < 1) throw std::invalid_argument("moments: k must be >= 1");
  if (ell < 1 || ell > k)
    throw std::invalid_argument("moments: need 1 <= ell <= k (k=" + std::to_string(k) +
                                ", ell=" + std::to_string(ell) + ")");
  if (r < 1 || r > k)
    throw std::invalid_argument("moments: need 1 <= r <= k (k=" + std::to_string(k) +
                                ", r=" + std::to_string(r) + ")");
}

double kappa_of(const ProblemConstants& pc) {
  if (!(pc.beta > 0.0) || !(pc.mu > 0.0) || pc.mu > pc.beta)
    throw std::invalid_argument("ProblemConstants: need 0 < mu <= beta");
  return pc.mu / pc.beta;
}

}  // namespace

ExactMoments moments_rational(int k, int ell, int r) {
  check_moment_args(k, ell, r);
  bool overflow = false;
  u128 den = binom_u128(k, r, overflow);
  u128 a = binom_u128(k - ell, r, overflow);
  u128 b = binom_u128(static_cast<long long>(k) - 2LL * ell, r, overflow);
  if (overflow || a > ~static_cast<u128>(0) / 2)
    throw std::overflow_error("moments_rational: binomial exceeds 128 bits (k=" +
                              std::to_string(k) + ", r=" + std::to_string(r) + ")");
  ExactMoments out;
  out.den = den;
  out.p_num = a;
  out.q_num = 2 * a - b;  // b <= a, so this stays nonnegative
  return out;
}

Moments moments_exact(int k, int ell, int r) {
  check_moment_args(k, ell, r);
  Moments out;
  try {
    ExactMoments em = moments_rational(k, ell, r);
    out.p = static_cast<double>(em.p_num) / static_cast<double>(em.den);
    out.q = static_cast<double>(em.q_num) / static_cast<double>(em.den);
  } catch (const std::overflow_error&) {
    double pa = binom_ratio(k - ell, k, r);
    double pb = binom_ratio(static_cast<long long>(k) - 2LL * ell, k, r);
    out.p = pa;
    out.q = 2.0 * pa - pb;
  }
  return out;
}

double p_upper_bound(int n, int c, int r) {
  if (n < 1 || c < 1 || r < 0) throw std::invalid_argument("p_upper_bound: bad arguments");
  return std::exp(-static_cast<double>(c) * r / n);
}

double RateBound::value_at(int T, double delta0) const {
  if (T < 0) throw std::invalid_argument("RateBound: T must be >= 0");
  return std::pow(contraction, T) * delta0 + floor;
}

RateBound rate_bound_unit_step(const ProblemConstants& pc, const Moments& m, int n, int c) {
  double kappa = kappa_of(pc);
  if (m.p >= 1.0) throw std::domain_error("rate_bound_unit_step: p = 1, nothing is recoverable");
  RateBound rb;
  rb.contraction = 1.0 - kappa;
  rb.floor = pc.sigma * pc.sigma / (2.0 * (1.0 - m.p) * pc.mu) *
             (m.p + (m.q - m.p) * c / ((1.0 - m.p) * n));
  return rb;
}

RateBound rate_bound_scaled_step(const ProblemConstants& pc, const Moments& m, int n, int c) {
  double kappa = kappa_of(pc);
  if (m.p >= 1.0) throw std::domain_error("rate_bound_scaled_step: p = 1, nothing is recoverable");
  RateBound rb;
  rb.contraction = 1.0 - (1.0 - m.p) * kappa;
  rb.floor = (m.q - m.p) * c * pc.sigma * pc.sigma / (2.0 * (1.0 - m.p) * pc.mu * n);
  return rb;
}

RateBound rate_bound_scaled_step_exp(const ProblemConstants& pc, int n, int c, double r) {
  double kappa = kappa_of(pc);
  double pbar = std::exp(-c * r / n);
  RateBound rb;
  rb.contraction = 1.0 - (1.0 - pbar) * kappa;
  rb.floor = 2.0 * c * pbar * pc.sigma * pc.sigma / (pc.mu * n);
  return rb;
}

double convergence_bound_unit_step(const ProblemConstants& pc, const Moments& m, int n, int c,
                                   int T, double delta0) {
  if (T < 0 || delta0 < 0.0)
    throw std::invalid_argument("convergence_bound_unit_step: need T >= 0 and delta0 >= 0");
  return rate_bound_unit_step(pc, m, n, c).value_at(T, delta0);
}

double convergence_bound_scaled_step(const ProblemConstants& pc, const Moments& m, int n, int c,
                                     int T, double delta0) {
  if (T < 0 || delta0 < 0.0)
    throw std::invalid_argument("convergence_bound_scaled_step: need T >= 0 and delta0 >= 0");
  return rate_bound_scaled_step(pc, m, n, c).value_at(T, delta0);
}

double noise_floor(const ProblemConstants& pc, int n, int c, double r) {
  if (n < 1 || c < 1 || r < 0) throw std::invalid_argument("noise_floor: bad arguments");
  if (!(pc.mu > 0.0)) throw std::invalid_argument("noise_floor: mu must be positive");
  return 3.0 * c * std::exp(-c * r / n) * pc.sigma * pc.sigma / (pc.mu * n);
}

long iterations_to_eps(const ProblemConstants& pc, double eta, double delta0, double eps) {
  double kappa = kappa_of(pc);
  if (!(eps > 0.0)) throw std::invalid_argument("iterations_to_eps: eps must be positive");
  if (eta <= 0.0) throw std::invalid_argument("iterations_to_eps: eta must be positive");
  if (eps >= 3.0 * delta0) return 0;  // met at N = 0
  double ek = eta * kappa;
  if (ek >= 1.0) return 1;  // contraction factor <= 0: one step suffices
  return static_cast<long>(std::ceil(std::log(3.0 * delta0 / eps) / std::log(1.0 / (1.0 - ek))));
}

long iterations_to_eps_exact(const ProblemConstants& pc, double delta0, double eps) {
  double kappa = kappa_of(pc);
  if (!(eps > 0.0)) throw std::invalid_argument("iterations_to_eps_exact: eps must be positive");
  if (eps >= delta0) return 0;
  if (kappa >= 1.0) return 1;
  return static_cast<long>(std::ceil(std::log(delta0 / eps) / std::log(1.0 / (1.0 - kappa))));
}

Method method_from_string(const std::string& s) {
  if (s == "uncoded") return Method::uncoded;
  if (s == "egc") return Method::egc;
  if (s == "agc") return Method::agc;
  throw std::invalid_argument("unknown method '" + s + "' (expected uncoded, egc or agc)");
}

std::string to_string(Method m) {
  switch (m) {
    case Method::uncoded: return "uncoded";
    case Method::egc: return "egc";
    case Method::agc: return "agc";
  }
  return "?";
}

double expected_time_to_eps(Method method, const ProblemConstants& pc, int n, int c, double delta,
                            double lambda, double delta0, double eps) {
  if (n < 1 || c < 1 || n % c != 0)
    throw std::invalid_argument("expected_time_to_eps: c must divide n");
  if (std::abs(lambda * c - 1.0) > 1e-9)
    throw std::invalid_argument(
        "expected_time_to_eps: the per-iteration constants assume lambda = 1/c");
  double logn = std::log(static_cast<double>(n));
  switch (method) {
    case Method::uncoded: {
      long iters = iterations_to_eps_exact(pc, delta0, eps);
      return iters * (c * logn + c + 1.0) / n;
    }
    case Method::egc: {
      long iters = iterations_to_eps_exact(pc, delta0, eps);
      return iters * (c * std::log(static_cast<double>(n) / c) + c + 1.0) / n;
    }
    case Method::agc: {
      if (!(delta > 0.0 && delta < 1.0))
        throw std::invalid_argument("expected_time_to_eps: agc needs delta in (0,1)");
      double eps0 = noise_floor(pc, n, c, delta * n);
      if (eps < eps0)
        throw std::domain_error("expected_time_to_eps: eps " + std::to_string(eps) +
                                " is below the noise floor " + std::to_string(eps0));
      double eta = 1.0 - std::exp(-c * delta);
      long iters = iterations_to_eps(pc, eta, delta0, eps);
      return iters * (c * c * std::log(1.0 / (1.0 - delta)) + c * c + c) / n;
    }
  }
  throw std::logic_error("expected_time_to_eps: unreachable");
}

}  // namespace gradcode::analysis
