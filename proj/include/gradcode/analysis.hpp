#pragma once

#include <cstdint>
#include <string>

namespace gradcode::analysis {

// Straggler moments of the coverage indicators under a uniformly random
// non-straggler set of size r:
//   p = P[a given block is uncovered]            E[Y_i]   = 1 - p
//   q = P[at least one of two blocks uncovered]  E[Y_iY_j] = 1 - q
// Always 0 <= p <= q <= 2p.
struct Moments {
  double p = 0.0;
  double q = 0.0;
};

// p and q as exact fractions over a common denominator C(k, r). Backed by
// 128-bit integers; construction throws if a binomial overflows (k up to
// ~120 is safe, far beyond where exact comparison is ever needed).
struct ExactMoments {
  unsigned __int128 p_num = 0;
  unsigned __int128 q_num = 0;
  unsigned __int128 den = 1;
};

// C(k-ell, r) / C(k, r) and (2 C(k-ell, r) - C(k-2ell, r)) / C(k, r), with the
// convention C(a, b) = 0 for a < b or a < 0. Exact integer arithmetic where it
// fits, stable ratio products otherwise.
Moments moments_exact(int k, int ell, int r);
ExactMoments moments_rational(int k, int ell, int r);

// e^{-c r / n}; always >= the exact p of any FRC(n, k, c) with that r.
double p_upper_bound(int n, int c, int r);

struct ProblemConstants {
  double mu = 0.0;     // PL constant
  double beta = 0.0;   // smoothness
  double sigma = 0.0;  // uniform bound on per-component gradient norms
};

// Geometric envelope: value_at(T, d0) = contraction^T * d0 + floor.
struct RateBound {
  double contraction = 1.0;
  double floor = 0.0;
  double value_at(int T, double delta0) const;
};

// Expected-loss-gap envelopes for the debiased update with step 1/beta and for
// the raw update with step (1-p)/beta:
//   unit step:   (1 - mu/beta)^T d0 + sigma^2/(2(1-p)mu) (p + (q-p)c/((1-p)n))
//   scaled step: (1 - (1-p)mu/beta)^T d0 + (q-p) c sigma^2 / (2(1-p) mu n)
RateBound rate_bound_unit_step(const ProblemConstants& pc, const Moments& m, int n, int c);
RateBound rate_bound_scaled_step(const ProblemConstants& pc, const Moments& m, int n, int c);

// Scaled-step envelope with p replaced by its exponential bound:
//   (1 - (1 - e^{-cr/n}) mu/beta)^T d0 + 2 c e^{-cr/n} sigma^2 / (mu n)
RateBound rate_bound_scaled_step_exp(const ProblemConstants& pc, int n, int c, double r);

double convergence_bound_unit_step(const ProblemConstants& pc, const Moments& m, int n, int c,
                                   int T, double delta0);
double convergence_bound_scaled_step(const ProblemConstants& pc, const Moments& m, int n, int c,
                                     int T, double delta0);

// eps0 = 3 c e^{-cr/n} sigma^2 / (mu n); the accuracy level below which the
// approximate-code guarantee does not reach.
double noise_floor(const ProblemConstants& pc, int n, int c, double r);

// Smallest integer N with (1 - eta*kappa)^N delta0 <= eps/3, kappa = mu/beta.
long iterations_to_eps(const ProblemConstants& pc, double eta, double delta0, double eps);

// Exact-gradient variant: smallest N with (1 - kappa)^N delta0 <= eps.
long iterations_to_eps_exact(const ProblemConstants& pc, double delta0, double eps);

enum class Method { uncoded, egc, agc };

Method method_from_string(const std::string& s);
std::string to_string(Method m);

// Upper bound on the expected wall time to reach accuracy eps, assuming
// lambda = 1/c (required; the per-iteration constants below bake it in):
//   uncoded:  N_exact * (c log n + c + 1)/n
//   egc:      N_exact * (c log(n/c) + c + 1)/n
//   agc:      N * (c^2 log(1/(1-delta)) + c^2 + c)/n,  eta = 1 - e^{-c delta}
// For agc, eps must be at least the noise floor at r = delta * n.
double expected_time_to_eps(Method method, const ProblemConstants& pc, int n, int c, double delta,
                            double lambda, double delta0, double eps);

}  // namespace gradcode::analysis
