#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "gradcode/analysis.hpp"
#include "gradcode/dataset.hpp"

namespace gradcode::optim {

// Decomposable objective f(x) = (1/n) sum_i f_i(x) with a per-component
// gradient oracle. Immutable after construction; oracles are safe to call
// concurrently.
struct Objective {
  int n = 0;
  int dim = 0;
  // writes the gradient of component i at x into out (dim entries)
  std::function<void(int i, std::span<const double> x, std::span<double> out)> grad_i;
  std::function<double(std::span<const double> x)> value;
  std::optional<analysis::ProblemConstants> constants;
  std::optional<double> optimum_value;
  std::vector<double> start_point;  // canonical x0; may be empty
};

struct ModelState {
  std::vector<double> x;
  int t = 0;
};

// Synthetic sum of quadratics f_i(x) = 1/2 ||A_i x - b_i||^2. mu and beta are
// the extreme eigenvalues of H = (1/n) sum A_i^T A_i, and the minimizer and
// f* are computed in closed form. sigma is an upper bound on max_i ||grad
// f_i(x)|| over the ball of radius 2 ||x0 - x*|| around x* (an estimate of
// the uniform bound for the region a run actually visits). x0 is generated so
// that f(x0) - f* = delta0.
struct QuadraticProblem {
  Objective objective;
  std::vector<double> hessian;  // dim x dim, row-major
  std::vector<double> minimizer;
  double fstar = 0.0;
  std::vector<std::vector<double>> a;  // per-component A_i, dim x dim
  std::vector<std::vector<double>> b;  // per-component b_i
};

QuadraticProblem make_quadratic(int n, int dim, double conditioning, std::uint64_t seed,
                                double delta0 = 1.0);

// f_i = 1/2 (a_i^T x - y_i)^2. When n_tasks < rows, consecutive rows are
// grouped and each component is the summed loss of its group (rows beyond
// n_tasks * floor(rows/n_tasks) are ignored). mu/beta are attached when the
// empirical second-moment matrix is positive definite and small enough to
// eigendecompose; sigma is not (least-squares gradients are unbounded).
Objective make_least_squares(const dataset::Dataset& ds, int n_tasks = -1);

// f_i = log(1 + exp(-y~_i a_i^T x)) with labels in {0,1} mapped to y~ = +-1.
Objective make_logistic(const dataset::Dataset& ds, int n_tasks = -1);

// Objective over a worker's local shards only: component index i must be one
// of the loaded task ids. kind is "least_squares" or "logistic".
Objective make_sharded(const dataset::ShardSet& shards, const std::string& kind, int n_total,
                       int dim_hint = -1);

// Unnormalized sum of the c component gradients of one block.
std::vector<double> block_sum(const Objective& objective, int block_index,
                              std::span<const double> x, int c);

// (1/n) sum_i grad f_i(x); max_component_norm, when given, receives
// max_i ||grad f_i(x)||.
std::vector<double> full_gradient(const Objective& objective, std::span<const double> x,
                                  double* max_component_norm = nullptr);

std::vector<double> gd_step(std::span<const double> x, std::span<const double> g, double gamma);

enum class StepPolicyKind { inv_beta, scaled_inv_beta, schedule };

struct StepPolicy {
  StepPolicyKind kind = StepPolicyKind::inv_beta;
  double gamma0 = 0.1;  // schedule only
  double rho = 0.99;    // schedule only

  bool operator==(const StepPolicy&) const = default;
};

StepPolicyKind step_policy_from_string(const std::string& s);
std::string to_string(StepPolicyKind k);

// inv_beta -> 1/beta, scaled_inv_beta -> (1-p)/beta, schedule -> gamma0 rho^t.
double step_size(const StepPolicy& policy,
                 const std::optional<analysis::ProblemConstants>& constants, double p, int t);

}  // namespace gradcode::optim
