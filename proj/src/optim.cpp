#include "gradcode/optim.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>
#include <unordered_map>

#include "gradcode/linalg.hpp"
#include "gradcode/rng.hpp"

namespace gradcode::optim {

namespace {

using linalg::matvec;
using linalg::matvec_transposed;

struct QuadData {
  int dim = 0;
  std::vector<std::vector<double>> a;
  std::vector<std::vector<double>> b;
  std::vector<double> hessian;
  std::vector<double> minimizer;
  double fstar = 0.0;
};

// Rows grouped into components: component i owns rows [i*rows_per, (i+1)*rows_per).
struct GroupedData {
  dataset::Dataset ds;
  int n_tasks = 0;
  int rows_per = 1;
};

int resolve_tasks(const dataset::Dataset& ds, int n_tasks) {
  if (n_tasks <= 0) return ds.num_rows;
  if (n_tasks > ds.num_rows)
    throw dataset::DataError("objective: dataset has " + std::to_string(ds.num_rows) +
                             " rows, need at least " + std::to_string(n_tasks));
  return n_tasks;
}

// mu/beta from the eigenvalues of a dim x dim curvature matrix, when sensible.
std::optional<analysis::ProblemConstants> constants_from_curvature(std::vector<double> h, int dim,
                                                                   double sigma) {
  if (dim > 128) return std::nullopt;
  auto eig = linalg::jacobi_eigen(std::move(h), dim);
  double lo = eig.values.front(), hi = eig.values.back();
  if (!(hi > 0.0) || lo <= 1e-12 * hi) return std::nullopt;
  return analysis::ProblemConstants{lo, hi, sigma};
}

}  // namespace

QuadraticProblem make_quadratic(int n, int dim, double conditioning, std::uint64_t seed,
                                double delta0) {
  if (n < 1 || dim < 1) throw std::invalid_argument("make_quadratic: n and dim must be >= 1");
  if (!(conditioning >= 1.0) || !std::isfinite(conditioning))
    throw std::invalid_argument("make_quadratic: conditioning must be a finite value >= 1");
  if (!(delta0 > 0.0)) throw std::invalid_argument("make_quadratic: delta0 must be positive");

  Rng rng(seed);
  auto data = std::make_shared<QuadData>();
  data->dim = dim;
  data->a.resize(n);
  data->b.resize(n);

  // Column scales spread the spectrum of E[A^T A] over [1/conditioning, 1].
  std::vector<double> scale(dim, 1.0);
  for (int j = 0; j < dim; ++j) {
    double frac = dim > 1 ? static_cast<double>(j) / (dim - 1) : 1.0;
    scale[j] = std::pow(conditioning, 0.5 * (frac - 1.0));
  }

  std::vector<double> w(dim);
  for (auto& v : w) v = rng.normal();

  double inv_sqrt_dim = 1.0 / std::sqrt(static_cast<double>(dim));
  for (int i = 0; i < n; ++i) {
    auto& ai = data->a[i];
    ai.resize(static_cast<std::size_t>(dim) * dim);
    for (int r = 0; r < dim; ++r)
      for (int j = 0; j < dim; ++j)
        ai[static_cast<std::size_t>(r) * dim + j] = rng.normal() * scale[j] * inv_sqrt_dim;
    auto bi = matvec(ai, dim, dim, w);
    for (auto& v : bi) v += 0.5 * rng.normal();  // residual so grad f_i(x*) != 0
    data->b[i] = std::move(bi);
  }

  // H = (1/n) sum A_i^T A_i and rhs = (1/n) sum A_i^T b_i
  data->hessian.assign(static_cast<std::size_t>(dim) * dim, 0.0);
  std::vector<double> rhs(dim, 0.0);
  for (int i = 0; i < n; ++i) {
    const auto& ai = data->a[i];
    for (int r = 0; r < dim; ++r)
      for (int j = 0; j < dim; ++j) {
        double arj = ai[static_cast<std::size_t>(r) * dim + j];
        rhs[j] += arj * data->b[i][r];
        for (int j2 = 0; j2 <= j; ++j2)
          data->hessian[static_cast<std::size_t>(j) * dim + j2] +=
              arj * ai[static_cast<std::size_t>(r) * dim + j2];
      }
  }
  double inv_n = 1.0 / n;
  for (int j = 0; j < dim; ++j) {
    rhs[j] *= inv_n;
    for (int j2 = 0; j2 <= j; ++j2) {
      auto& v = data->hessian[static_cast<std::size_t>(j) * dim + j2];
      v *= inv_n;
      data->hessian[static_cast<std::size_t>(j2) * dim + j] = v;
    }
  }

  auto eig = linalg::jacobi_eigen(data->hessian, dim);
  double mu = eig.values.front(), beta = eig.values.back();
  if (!(beta > 0.0) || mu <= 1e-12 * beta)
    throw std::invalid_argument("make_quadratic: generated curvature is degenerate; "
                                "lower the conditioning or raise n*dim");

  data->minimizer = linalg::cholesky_solve(data->hessian, dim, rhs);

  // f(x) = f* + 1/2 (x - x*)^T H (x - x*); evaluate f* through the components once.
  double fstar = 0.0;
  for (int i = 0; i < n; ++i) {
    auto r = matvec(data->a[i], dim, dim, data->minimizer);
    for (int j = 0; j < dim; ++j) {
      double d = r[j] - data->b[i][j];
      fstar += 0.5 * d * d;
    }
  }
  data->fstar = fstar * inv_n;

  // start point at exactly delta0 above f*
  std::vector<double> dir(dim);
  for (auto& v : dir) v = rng.normal();
  auto hdir = matvec(data->hessian, dim, dim, dir);
  double quad = 0.5 * linalg::dot(dir, hdir);
  double stretch = std::sqrt(delta0 / quad);
  std::vector<double> x0(dim);
  for (int j = 0; j < dim; ++j) x0[j] = data->minimizer[j] + stretch * dir[j];

  // sigma: max_i (lambda_max(A_i^T A_i) R + ||grad f_i(x*)||) over the ball of
  // radius R = 2 ||x0 - x*||.
  double radius = 2.0 * stretch * linalg::norm(dir);
  double sigma = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto& ai = data->a[i];
    std::vector<double> gram(static_cast<std::size_t>(dim) * dim, 0.0);
    for (int r = 0; r < dim; ++r)
      for (int j = 0; j < dim; ++j)
        for (int j2 = 0; j2 < dim; ++j2)
          gram[static_cast<std::size_t>(j) * dim + j2] +=
              ai[static_cast<std::size_t>(r) * dim + j] * ai[static_cast<std::size_t>(r) * dim + j2];
    double lmax = linalg::jacobi_eigen(std::move(gram), dim).values.back();
    auto res = matvec(ai, dim, dim, data->minimizer);
    for (int j = 0; j < dim; ++j) res[j] -= data->b[i][j];
    double gstar = linalg::norm(matvec_transposed(ai, dim, dim, res));
    sigma = std::max(sigma, lmax * radius + gstar);
  }

  QuadraticProblem out;
  out.hessian = data->hessian;
  out.minimizer = data->minimizer;
  out.fstar = data->fstar;
  out.a = data->a;
  out.b = data->b;

  Objective& obj = out.objective;
  obj.n = n;
  obj.dim = dim;
  obj.constants = analysis::ProblemConstants{mu, beta, sigma};
  obj.optimum_value = data->fstar;
  obj.start_point = x0;
  obj.grad_i = [data](int i, std::span<const double> x, std::span<double> g) {
    auto r = matvec(data->a[i], data->dim, data->dim, x);
    for (int j = 0; j < data->dim; ++j) r[j] -= data->b[i][j];
    auto out_g = matvec_transposed(data->a[i], data->dim, data->dim, r);
    std::copy(out_g.begin(), out_g.end(), g.begin());
  };
  obj.value = [data](std::span<const double> x) {
    std::vector<double> d(data->dim);
    for (int j = 0; j < data->dim; ++j) d[j] = x[j] - data->minimizer[j];
    auto hd = matvec(data->hessian, data->dim, data->dim, d);
    return data->fstar + 0.5 * linalg::dot(d, hd);
  };
  return out;
}

Objective make_least_squares(const dataset::Dataset& ds, int n_tasks) {
  auto data = std::make_shared<GroupedData>();
  data->ds = ds;
  data->n_tasks = resolve_tasks(ds, n_tasks);
  data->rows_per = ds.num_rows / data->n_tasks;

  int dim = ds.num_features;
  Objective obj;
  obj.n = data->n_tasks;
  obj.dim = dim;
  obj.grad_i = [data](int i, std::span<const double> x, std::span<double> g) {
    if (i < 0 || i >= data->n_tasks) throw std::out_of_range("grad_i: component out of range");
    std::fill(g.begin(), g.end(), 0.0);
    for (int r = i * data->rows_per; r < (i + 1) * data->rows_per; ++r) {
      auto a = data->ds.row(r);
      double res = linalg::dot(a, x) - data->ds.labels[r];
      linalg::axpy(res, a, g);
    }
  };
  obj.value = [data](std::span<const double> x) {
    double total = 0.0;
    int kept = data->n_tasks * data->rows_per;
    for (int r = 0; r < kept; ++r) {
      double res = linalg::dot(data->ds.row(r), x) - data->ds.labels[r];
      total += 0.5 * res * res;
    }
    return total / data->n_tasks;
  };
  obj.start_point.assign(dim, 0.0);

  // curvature matrix (1/n) sum over kept rows of a a^T; sigma is only a point
  // estimate at x0 = 0 (least-squares gradients have no uniform bound)
  if (dim <= 128) {
    std::vector<double> h(static_cast<std::size_t>(dim) * dim, 0.0);
    int kept = data->n_tasks * data->rows_per;
    for (int r = 0; r < kept; ++r) {
      auto a = ds.row(r);
      for (int j = 0; j < dim; ++j)
        for (int j2 = 0; j2 < dim; ++j2)
          h[static_cast<std::size_t>(j) * dim + j2] += a[j] * a[j2];
    }
    for (auto& v : h) v /= data->n_tasks;
    double sigma0 = 0.0;
    std::vector<double> g(dim);
    for (int i = 0; i < obj.n; ++i) {
      obj.grad_i(i, obj.start_point, g);
      sigma0 = std::max(sigma0, linalg::norm(g));
    }
    obj.constants = constants_from_curvature(std::move(h), dim, sigma0);
  }
  return obj;
}

Objective make_logistic(const dataset::Dataset& ds, int n_tasks) {
  for (int r = 0; r < ds.num_rows; ++r)
    if (ds.labels[r] != 0.0 && ds.labels[r] != 1.0)
      throw dataset::DataError("logistic labels must be 0 or 1 (row " + std::to_string(r) +
                               " has " + std::to_string(ds.labels[r]) + ")");

  auto data = std::make_shared<GroupedData>();
  data->ds = ds;
  data->n_tasks = resolve_tasks(ds, n_tasks);
  data->rows_per = ds.num_rows / data->n_tasks;

  Objective obj;
  obj.n = data->n_tasks;
  obj.dim = ds.num_features;
  obj.grad_i = [data](int i, std::span<const double> x, std::span<double> g) {
    if (i < 0 || i >= data->n_tasks) throw std::out_of_range("grad_i: component out of range");
    std::fill(g.begin(), g.end(), 0.0);
    for (int r = i * data->rows_per; r < (i + 1) * data->rows_per; ++r) {
      auto a = data->ds.row(r);
      double ysig = data->ds.labels[r] > 0.5 ? 1.0 : -1.0;
      double t = ysig * linalg::dot(a, x);
      double w = -ysig / (1.0 + std::exp(t));
      linalg::axpy(w, a, g);
    }
  };
  obj.value = [data](std::span<const double> x) {
    double total = 0.0;
    int kept = data->n_tasks * data->rows_per;
    for (int r = 0; r < kept; ++r) {
      double ysig = data->ds.labels[r] > 0.5 ? 1.0 : -1.0;
      double t = ysig * linalg::dot(data->ds.row(r), x);
      total += t > 36.0 ? std::exp(-t) : std::log1p(std::exp(-t));
    }
    return total / data->n_tasks;
  };
  obj.start_point.assign(ds.num_features, 0.0);
  return obj;
}

Objective make_sharded(const dataset::ShardSet& shards, const std::string& kind, int n_total,
                       int dim_hint) {
  if (shards.tasks.empty()) throw dataset::DataError("make_sharded: no shards loaded");
  bool logistic = kind == "logistic";
  if (!logistic && kind != "least_squares")
    throw std::invalid_argument("make_sharded: kind must be least_squares or logistic");

  auto data = std::make_shared<dataset::ShardSet>(shards);
  auto index = std::make_shared<std::unordered_map<int, int>>();
  for (std::size_t i = 0; i < data->task_ids.size(); ++i)
    (*index)[data->task_ids[i]] = static_cast<int>(i);

  int dim = dim_hint > 0 ? dim_hint : data->tasks.front().num_features;
  if (logistic)
    for (const auto& t : data->tasks)
      for (double label : t.labels)
        if (label != 0.0 && label != 1.0)
          throw dataset::DataError("logistic labels must be 0 or 1");

  Objective obj;
  obj.n = n_total;
  obj.dim = dim;
  obj.grad_i = [data, index, logistic](int i, std::span<const double> x, std::span<double> g) {
    auto it = index->find(i);
    if (it == index->end())
      throw std::out_of_range("sharded objective: component " + std::to_string(i) +
                              " is not local to this worker");
    const auto& task = data->tasks[it->second];
    std::fill(g.begin(), g.end(), 0.0);
    for (int r = 0; r < task.num_rows; ++r) {
      auto a = task.row(r);
      if (logistic) {
        double ysig = task.labels[r] > 0.5 ? 1.0 : -1.0;
        double t = ysig * linalg::dot(a, x);
        linalg::axpy(-ysig / (1.0 + std::exp(t)), a, g);
      } else {
        linalg::axpy(linalg::dot(a, x) - task.labels[r], a, g);
      }
    }
  };
  obj.value = [](std::span<const double>) -> double {
    throw std::logic_error("sharded objective: global value is not available on a worker");
  };
  obj.start_point.assign(dim, 0.0);
  return obj;
}

std::vector<double> block_sum(const Objective& objective, int block_index,
                              std::span<const double> x, int c) {
  int blocks = objective.n / c;
  if (c < 1 || objective.n % c != 0)
    throw std::invalid_argument("block_sum: c must divide the component count");
  if (block_index < 0 || block_index >= blocks)
    throw std::out_of_range("block_sum: block index out of range");
  std::vector<double> acc(objective.dim, 0.0);
  std::vector<double> g(objective.dim);
  for (int j = 0; j < c; ++j) {
    objective.grad_i(block_index * c + j, x, g);
    linalg::axpy(1.0, g, acc);
  }
  return acc;
}

std::vector<double> full_gradient(const Objective& objective, std::span<const double> x,
                                  double* max_component_norm) {
  std::vector<double> acc(objective.dim, 0.0);
  std::vector<double> g(objective.dim);
  double max_norm = 0.0;
  for (int i = 0; i < objective.n; ++i) {
    objective.grad_i(i, x, g);
    if (max_component_norm) max_norm = std::max(max_norm, linalg::norm(g));
    linalg::axpy(1.0, g, acc);
  }
  double inv_n = 1.0 / objective.n;
  for (auto& v : acc) v *= inv_n;
  if (max_component_norm) *max_component_norm = max_norm;
  return acc;
}

std::vector<double> gd_step(std::span<const double> x, std::span<const double> g, double gamma) {
  if (x.size() != g.size()) throw std::invalid_argument("gd_step: dimension mismatch");
  if (!(gamma > 0.0)) throw std::invalid_argument("gd_step: gamma must be positive");
  std::vector<double> out(x.begin(), x.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= gamma * g[i];
  return out;
}

StepPolicyKind step_policy_from_string(const std::string& s) {
  if (s == "inv_beta") return StepPolicyKind::inv_beta;
  if (s == "scaled_inv_beta") return StepPolicyKind::scaled_inv_beta;
  if (s == "schedule") return StepPolicyKind::schedule;
  throw std::invalid_argument("unknown step policy '" + s +
                              "' (expected inv_beta, scaled_inv_beta or schedule)");
}

std::string to_string(StepPolicyKind k) {
  switch (k) {
    case StepPolicyKind::inv_beta: return "inv_beta";
    case StepPolicyKind::scaled_inv_beta: return "scaled_inv_beta";
    case StepPolicyKind::schedule: return "schedule";
  }
  return "?";
}

double step_size(const StepPolicy& policy,
                 const std::optional<analysis::ProblemConstants>& constants, double p, int t) {
  switch (policy.kind) {
    case StepPolicyKind::inv_beta:
      if (!constants || !(constants->beta > 0.0))
        throw std::invalid_argument("step policy inv_beta requires problem constants");
      return 1.0 / constants->beta;
    case StepPolicyKind::scaled_inv_beta:
      if (!constants || !(constants->beta > 0.0))
        throw std::invalid_argument("step policy scaled_inv_beta requires problem constants");
      if (p < 0.0 || p >= 1.0)
        throw std::domain_error("step policy scaled_inv_beta: need 0 <= p < 1");
      return (1.0 - p) / constants->beta;
    case StepPolicyKind::schedule:
      if (!(policy.gamma0 > 0.0) || !(policy.rho > 0.0))
        throw std::invalid_argument("step policy schedule requires gamma0 > 0 and rho > 0");
      return policy.gamma0 * std::pow(policy.rho, t);
  }
  throw std::logic_error("step_size: unreachable");
}

}  // namespace gradcode::optim
