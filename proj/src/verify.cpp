#include "gradcode/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "gradcode/analysis.hpp"
#include "gradcode/codes.hpp"
#include "gradcode/linalg.hpp"
#include "gradcode/optim.hpp"
#include "gradcode/rng.hpp"
#include "gradcode/simulator.hpp"
#include "gradcode/straggler.hpp"

namespace gradcode::verify {

namespace {

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

int popcount(unsigned mask) { return __builtin_popcount(mask); }

// Counts, over every size-r subset of k workers (groups of ell), how often a
// single block is uncovered and how often at least one of two blocks is.
struct EnumCounts {
  unsigned long long single = 0;
  unsigned long long pair = 0;
  unsigned long long total = 0;
};

EnumCounts enumerate_coverage(int k, int ell, int r, int block_a, int block_b) {
  EnumCounts counts;
  for (unsigned mask = 0; mask < (1u << k); ++mask) {
    if (popcount(mask) != r) continue;
    ++counts.total;
    auto block_covered = [&](int b) {
      for (int j = b * ell; j < (b + 1) * ell; ++j)
        if (mask & (1u << j)) return true;
      return false;
    };
    bool a = block_covered(block_a), b = block_covered(block_b);
    if (!a) ++counts.single;
    if (!a || !b) ++counts.pair;
  }
  return counts;
}

}  // namespace

bool SuiteResult::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

SuiteResult run_moments_suite(long budget, std::uint64_t seed) {
  if (budget < 10000) budget = 10000;
  SuiteResult suite{"moments", {}};

  // exhaustive enumeration vs the closed form, exact rational comparison
  {
    bool all_equal = true;
    long points = 0;
    std::string first_bad;
    for (int k = 2; k <= 12; ++k) {
      for (int ell = 1; ell <= k; ++ell) {
        if (k % ell != 0) continue;
        int blocks = k / ell;
        for (int r = 1; r <= k; ++r) {
          auto em = analysis::moments_rational(k, ell, r);
          for (int a = 0; a < blocks && all_equal; ++a) {
            int b = (a + 1) % blocks;
            auto counts = enumerate_coverage(k, ell, r, a, b == a ? a : b);
            bool ok = counts.total == static_cast<unsigned long long>(em.den) &&
                      counts.single == static_cast<unsigned long long>(em.p_num);
            if (blocks > 1 && b != a)
              ok = ok && counts.pair == static_cast<unsigned long long>(em.q_num);
            if (!ok) {
              all_equal = false;
              first_bad = fmt("k=%d ell=%d r=%d block=%d", k, ell, r, a);
            }
          }
          ++points;
        }
      }
    }
    suite.checks.push_back({"enumeration_equality",
                            all_equal,
                            all_equal ? fmt("%ld (k,ell,r) points, exact match", points)
                                      : "mismatch at " + first_bad});
  }

  // sampled E[Y_i], E[Y_i Y_j] at (k=30, ell=3, r=10)
  {
    const int k = 30, ell = 3, r = 10;
    auto m = analysis::moments_exact(k, ell, r);
    Rng rng = Rng(seed).substream({1});
    long n_draws = budget;
    long y0_sum = 0, y01_sum = 0;
    for (long d = 0; d < n_draws; ++d) {
      auto subset = random_subset(k, r, rng);
      bool y0 = false, y1 = false;
      for (int w : subset) {
        if (w / ell == 0) y0 = true;
        if (w / ell == 1) y1 = true;
      }
      y0_sum += y0;
      y01_sum += y0 && y1;
    }
    double mean0 = static_cast<double>(y0_sum) / n_draws;
    double mean01 = static_cast<double>(y01_sum) / n_draws;
    double se0 = std::sqrt(std::max(mean0 * (1 - mean0), 1e-12) / n_draws);
    double se01 = std::sqrt(std::max(mean01 * (1 - mean01), 1e-12) / n_draws);
    bool ok = std::abs(mean0 - (1 - m.p)) <= 4 * se0 && std::abs(mean01 - (1 - m.q)) <= 4 * se01;
    suite.checks.push_back(
        {"sampled_first_moments", ok,
         fmt("E[Y]=%.5f pred %.5f (se %.5f); E[YY]=%.5f pred %.5f (se %.5f); %ld draws", mean0,
             1 - m.p, se0, mean01, 1 - m.q, se01, n_draws)});
  }

  // p <= q <= 2p and p <= e^{-cr/n} on a parameter grid (n = k, so ell = c)
  {
    bool order_ok = true, bound_ok = true;
    int points = 0;
    std::string bad;
    for (int n : {6, 12, 20, 30, 36, 42, 60}) {
      for (int c = 1; c <= n / 2; ++c) {
        if (n % c != 0) continue;
        for (int r : {1, n / 4, n / 2, 3 * n / 4, n}) {
          if (r < 1 || r > n) continue;
          auto m = analysis::moments_exact(n, c, r);
          if (!(m.p <= m.q + 1e-12 && m.q <= 2 * m.p + 1e-12)) {
            order_ok = false;
            bad = fmt("n=%d c=%d r=%d", n, c, r);
          }
          if (m.p > analysis::p_upper_bound(n, c, r) + 1e-12) {
            bound_ok = false;
            bad = fmt("n=%d c=%d r=%d", n, c, r);
          }
          ++points;
        }
      }
    }
    suite.checks.push_back({"moment_ordering", order_ok,
                            order_ok ? fmt("p <= q <= 2p on %d grid points", points)
                                     : "violated at " + bad});
    suite.checks.push_back({"exponential_p_bound", bound_ok,
                            bound_ok ? fmt("p <= exp(-cr/n) on %d grid points", points)
                                     : "violated at " + bad});
  }

  // first and second moments of the combined gradient on a random quadratic
  {
    const int n = 30, c = 3, k = 30, r = 10, dim = 10;
    auto problem = optim::make_quadratic(n, dim, 8.0, splitmix64(seed ^ 0x1ee7), 1.0);
    const auto& obj = problem.objective;
    auto matrix = codes::build_frc(n, k, c);
    auto m = analysis::moments_exact(k, matrix.params.ell, r);

    std::vector<double> x = obj.start_point;
    auto grad = optim::full_gradient(obj, x);
    int blocks = matrix.params.block_count();
    std::vector<std::vector<double>> block_sums(blocks);
    double block_norm2_sum = 0.0;
    for (int b = 0; b < blocks; ++b) {
      block_sums[b] = optim::block_sum(obj, b, x, c);
      double nb = linalg::norm(block_sums[b]);
      block_norm2_sum += nb * nb;
    }
    double grad_norm2 = linalg::dot(grad, grad);
    double pred_norm2 = (1 - m.q) * grad_norm2 +
                        (m.q - m.p) / (static_cast<double>(n) * n) * block_norm2_sum;

    Rng rng = Rng(seed).substream({2});
    long n_draws = budget;
    std::vector<double> sum(dim, 0.0), sumsq(dim, 0.0);
    double norm2_sum = 0.0, norm2_sumsq = 0.0;
    for (long d = 0; d < n_draws; ++d) {
      auto subset = random_subset(k, r, rng);
      auto y = codes::coverage(matrix, subset);
      auto g = codes::combine(block_sums, y, n);
      double g2 = linalg::dot(g, g);
      norm2_sum += g2;
      norm2_sumsq += g2 * g2;
      for (int j = 0; j < dim; ++j) {
        sum[j] += g[j];
        sumsq[j] += g[j] * g[j];
      }
    }
    bool mean_ok = true;
    double worst_z = 0.0;
    for (int j = 0; j < dim; ++j) {
      double mean = sum[j] / n_draws;
      double var = std::max(sumsq[j] / n_draws - mean * mean, 1e-18);
      double se = std::sqrt(var / n_draws);
      double z = std::abs(mean - (1 - m.p) * grad[j]) / se;
      worst_z = std::max(worst_z, z);
      if (z > 4.0) mean_ok = false;
    }
    double mean_n2 = norm2_sum / n_draws;
    double var_n2 = std::max(norm2_sumsq / n_draws - mean_n2 * mean_n2, 1e-18);
    double se_n2 = std::sqrt(var_n2 / n_draws);
    bool norm_ok = std::abs(mean_n2 - pred_norm2) <= 4 * se_n2;
    suite.checks.push_back({"combined_gradient_mean", mean_ok,
                            fmt("max |z| = %.2f over %d components, %ld draws", worst_z, dim,
                                n_draws)});
    suite.checks.push_back({"combined_gradient_second_moment", norm_ok,
                            fmt("E||g||^2 = %.6g pred %.6g (se %.2g)", mean_n2, pred_norm2,
                                se_n2)});
  }

  return suite;
}

SuiteResult run_convergence_suite(long budget, std::uint64_t seed, double bound_scale) {
  if (budget < 50) budget = 50;
  SuiteResult suite{"convergence", {}};

  // exact replay: no stragglers, step 1/beta, against the spectral closed form
  {
    const int n = 16, dim = 8, T = 60;
    auto problem = optim::make_quadratic(n, dim, 12.0, splitmix64(seed ^ 0xabc), 1.0);
    const auto& pc = *problem.objective.constants;

    config::ExperimentConfig cfg;
    cfg.method = analysis::Method::egc;
    cfg.n = n;
    cfg.k = n;
    cfg.c = 2;
    cfg.lambda = 1e9;
    cfg.iterations = T;
    cfg.seed = splitmix64(seed ^ 0xabc);  // same generation seed as `problem`
    cfg.gamma.kind = optim::StepPolicyKind::inv_beta;
    cfg.objective.kind = "quadratic";
    cfg.objective.dim = dim;
    cfg.objective.conditioning = 12.0;
    cfg.objective.seed = cfg.seed;
    auto run = sim::run_experiment(cfg);

    auto eig = linalg::jacobi_eigen(problem.hessian, dim);
    std::vector<double> d0(dim);
    for (int j = 0; j < dim; ++j) d0[j] = problem.objective.start_point[j] - problem.minimizer[j];
    std::vector<double> z(dim, 0.0);
    for (int j = 0; j < dim; ++j)
      for (int i = 0; i < dim; ++i)
        z[j] += eig.vectors[static_cast<std::size_t>(i) * dim + j] * d0[i];

    double worst_rel = 0.0;
    bool linear_rate_ok = true;
    double delta0 = run.records[0].loss - problem.fstar;
    double kappa = pc.mu / pc.beta;
    for (int t = 0; t < T; ++t) {
      double gap_pred = 0.0;
      for (int j = 0; j < dim; ++j) {
        double factor = std::pow(1.0 - eig.values[j] / pc.beta, t);
        gap_pred += 0.5 * eig.values[j] * factor * factor * z[j] * z[j];
      }
      double gap_sim = run.records[t].loss - problem.fstar;
      worst_rel = std::max(worst_rel, std::abs(gap_sim - gap_pred) / std::max(gap_pred, 1e-300));
      if (gap_sim > std::pow(1.0 - kappa, t) * delta0 * (1.0 + 1e-9)) linear_rate_ok = false;
    }
    suite.checks.push_back({"exact_descent_closed_form", worst_rel < 1e-8,
                            fmt("max relative error %.3g over %d iterations", worst_rel, T)});
    suite.checks.push_back({"exact_descent_linear_rate", linear_rate_ok,
                            fmt("loss gap under (1-mu/beta)^t envelope for %d iterations", T)});
  }

  // mean loss-gap envelopes for the two analyzed configurations
  for (bool debias : {true, false}) {
    const int n = 30, dim = 8, T = 50;
    const int seeds = static_cast<int>(budget);
    const double delta = 0.4;
    std::uint64_t obj_seed = splitmix64(seed ^ 0x5eed);

    config::ExperimentConfig cfg;
    cfg.method = analysis::Method::agc;
    cfg.n = n;
    cfg.k = n;
    cfg.c = 2;
    cfg.delta = delta;
    cfg.lambda = 0.5;
    cfg.iterations = T;
    cfg.gamma.kind =
        debias ? optim::StepPolicyKind::inv_beta : optim::StepPolicyKind::scaled_inv_beta;
    cfg.debias = debias;
    cfg.objective.kind = "quadratic";
    cfg.objective.dim = dim;
    cfg.objective.conditioning = 10.0;
    cfg.objective.seed = obj_seed;

    auto problem = optim::make_quadratic(n, dim, 10.0, obj_seed, 1.0);
    const auto& pc = *problem.objective.constants;
    int r = sim::agc_threshold(delta, n);
    auto m = analysis::moments_exact(n, 2, r);
    auto bound = debias ? analysis::rate_bound_unit_step(pc, m, n, cfg.c)
                        : analysis::rate_bound_scaled_step(pc, m, n, cfg.c);

    std::vector<double> mean(T + 1, 0.0), sumsq(T + 1, 0.0);
    double fstar = problem.fstar;
    for (int s = 0; s < seeds; ++s) {
      cfg.seed = splitmix64(seed + 1000 + s);
      auto run = sim::run_experiment(cfg);
      for (int t = 0; t < T; ++t) {
        double gap = run.records[t].loss - fstar;
        mean[t] += gap;
        sumsq[t] += gap * gap;
      }
      double gap_final = run.final_loss - fstar;
      mean[T] += gap_final;
      sumsq[T] += gap_final * gap_final;
    }
    bool ok = true;
    double worst_margin = -1e300;
    int worst_t = 0;
    double delta0 = 0.0;
    for (int t = 0; t <= T; ++t) {
      mean[t] /= seeds;
      if (t == 0) delta0 = mean[0];
      double var = std::max(sumsq[t] / seeds - mean[t] * mean[t], 0.0);
      double se = std::sqrt(var / seeds);
      double b = bound_scale * bound.value_at(t, delta0) + 4.0 * se;
      double margin = mean[t] - b;
      if (margin > worst_margin) {
        worst_margin = margin;
        worst_t = t;
      }
      if (margin > 0) ok = false;
    }
    suite.checks.push_back(
        {debias ? "envelope_unit_step_debiased" : "envelope_scaled_step", ok,
         fmt("%d seeds, worst margin %.3g at t=%d (negative is below the bound)", seeds,
             worst_margin, worst_t)});
  }

  return suite;
}

SuiteResult run_runtime_suite(long budget, std::uint64_t seed) {
  if (budget < 10000) budget = 10000;
  SuiteResult suite{"runtime", {}};
  const int n = 60;
  const double delta = 0.5;

  for (int c : {1, 2, 3}) {
    double lambda = 1.0 / c;
    auto model = straggler::make_delay_model(lambda, n / c);
    Rng rng = Rng(seed).substream({0x77, static_cast<std::uint64_t>(c)});

    double sum_unc = 0.0, sum_egc = 0.0, sum_agc = 0.0;
    long threshold_first = 0;
    int blocks = n / c;
    int r = sim::agc_threshold(delta, n);
    std::vector<double> times(n);
    std::vector<int> order(n);
    auto model_unc = straggler::make_delay_model(lambda, n);

    for (long trial = 0; trial < budget; ++trial) {
      // uncoded: every worker computes one task, wait for the max
      auto t_unc = straggler::sample_times(model_unc, n, rng).times;
      sum_unc += *std::max_element(t_unc.begin(), t_unc.end());

      // coded: n workers, c tasks each
      times = straggler::sample_times(model, n, rng).times;

      double coverage_wall = 0.0;
      for (int b = 0; b < blocks; ++b) {
        double mn = times[b * c];
        for (int j = 1; j < c; ++j) mn = std::min(mn, times[b * c + j]);
        coverage_wall = std::max(coverage_wall, mn);
      }
      sum_egc += coverage_wall;

      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](int a, int b) { return times[a] < times[b]; });
      std::vector<char> covered(blocks, 0);
      int ncov = 0;
      double agc_wall = 0.0;
      for (int pos = 0; pos < n; ++pos) {
        int j = order[pos];
        if (!covered[j / c]) {
          covered[j / c] = 1;
          ++ncov;
        }
        agc_wall = times[j];
        if (pos + 1 >= r) {
          ++threshold_first;
          break;
        }
        if (ncov == blocks) break;
      }
      sum_agc += agc_wall;
    }

    double mc_unc = sum_unc / budget;
    double pred_unc = straggler::expected_runtime_uncoded(n, lambda);
    double rel_unc = std::abs(mc_unc - pred_unc) / pred_unc;
    suite.checks.push_back({fmt("uncoded_runtime_c%d", c), rel_unc <= 0.02,
                            fmt("MC %.5f vs 1/n + H_n/(lambda n) = %.5f (%.2f%%)", mc_unc,
                                pred_unc, 100 * rel_unc)});

    double mc_egc = sum_egc / budget;
    double pred_cov = straggler::expected_block_coverage_time(n, c, lambda);
    double pred_printed = straggler::expected_runtime_egc(n, c, lambda);
    double rel_cov = std::abs(mc_egc - pred_cov) / pred_cov;
    double rel_printed = std::abs(mc_egc - pred_printed) / pred_printed;
    suite.checks.push_back(
        {fmt("egc_runtime_c%d", c), rel_cov <= 0.02,
         fmt("MC %.5f vs c/n + H_{n/c}/(lambda n) = %.5f (%.2f%%); "
             "order-statistic form c/n + (H_n-H_c)/(lambda n) = %.5f differs by %.1f%%",
             mc_egc, pred_cov, 100 * rel_cov, pred_printed, 100 * rel_printed)});

    double mc_agc = sum_agc / budget;
    double pred_agc = straggler::expected_runtime_agc(n, c, r, lambda);
    double frac_threshold = static_cast<double>(threshold_first) / budget;
    bool agc_ok = mc_agc <= pred_agc * 1.002;
    double rel_agc = std::abs(mc_agc - pred_agc) / pred_agc;
    if (frac_threshold > 0.9) agc_ok = agc_ok && rel_agc <= 0.05;
    suite.checks.push_back(
        {fmt("agc_runtime_c%d", c), agc_ok,
         fmt("MC %.5f <= r-th order statistic bound %.5f (gap %.2f%%, threshold-first %.1f%%)",
             mc_agc, pred_agc, 100 * rel_agc, 100 * frac_threshold)});
  }

  // order statistics of plain exponentials against (H_k - H_{k-r})/lambda
  {
    const int k = 40;
    const double lambda = 2.0;
    Rng rng = Rng(seed).substream({0x05});
    bool ok = true;
    std::string detail;
    for (int r : {10, 30}) {
      double sum = 0.0, sumsq = 0.0;
      std::vector<double> z(k);
      long trials = std::min<long>(budget, 200000);
      for (long trial = 0; trial < trials; ++trial) {
        for (auto& v : z) v = rng.exponential(lambda);
        std::nth_element(z.begin(), z.begin() + (r - 1), z.end());
        double v = z[r - 1];
        sum += v;
        sumsq += v * v;
      }
      double mean = sum / trials;
      double var = std::max(sumsq / trials - mean * mean, 0.0);
      double se = std::sqrt(var / trials);
      double pred = straggler::expected_order_statistic(k, r, lambda);
      if (std::abs(mean - pred) > 4 * se) ok = false;
      detail += fmt("r=%d: MC %.5f pred %.5f (se %.5f); ", r, mean, pred, se);
    }
    suite.checks.push_back({"order_statistic_mean", ok, detail});
  }

  return suite;
}

void print(const SuiteResult& result) {
  for (const auto& check : result.checks)
    std::printf("[%s] %s/%s: %s\n", check.pass ? "PASS" : "FAIL", result.suite.c_str(),
                check.name.c_str(), check.detail.c_str());
}

}  // namespace gradcode::verify
