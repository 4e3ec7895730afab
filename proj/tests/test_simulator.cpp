#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "gradcode/analysis.hpp"
#include "gradcode/linalg.hpp"
#include "gradcode/simulator.hpp"
#include "gradcode/straggler.hpp"
#include "oracles.hpp"

using namespace gradcode;

namespace {

config::ExperimentConfig quadratic_config(analysis::Method method, int n, int c, double delta,
                                          double lambda, int T, std::uint64_t seed) {
  config::ExperimentConfig cfg;
  cfg.method = method;
  cfg.n = n;
  cfg.k = n;
  cfg.c = c;
  cfg.delta = delta;
  cfg.lambda = lambda;
  cfg.iterations = T;
  cfg.seed = seed;
  cfg.gamma.kind = optim::StepPolicyKind::inv_beta;
  cfg.objective.kind = "quadratic";
  cfg.objective.dim = 6;
  cfg.objective.conditioning = 8.0;
  cfg.objective.seed = 1234;
  return cfg;
}

}  // namespace

TEST_CASE("agc threshold is ceil(delta k) with integer products kept exact") {
  CHECK(sim::agc_threshold(0.25, 4) == 1);
  CHECK(sim::agc_threshold(0.5, 8) == 4);
  CHECK(sim::agc_threshold(0.37, 30) == 12);
  CHECK(sim::agc_threshold(0.3, 30) == 9);
  CHECK(sim::agc_threshold(0.1, 30) == 3);
  CHECK(sim::agc_threshold(1.0, 7) == 7);
  CHECK(sim::agc_threshold(1e-9, 5) == 1);
}

TEST_CASE("vanishing straggling makes the exact wait collapse to the shift") {
  auto cfg = quadratic_config(analysis::Method::egc, 4, 2, 1.0, 1e12, 3, 5);
  auto run = sim::run_experiment(cfg);
  for (const auto& rec : run.records) {
    CHECK(rec.wall_time == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(rec.covered_blocks == 2);
    CHECK(rec.grad_error <= 1e-12);
  }
}

TEST_CASE("exact-code wait recovers the gradient at every iteration") {
  auto cfg = quadratic_config(analysis::Method::egc, 12, 3, 1.0, 0.5, 25, 7);
  auto run = sim::run_experiment(cfg);
  for (const auto& rec : run.records) {
    CHECK(rec.covered_blocks == 4);
    CHECK(rec.grad_error <= 1e-12);
    CHECK(rec.wall_time >= 3.0 / 12.0);
  }
  // exact descent on a quadratic with gamma = 1/beta never increases the loss
  for (std::size_t t = 1; t < run.records.size(); ++t)
    CHECK(run.records[t].loss <= run.records[t - 1].loss * (1 + 1e-12));
}

TEST_CASE("fractional wait stops at the threshold or at coverage") {
  auto cfg = quadratic_config(analysis::Method::agc, 12, 2, 0.5, 1.0, 40, 11);
  auto run = sim::run_experiment(cfg);
  int threshold = sim::agc_threshold(0.5, 12);
  for (const auto& rec : run.records) {
    CHECK(static_cast<int>(rec.finished_workers.size()) <= threshold);
    CHECK(rec.covered_blocks <= 6);
    CHECK(rec.covered_blocks >= 1);
    // stopping before the threshold is only possible with full coverage
    if (static_cast<int>(rec.finished_workers.size()) < threshold)
      CHECK(rec.covered_blocks == 6);
  }
}

TEST_CASE("waiting for one worker keeps half the gradient on average") {
  // n = k = 4, c = 2, delta = 0.25: exactly one finisher per round, and the
  // covered block is uniform over the two blocks, so E[g] = (1 - 1/2) grad f.
  auto matrix = codes::build_frc(4, 4, 2);
  auto problem = optim::make_quadratic(4, 3, 4.0, 99, 1.0);
  const auto& obj = problem.objective;
  auto p = analysis::moments_exact(4, 2, 1);
  CHECK(p.p == doctest::Approx(0.5));

  sim::WaitPolicy policy{sim::WaitKind::agc_fraction, 0.25};
  auto delays = straggler::make_delay_model(1.0, 2);
  optim::StepPolicy step{optim::StepPolicyKind::inv_beta};
  auto x = obj.start_point;
  auto full = optim::full_gradient(obj, x);

  Rng root(2024);
  const int rounds = 4000;
  std::vector<double> sum(obj.dim, 0.0), sumsq(obj.dim, 0.0);
  for (int t = 0; t < rounds; ++t) {
    Rng iter_rng = root.substream({static_cast<std::uint64_t>(t)});
    auto out = sim::run_iteration(matrix, obj, x, policy, delays, step, false, p.p, t, iter_rng);
    CHECK(out.record.finished_workers.size() == 1);
    CHECK(out.record.covered_blocks == 1);
    for (int j = 0; j < obj.dim; ++j) {
      sum[j] += out.gradient_used[j];
      sumsq[j] += out.gradient_used[j] * out.gradient_used[j];
    }
  }
  for (int j = 0; j < obj.dim; ++j) {
    double mean = sum[j] / rounds;
    double se = std::sqrt(std::max(sumsq[j] / rounds - mean * mean, 1e-18) / rounds);
    CHECK(std::abs(mean - 0.5 * full[j]) <= 4 * se + 1e-12);
  }
}

TEST_CASE("replay is deterministic given the seed") {
  auto cfg = quadratic_config(analysis::Method::agc, 8, 2, 0.5, 0.7, 15, 31);
  cfg.track_iterates = true;
  auto a = sim::run_experiment(cfg);
  auto b = sim::run_experiment(cfg);
  CHECK(a.final_x == b.final_x);
  CHECK(a.iterates == b.iterates);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t t = 0; t < a.records.size(); ++t) {
    CHECK(a.records[t].wall_time == b.records[t].wall_time);
    CHECK(a.records[t].finished_workers == b.records[t].finished_workers);
  }
  auto c = sim::run_experiment(cfg, 32);
  CHECK(a.final_x != c.final_x);
}

TEST_CASE("zero iterations produce an empty trace") {
  auto cfg = quadratic_config(analysis::Method::egc, 4, 2, 1.0, 1.0, 0, 1);
  auto run = sim::run_experiment(cfg);
  CHECK(run.records.empty());
  CHECK(run.total_time == 0.0);
  CHECK(run.final_loss == doctest::Approx(run.config.objective.delta0 +
                                          (run.final_loss - run.config.objective.delta0)));
}

TEST_CASE("injected delay table drives the straggler pattern") {
  auto matrix = codes::build_frc(4, 4, 2);
  optim::Objective obj;
  obj.n = 4;
  obj.dim = 1;
  obj.grad_i = [](int i, std::span<const double>, std::span<double> g) { g[0] = i + 1; };
  obj.value = [](std::span<const double> x) { return x[0]; };
  obj.constants = analysis::ProblemConstants{1.0, 1.0, 1.0};

  sim::DelayTable table;
  table.set(0, 0, 0.1);
  table.set(0, 1, 0.2);
  table.set(0, 2, 0.3);
  table.set(0, 3, 0.4);

  sim::WaitPolicy policy{sim::WaitKind::agc_fraction, 0.5};
  auto delays = straggler::make_delay_model(1.0, 2);
  optim::StepPolicy step{optim::StepPolicyKind::inv_beta};
  std::vector<double> x{0.0};
  Rng rng(1);
  auto out = sim::run_iteration(matrix, obj, x, policy, delays, step, false, 0.0, 0, rng, &table);

  CHECK(out.record.finished_workers == std::vector<int>{0, 1});
  CHECK(out.record.covered_blocks == 1);
  CHECK(out.record.wall_time == doctest::Approx(0.2));
  // block 0 sum = 1 + 2 = 3, combined over n = 4 gives 0.75
  CHECK(out.gradient_used[0] == doctest::Approx(0.75));
  CHECK(out.x_next[0] == doctest::Approx(-0.75));
}

TEST_CASE("uncoded wait requires c = 1 and waits for everyone") {
  auto cfg = quadratic_config(analysis::Method::uncoded, 6, 1, 1.0, 1.0, 5, 3);
  auto run = sim::run_experiment(cfg);
  for (const auto& rec : run.records) {
    CHECK(rec.finished_workers.size() == 6);
    CHECK(rec.covered_blocks == 6);
    CHECK(rec.grad_error <= 1e-12);
  }
}

TEST_CASE("per-iteration wall times track the closed forms") {
  const int n = 20;
  const double lambda = 0.7;
  const int T = 3000;

  auto run_mean = [&](analysis::Method method, int c, double delta) {
    auto cfg = quadratic_config(method, n, c, delta, lambda, T, 555);
    cfg.objective.dim = 2;
    cfg.gamma.kind = optim::StepPolicyKind::schedule;
    cfg.gamma.gamma0 = 1e-9;  // keep the iterates parked; only times matter
    auto run = sim::run_experiment(cfg);
    double sum = 0.0;
    for (const auto& rec : run.records) sum += rec.wall_time;
    return sum / run.records.size();
  };

  double unc = run_mean(analysis::Method::uncoded, 1, 1.0);
  CHECK(unc == doctest::Approx(straggler::expected_runtime_uncoded(n, lambda)).epsilon(0.03));

  double egc = run_mean(analysis::Method::egc, 2, 1.0);
  CHECK(egc ==
        doctest::Approx(straggler::expected_block_coverage_time(n, 2, lambda)).epsilon(0.03));

  double agc = run_mean(analysis::Method::agc, 2, 0.5);
  CHECK(agc <= straggler::expected_runtime_agc(n, 2, 10, lambda) * 1.03);
}

TEST_CASE("simulated mean gap stays under the scaled-step envelope") {
  const int n = 20, c = 2, T = 40, seeds = 60;
  const double delta = 0.4;
  auto problem = optim::make_quadratic(n, 5, 8.0, 2718, 1.0);
  const auto& pc = *problem.objective.constants;
  int r = sim::agc_threshold(delta, n);
  auto m = analysis::moments_exact(n, 2, r);

  auto cfg = quadratic_config(analysis::Method::agc, n, c, delta, 1.0, T, 0);
  cfg.objective.dim = 5;
  cfg.objective.conditioning = 8.0;
  cfg.objective.seed = 2718;
  cfg.gamma.kind = optim::StepPolicyKind::scaled_inv_beta;

  std::vector<double> mean(T, 0.0), sumsq(T, 0.0);
  for (int s = 0; s < seeds; ++s) {
    auto run = sim::run_experiment(cfg, 9000 + s);
    for (int t = 0; t < T; ++t) {
      double gap = run.records[t].loss - problem.fstar;
      mean[t] += gap;
      sumsq[t] += gap * gap;
    }
  }
  double delta0 = mean[0] / seeds;
  for (int t = 0; t < T; ++t) {
    double mu_t = mean[t] / seeds;
    double se = std::sqrt(std::max(sumsq[t] / seeds - mu_t * mu_t, 0.0) / seeds);
    double bound = analysis::convergence_bound_scaled_step(pc, m, n, c, t, delta0);
    CHECK(mu_t <= bound + 4 * se + 1e-12);
  }
}

TEST_CASE("no stragglers reproduces the closed-form descent trajectory") {
  const int n = 16, dim = 6, T = 30;
  auto cfg = quadratic_config(analysis::Method::egc, n, 2, 1.0, 1e9, T, 77);
  cfg.objective.dim = dim;
  cfg.objective.conditioning = 12.0;
  cfg.objective.seed = 424242;
  auto run = sim::run_experiment(cfg);

  auto problem = optim::make_quadratic(n, dim, 12.0, 424242, 1.0);
  auto gaps = oracles::spectral_descent_gaps(problem.hessian, dim, problem.objective.start_point,
                                             problem.minimizer, problem.objective.constants->beta,
                                             T);
  for (int t = 0; t < T; ++t) {
    double sim_gap = run.records[t].loss - problem.fstar;
    CHECK(std::abs(sim_gap - gaps[t]) <= 1e-8 * std::max(gaps[t], 1e-300));
  }
}

TEST_CASE("summaries aggregate traces and locate thresholds") {
  auto cfg = quadratic_config(analysis::Method::egc, 8, 2, 1.0, 1.0, 12, 40);
  auto a = sim::run_experiment(cfg, 40);
  auto b = sim::run_experiment(cfg, 41);

  auto single = sim::summarize({a});
  for (int t = 0; t < 12; ++t) {
    CHECK(single.loss_mean[t] == a.records[t].loss);
    CHECK(single.wall_mean[t] == a.records[t].wall_time);
    CHECK(single.loss_lo[t] == single.loss_hi[t]);
  }

  auto twin = sim::summarize({a, a});
  for (int t = 0; t < 12; ++t) CHECK(twin.loss_lo[t] == twin.loss_hi[t]);

  auto both = sim::summarize({a, b}, a.records[3].loss);
  CHECK(both.runs == 2);
  CHECK(both.runs_reaching_threshold == 2);
  REQUIRE(both.time_to_threshold_mean.has_value());
  double expect_a = a.records[0].wall_time + a.records[1].wall_time + a.records[2].wall_time;
  CHECK(*both.time_to_threshold_mean <= expect_a + both.total_time_mean);

  CHECK_THROWS_AS(sim::summarize({}), std::invalid_argument);

  auto no_threshold = sim::summarize({a, b});
  CHECK(!sim::speedup_ratio(no_threshold, both).has_value());
  auto ratio = sim::speedup_ratio(both, both);
  REQUIRE(ratio.has_value());
  CHECK(*ratio == doctest::Approx(1.0));
}
