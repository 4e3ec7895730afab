#include "gradcode/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "gradcode/linalg.hpp"

namespace gradcode::sim {

namespace {

// substream tags
constexpr std::uint64_t kDelayStream = 0x64656c6179ULL;  // "delay"

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  double pos = q * (v.size() - 1);
  std::size_t lo = static_cast<std::size_t>(pos);
  std::size_t hi = std::min(lo + 1, v.size() - 1);
  double frac = pos - lo;
  return v[lo] * (1.0 - frac) + v[hi] * frac;
}

}  // namespace

WaitPolicy wait_policy_for(analysis::Method method, double delta) {
  switch (method) {
    case analysis::Method::uncoded: return {WaitKind::uncoded_all, 1.0};
    case analysis::Method::egc: return {WaitKind::egc_all_blocks, 1.0};
    case analysis::Method::agc: return {WaitKind::agc_fraction, delta};
  }
  throw std::logic_error("wait_policy_for: unreachable");
}

int agc_threshold(double delta, int k) {
  int r = static_cast<int>(std::ceil(delta * static_cast<double>(k) - 1e-9));
  return std::clamp(r, 1, k);
}

DelayTable DelayTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("DelayTable: cannot open " + path);
  DelayTable table;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::istringstream ls(line);
    int round = 0, worker = 0;
    double seconds = 0.0;
    if (!(ls >> round)) continue;  // blank line
    if (!(ls >> worker >> seconds))
      throw std::runtime_error("DelayTable: bad line " + std::to_string(line_no) + " in " + path);
    table.set(round, worker, seconds);
  }
  return table;
}

void DelayTable::set(int round, int worker, double seconds) {
  if (round < 0 || worker < 0 || seconds < 0.0)
    throw std::invalid_argument("DelayTable: negative round, worker or delay");
  if (static_cast<std::size_t>(round) >= by_round_.size()) by_round_.resize(round + 1);
  auto& row = by_round_[round];
  if (static_cast<std::size_t>(worker) >= row.size()) row.resize(worker + 1, 0.0);
  row[worker] = seconds;
}

double DelayTable::at(int round, int worker) const {
  if (round < 0 || static_cast<std::size_t>(round) >= by_round_.size()) return 0.0;
  const auto& row = by_round_[round];
  if (worker < 0 || static_cast<std::size_t>(worker) >= row.size()) return 0.0;
  return row[worker];
}

IterationOutcome run_iteration(const codes::AssignmentMatrix& matrix,
                               const optim::Objective& objective, std::span<const double> x,
                               const WaitPolicy& policy, const straggler::DelayModel& delays,
                               const optim::StepPolicy& step, bool debias, double p_debias, int t,
                               Rng& rng, const DelayTable* table) {
  const auto& params = matrix.params;
  int k = params.k;
  int blocks = params.block_count();
  if (policy.kind == WaitKind::uncoded_all && params.c != 1)
    throw std::invalid_argument("run_iteration: uncoded_all requires c = 1");

  std::vector<double> times(k);
  if (table) {
    for (int j = 0; j < k; ++j) times[j] = table->at(t, j);
  } else {
    times = straggler::sample_times(delays, k, rng).times;
  }

  // completion order; ties broken by worker index so replay is deterministic
  std::vector<int> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return times[a] < times[b]; });

  codes::CoverageIndicators y;
  y.y.assign(blocks, 0);
  std::vector<int> finished;
  int covered = 0;
  double wall = 0.0;

  int threshold = k;
  if (policy.kind == WaitKind::agc_fraction) threshold = agc_threshold(policy.delta, k);

  for (int pos = 0; pos < k; ++pos) {
    int j = order[pos];
    finished.push_back(j);
    int block = matrix.group_of_worker(j);
    if (!y.y[block]) {
      y.y[block] = 1;
      ++covered;
    }
    wall = times[j];
    bool stop = false;
    switch (policy.kind) {
      case WaitKind::uncoded_all: stop = pos + 1 == k; break;
      case WaitKind::egc_all_blocks: stop = covered == blocks; break;
      case WaitKind::agc_fraction: stop = pos + 1 >= threshold || covered == blocks; break;
    }
    if (stop) break;
  }

  std::vector<std::vector<double>> block_sums(blocks);
  for (int b = 0; b < blocks; ++b) {
    if (y.y[b])
      block_sums[b] = optim::block_sum(objective, b, x, params.c);
    else
      block_sums[b].assign(objective.dim, 0.0);
  }
  auto g = codes::combine(block_sums, y, params.n);
  if (debias) g = codes::debias(std::move(g), p_debias);

  double gamma = optim::step_size(step, objective.constants, p_debias, t);

  IterationOutcome out;
  out.record.t = t;
  out.record.finished_workers = std::move(finished);
  out.record.covered_blocks = covered;
  out.record.wall_time = wall;
  out.record.loss = objective.value(x);
  auto full = optim::full_gradient(objective, x, &out.max_component_grad_norm);
  double err2 = 0.0;
  for (int d = 0; d < objective.dim; ++d) {
    double diff = g[d] - full[d];
    err2 += diff * diff;
  }
  out.record.grad_error = std::sqrt(err2);
  out.x_next = optim::gd_step(x, g, gamma);
  out.gradient_used = std::move(g);
  return out;
}

optim::Objective make_objective(const config::ExperimentConfig& cfg) {
  const auto& spec = cfg.objective;
  if (spec.kind == "quadratic") {
    return optim::make_quadratic(cfg.n, spec.dim, spec.conditioning, spec.seed, spec.delta0)
        .objective;
  }
  auto ds = dataset::load_csv(spec.dataset, spec.label_column, spec.standardize);
  if (spec.kind == "least_squares") return optim::make_least_squares(ds, cfg.n);
  if (spec.kind == "logistic") return optim::make_logistic(ds, cfg.n);
  throw config::ConfigError("objective", "unknown objective kind '" + spec.kind + "'");
}

RunResult run_experiment(const config::ExperimentConfig& cfg) {
  return run_experiment(cfg, cfg.seed);
}

RunResult run_experiment(const config::ExperimentConfig& cfg, std::uint64_t seed_override) {
  config::validate(cfg);
  return run_experiment(cfg, seed_override, make_objective(cfg));
}

RunResult run_experiment(const config::ExperimentConfig& cfg, std::uint64_t seed_override,
                         const optim::Objective& objective) {
  config::validate(cfg);
  auto matrix = codes::build_frc(cfg.n, cfg.k, cfg.c);
  auto policy = wait_policy_for(cfg.method, cfg.delta);
  auto delays = straggler::make_delay_model(cfg.lambda, cfg.n / cfg.c);

  double p_debias = 0.0;
  if (cfg.method == analysis::Method::agc) {
    int r = agc_threshold(cfg.delta, cfg.k);
    p_debias = analysis::moments_exact(cfg.k, matrix.params.ell, r).p;
  }

  std::optional<DelayTable> table;
  if (!cfg.delay_table.empty()) table = DelayTable::load(cfg.delay_table);

  RunResult result;
  result.config = cfg;
  result.seed = seed_override;
  Rng root(seed_override);

  optim::ModelState state;
  state.x = objective.start_point;
  if (state.x.empty()) state.x.assign(objective.dim, 0.0);
  if (cfg.track_iterates) result.iterates.push_back(state.x);

  for (state.t = 0; state.t < cfg.iterations; ++state.t) {
    Rng iter_rng = root.substream({kDelayStream, static_cast<std::uint64_t>(state.t)});
    auto outcome = run_iteration(matrix, objective, state.x, policy, delays, cfg.gamma,
                                 cfg.debias, p_debias, state.t, iter_rng,
                                 table ? &*table : nullptr);
    state.x = std::move(outcome.x_next);
    result.total_time += outcome.record.wall_time;
    result.records.push_back(std::move(outcome.record));
    if (cfg.track_iterates) result.iterates.push_back(state.x);
    result.sigma_observed = std::max(result.sigma_observed, outcome.max_component_grad_norm);
  }
  result.final_loss = objective.value(state.x);
  result.final_x = std::move(state.x);
  return result;
}

Summary summarize(const std::vector<RunResult>& results, std::optional<double> threshold) {
  if (results.empty()) throw std::invalid_argument("summarize: no results");
  int T = static_cast<int>(results.front().records.size());
  for (const auto& r : results)
    if (static_cast<int>(r.records.size()) != T)
      throw std::invalid_argument("summarize: results have differing iteration counts");

  Summary s;
  s.iterations = T;
  s.runs = static_cast<int>(results.size());
  s.threshold = threshold;

  for (int t = 0; t < T; ++t) {
    std::vector<double> losses, walls;
    losses.reserve(results.size());
    walls.reserve(results.size());
    for (const auto& r : results) {
      losses.push_back(r.records[t].loss);
      walls.push_back(r.records[t].wall_time);
    }
    double lm = std::accumulate(losses.begin(), losses.end(), 0.0) / losses.size();
    double wm = std::accumulate(walls.begin(), walls.end(), 0.0) / walls.size();
    s.loss_mean.push_back(lm);
    s.wall_mean.push_back(wm);
    s.loss_lo.push_back(quantile(losses, 0.025));
    s.loss_hi.push_back(quantile(losses, 0.975));
    s.wall_lo.push_back(quantile(walls, 0.025));
    s.wall_hi.push_back(quantile(walls, 0.975));
  }
  for (const auto& r : results) s.total_time_mean += r.total_time;
  s.total_time_mean /= results.size();

  if (threshold) {
    double sum = 0.0;
    for (const auto& r : results) {
      double elapsed = 0.0;
      bool reached = false;
      // records[t].loss is f(x_t) before the step; the threshold is credited
      // at the time the iterate that met it became available
      for (const auto& rec : r.records) {
        if (rec.loss <= *threshold) {
          reached = true;
          break;
        }
        elapsed += rec.wall_time;
      }
      if (!reached && r.final_loss <= *threshold) reached = true;
      if (reached) {
        sum += elapsed;
        ++s.runs_reaching_threshold;
      }
    }
    if (s.runs_reaching_threshold > 0)
      s.time_to_threshold_mean = sum / s.runs_reaching_threshold;
  }
  return s;
}

std::optional<double> speedup_ratio(const Summary& base, const Summary& target) {
  if (!base.time_to_threshold_mean || !target.time_to_threshold_mean) return std::nullopt;
  if (!(*target.time_to_threshold_mean > 0.0)) return std::nullopt;
  return *base.time_to_threshold_mean / *target.time_to_threshold_mean;
}

}  // namespace gradcode::sim
