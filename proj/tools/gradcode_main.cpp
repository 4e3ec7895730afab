// Command-line front end: simulate / analyze / verify / shard / master / worker.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gradcode/analysis.hpp"
#include "gradcode/config.hpp"
#include "gradcode/dataset.hpp"
#include "gradcode/io.hpp"
#include "gradcode/log.hpp"
#include "gradcode/net.hpp"
#include "gradcode/simulator.hpp"
#include "gradcode/straggler.hpp"
#include "gradcode/verify.hpp"

namespace {

namespace fs = std::filesystem;
using namespace gradcode;

struct SeedRange {
  std::uint64_t first = 0;
  std::uint64_t last = 0;
};

SeedRange parse_seed_range(const std::string& text) {
  auto dots = text.find("..");
  SeedRange range;
  if (dots == std::string::npos) {
    range.first = range.last = std::stoull(text);
  } else {
    range.first = std::stoull(text.substr(0, dots));
    range.last = std::stoull(text.substr(dots + 2));
  }
  if (range.last < range.first) throw std::invalid_argument("--seeds: empty range " + text);
  return range;
}

std::string run_file_name(std::uint64_t seed, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "run_%llu.%s", static_cast<unsigned long long>(seed), ext);
  return buf;
}

int cmd_simulate(const std::string& config_path, const std::string& seeds_text,
                 const std::string& out_override, std::optional<double> threshold) {
  auto cfg = config::parse_config_file(config_path);
  config::validate(cfg);
  fs::path out_dir = !out_override.empty() ? out_override : (!cfg.out.empty() ? cfg.out : ".");
  fs::create_directories(out_dir);

  SeedRange seeds{cfg.seed, cfg.seed};
  if (!seeds_text.empty()) seeds = parse_seed_range(seeds_text);

  std::vector<sim::RunResult> results;
  for (std::uint64_t s = seeds.first; s <= seeds.last; ++s) {
    auto result = sim::run_experiment(cfg, s);
    io::write_run_result(result, out_dir / run_file_name(s, "json"));
    io::write_iteration_csv(result, out_dir / run_file_name(s, "csv"));
    results.push_back(std::move(result));
  }
  auto summary = sim::summarize(results, threshold);
  io::write_summary_csv(summary, config::config_hash(cfg), out_dir / "summary.csv");
  std::printf("simulate: %zu run(s), T=%d, mean total time %.6f, final loss %.8g -> %s\n",
              results.size(), summary.iterations, summary.total_time_mean,
              results.back().final_loss, out_dir.string().c_str());
  return 0;
}

int cmd_analyze(int n, std::vector<int> cs, std::vector<double> deltas, double lambda, double mu,
                double beta, double sigma, double delta0, std::optional<double> eps,
                const std::string& out_path) {
  analysis::ProblemConstants pc{mu, beta, sigma};
  std::FILE* out = stdout;
  if (!out_path.empty()) {
    out = std::fopen(out_path.c_str(), "w");
    if (!out) throw std::runtime_error("cannot write " + out_path);
  }
  std::sort(cs.begin(), cs.end());
  cs.erase(std::unique(cs.begin(), cs.end()), cs.end());
  std::sort(deltas.begin(), deltas.end());
  deltas.erase(std::unique(deltas.begin(), deltas.end()), deltas.end());
  std::fprintf(out, "# n=%d lambda=%.17g mu=%.17g beta=%.17g sigma=%.17g delta0=%.17g", n, lambda,
               mu, beta, sigma, delta0);
  if (eps) std::fprintf(out, " eps=%.17g", *eps);
  std::fprintf(out, "\n");
  std::fprintf(out, "method,c,delta,p,q,eps0,iter_time_expected,time_to_eps_bound,flag\n");
  // rows sorted lexicographically: method name, then c, then delta
  for (const std::string method : {"agc", "egc", "uncoded"}) {
    for (int c : cs) {
      if (c < 1 || n % c != 0) continue;
      if (method == "uncoded" && c != 1) continue;
      bool lambda_matches = std::abs(lambda * c - 1.0) <= 1e-9;
      for (double delta : deltas) {
        if (method != "agc" && delta != deltas.front()) continue;  // one row per c
        std::string flag;
        double p = 0.0, q = 0.0, eps0 = 0.0, iter_time = 0.0;
        std::string bound_text;
        try {
          if (method == "agc") {
            int r = sim::agc_threshold(delta, n);
            auto m = analysis::moments_exact(n, c, r);
            p = m.p;
            q = m.q;
            eps0 = analysis::noise_floor(pc, n, c, delta * n);
            iter_time = straggler::expected_runtime_agc(n, c, r, lambda);
            if (eps) {
              if (*eps < eps0)
                flag = "below_floor";
              else if (lambda_matches && delta < 1.0)
                bound_text = std::to_string(analysis::expected_time_to_eps(
                    analysis::Method::agc, pc, n, c, delta, lambda, delta0, *eps));
            }
          } else if (method == "egc") {
            iter_time = straggler::expected_runtime_egc(n, c, lambda);
            if (eps && lambda_matches)
              bound_text = std::to_string(analysis::expected_time_to_eps(
                  analysis::Method::egc, pc, n, c, 1.0, lambda, delta0, *eps));
          } else {
            iter_time = straggler::expected_runtime_uncoded(n, lambda);
            if (eps && lambda_matches)
              bound_text = std::to_string(analysis::expected_time_to_eps(
                  analysis::Method::uncoded, pc, n, c, 1.0, lambda, delta0, *eps));
          }
        } catch (const std::exception& e) {
          flag = e.what();
        }
        std::fprintf(out, "%s,%d,%.6g,%.10g,%.10g,%.10g,%.10g,%s,%s\n", method.c_str(), c, delta,
                     p, q, eps0, iter_time, bound_text.c_str(), flag.c_str());
      }
    }
  }
  if (out != stdout) std::fclose(out);
  return 0;
}

int cmd_verify(const std::string& suite, long budget, std::uint64_t seed, double corrupt_bound) {
  std::vector<verify::SuiteResult> results;
  if (suite == "moments" || suite == "all")
    results.push_back(verify::run_moments_suite(budget, seed));
  if (suite == "convergence" || suite == "all")
    results.push_back(
        verify::run_convergence_suite(std::min<long>(budget, 400), seed, corrupt_bound));
  if (suite == "runtime" || suite == "all") results.push_back(verify::run_runtime_suite(budget, seed));
  if (results.empty())
    throw std::invalid_argument("--suite must be moments, convergence, runtime or all");
  bool all_pass = true;
  for (const auto& r : results) {
    verify::print(r);
    all_pass = all_pass && r.all_pass();
  }
  std::printf("%s\n", all_pass ? "verify: all properties hold" : "verify: property violations");
  return all_pass ? 0 : 1;
}

int cmd_shard(const std::string& dataset_path, const std::string& label_column, int n, int k,
              int c, const std::string& out_dir, bool standardize) {
  auto ds = dataset::load_csv(dataset_path, label_column, standardize);
  int dropped = dataset::write_shards(ds, n, k, c, out_dir);
  if (dropped > 0)
    log::warn("shard: dropped " + std::to_string(dropped) +
              " trailing row(s) so every task has the same size");
  std::printf("shard: %d task file(s) + manifest.json -> %s\n", n, out_dir.c_str());
  return 0;
}

int cmd_master(const std::string& config_path, const std::string& listen, double accept_timeout) {
  net::MasterOptions opts;
  opts.config = config::parse_config_file(config_path);
  opts.listen = listen;
  opts.accept_timeout_s = accept_timeout;
  net::Master master(std::move(opts));
  std::printf("master: listening on port %u\n", master.port());
  std::fflush(stdout);
  auto result = master.run();
  fs::path out_dir = !result.config.out.empty() ? result.config.out : ".";
  fs::create_directories(out_dir);
  io::write_run_result(result, out_dir / run_file_name(result.seed, "json"));
  io::write_iteration_csv(result, out_dir / run_file_name(result.seed, "csv"));
  std::printf("master: %d round(s), total wait %.3fs, final loss %.8g -> %s\n",
              static_cast<int>(result.records.size()), result.total_time, result.final_loss,
              out_dir.string().c_str());
  return 0;
}

int cmd_worker(const std::string& master_addr, int worker_id, const std::string& config_path,
               const std::string& data_dir, const std::string& delay_table,
               std::optional<std::uint64_t> delay_seed, double delay_lambda,
               int fail_after_round) {
  net::WorkerOptions opts;
  opts.master_addr = master_addr;
  opts.worker_id = worker_id;
  opts.config = config::parse_config_file(config_path);
  opts.data_dir = data_dir;
  opts.delay_table = delay_table;
  opts.delay_seed = delay_seed;
  opts.delay_lambda = delay_lambda;
  opts.fail_after_round = fail_after_round;
  net::run_worker(opts);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gradcode: coded distributed gradient descent toolkit"};
  app.require_subcommand(1);

  auto* simulate = app.add_subcommand("simulate", "replay synchronous training with stragglers");
  std::string sim_config, sim_seeds, sim_out;
  std::optional<double> sim_threshold;
  simulate->add_option("--config", sim_config, "experiment config file")->required();
  simulate->add_option("--seeds", sim_seeds, "seed or inclusive range a..b");
  simulate->add_option("--out", sim_out, "output directory (overrides config)");
  simulate->add_option("--threshold", sim_threshold, "loss threshold for time-to-threshold");

  auto* analyze = app.add_subcommand("analyze", "closed-form moments, floors and time bounds");
  int an_n = 30;
  std::vector<int> an_c{1, 2, 3};
  std::vector<double> an_delta{0.5};
  double an_lambda = 1.0, an_mu = 1.0, an_beta = 2.0, an_sigma = 1.0, an_delta0 = 1.0;
  std::optional<double> an_eps;
  std::string an_out;
  analyze->add_option("--n", an_n, "tasks (= workers)")->required();
  analyze->add_option("--c", an_c, "tasks per worker (repeatable)");
  analyze->add_option("--delta", an_delta, "waited-for worker fraction (repeatable)");
  analyze->add_option("--lambda", an_lambda, "straggling parameter");
  analyze->add_option("--mu", an_mu, "PL constant");
  analyze->add_option("--beta", an_beta, "smoothness constant");
  analyze->add_option("--sigma", an_sigma, "component gradient bound");
  analyze->add_option("--delta0", an_delta0, "initial loss gap");
  analyze->add_option("--eps", an_eps, "target accuracy for time bounds");
  analyze->add_option("--out", an_out, "write CSV here instead of stdout");

  auto* verify_cmd = app.add_subcommand("verify", "run the oracle suites");
  std::string vf_suite = "all";
  long vf_budget = 100000;
  std::uint64_t vf_seed = 12345;
  double vf_corrupt = 1.0;
  verify_cmd->add_option("--suite", vf_suite, "moments | convergence | runtime | all");
  verify_cmd->add_option("--budget", vf_budget, "Monte-Carlo trials (or seeds for convergence)");
  verify_cmd->add_option("--seed", vf_seed, "root seed");
  verify_cmd
      ->add_option("--corrupt-bound", vf_corrupt,
                   "negative-control hook: rescale convergence bounds")
      ->group("");  // hidden

  auto* shard = app.add_subcommand("shard", "split a CSV dataset into per-task files");
  std::string sh_dataset, sh_label = "label", sh_out;
  int sh_n = 0, sh_k = 0, sh_c = 1;
  bool sh_std = false;
  shard->add_option("--dataset", sh_dataset, "input CSV")->required();
  shard->add_option("--label-column", sh_label, "label column name");
  shard->add_option("--n", sh_n, "task count")->required();
  shard->add_option("--k", sh_k, "worker count (for the manifest)")->required();
  shard->add_option("--c", sh_c, "tasks per worker");
  shard->add_option("--out", sh_out, "output directory")->required();
  shard->add_flag("--standardize", sh_std, "standardize features first");

  auto* master = app.add_subcommand("master", "run the coordinator for one experiment");
  std::string ms_config, ms_listen = "127.0.0.1:7070";
  double ms_accept = 60.0;
  master->add_option("--config", ms_config, "experiment config file")->required();
  master->add_option("--listen", ms_listen, "listen address host:port");
  master->add_option("--accept-timeout", ms_accept, "seconds to wait for workers to join");

  auto* worker = app.add_subcommand("worker", "run one compute node");
  std::string wk_master, wk_config, wk_data, wk_table;
  int wk_id = 0, wk_fail = -1;
  std::optional<std::uint64_t> wk_seed;
  double wk_lambda = 0.5;
  worker->add_option("--master", wk_master, "master address host:port")->required();
  worker->add_option("--worker-id", wk_id, "worker id in [0, k)")->required();
  worker->add_option("--config", wk_config, "experiment config file")->required();
  worker->add_option("--data", wk_data, "shard directory for dataset objectives");
  worker->add_option("--delay-table", wk_table, "injected sleeps file (round worker seconds)");
  worker->add_option("--delay-seed", wk_seed, "seeded exponential sleeps");
  worker->add_option("--delay-lambda", wk_lambda, "rate for seeded sleeps");
  worker->add_option("--fail-after-round", wk_fail, "drop the connection at this round")
      ->group("");  // test hook, hidden

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) return cmd_simulate(sim_config, sim_seeds, sim_out, sim_threshold);
    if (analyze->parsed())
      return cmd_analyze(an_n, an_c, an_delta, an_lambda, an_mu, an_beta, an_sigma, an_delta0,
                         an_eps, an_out);
    if (verify_cmd->parsed()) return cmd_verify(vf_suite, vf_budget, vf_seed, vf_corrupt);
    if (shard->parsed()) return cmd_shard(sh_dataset, sh_label, sh_n, sh_k, sh_c, sh_out, sh_std);
    if (master->parsed()) return cmd_master(ms_config, ms_listen, ms_accept);
    if (worker->parsed())
      return cmd_worker(wk_master, wk_id, wk_config, wk_data, wk_table, wk_seed, wk_lambda,
                        wk_fail);
  } catch (const config::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const dataset::DataError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
