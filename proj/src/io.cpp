#include "gradcode/io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace gradcode::io {

using nlohmann::json;

std::string run_result_to_json(const sim::RunResult& result) {
  json j;
  j["config"] = config::serialize(result.config);
  j["config_hash"] = config::config_hash(result.config);
  j["seed"] = result.seed;
  j["total_time"] = result.total_time;
  j["final_loss"] = result.final_loss;
  j["sigma_observed"] = result.sigma_observed;
  j["final_x"] = result.final_x;
  json records = json::array();
  for (const auto& r : result.records) {
    json rec;
    rec["t"] = r.t;
    rec["finished_workers"] = r.finished_workers;
    rec["covered_blocks"] = r.covered_blocks;
    rec["wall_time"] = r.wall_time;
    rec["loss"] = r.loss;
    rec["grad_error"] = r.grad_error;
    records.push_back(std::move(rec));
  }
  j["records"] = std::move(records);
  if (!result.iterates.empty()) j["iterates"] = result.iterates;
  return j.dump(2);
}

sim::RunResult run_result_from_json(const std::string& text) {
  json j = json::parse(text);
  sim::RunResult result;
  result.config = config::parse_config_text(j.at("config").get<std::string>());
  result.seed = j.at("seed").get<std::uint64_t>();
  result.total_time = j.at("total_time").get<double>();
  result.final_loss = j.at("final_loss").get<double>();
  result.sigma_observed = j.value("sigma_observed", 0.0);
  result.final_x = j.value("final_x", std::vector<double>{});
  for (const auto& rec : j.at("records")) {
    sim::IterationRecord r;
    r.t = rec.at("t").get<int>();
    r.finished_workers = rec.at("finished_workers").get<std::vector<int>>();
    r.covered_blocks = rec.at("covered_blocks").get<int>();
    r.wall_time = rec.at("wall_time").get<double>();
    r.loss = rec.at("loss").get<double>();
    r.grad_error = rec.at("grad_error").get<double>();
    result.records.push_back(std::move(r));
  }
  if (j.contains("iterates"))
    result.iterates = j.at("iterates").get<std::vector<std::vector<double>>>();
  return result;
}

void write_run_result(const sim::RunResult& result, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << run_result_to_json(result) << '\n';
}

sim::RunResult read_run_result(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return run_result_from_json(buf.str());
}

void write_iteration_csv(const sim::RunResult& result, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(17);
  out << "# config_hash=" << config::config_hash(result.config) << '\n';
  out << "t,wall_time,covered_blocks,finished_count,loss,grad_error\n";
  for (const auto& r : result.records)
    out << r.t << ',' << r.wall_time << ',' << r.covered_blocks << ','
        << r.finished_workers.size() << ',' << r.loss << ',' << r.grad_error << '\n';
}

void write_summary_csv(const sim::Summary& summary, const std::string& config_hash,
                       const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(17);
  out << "# config_hash=" << config_hash << " runs=" << summary.runs;
  if (summary.threshold) {
    out << " threshold=" << *summary.threshold
        << " runs_reaching_threshold=" << summary.runs_reaching_threshold;
    if (summary.time_to_threshold_mean)
      out << " time_to_threshold_mean=" << *summary.time_to_threshold_mean;
  }
  out << '\n';
  out << "t,loss_mean,loss_lo,loss_hi,wall_mean,wall_lo,wall_hi\n";
  for (int t = 0; t < summary.iterations; ++t)
    out << t << ',' << summary.loss_mean[t] << ',' << summary.loss_lo[t] << ','
        << summary.loss_hi[t] << ',' << summary.wall_mean[t] << ',' << summary.wall_lo[t] << ','
        << summary.wall_hi[t] << '\n';
}

}  // namespace gradcode::io
