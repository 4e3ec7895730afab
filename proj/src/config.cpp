#include "gradcode/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace gradcode::config {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError(key, "expected a number, got '" + v + "'");
  return out;
}

long long parse_int(const std::string& key, const std::string& v) {
  long long out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError(key, "expected an integer, got '" + v + "'");
  return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError(key, "expected an unsigned integer, got '" + v + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key, "expected true/false, got '" + v + "'");
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::map<std::string, std::string> pairs;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no), "expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (pairs.count(key)) throw ConfigError(key, "duplicate key");
    pairs[key] = value;
  }

  bool saw_n = false, saw_k = false, saw_t = false;
  for (const auto& [key, value] : pairs) {
    if (key == "method" || key == "policy") {
      try {
        cfg.method = analysis::method_from_string(value);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(key, e.what());
      }
    } else if (key == "n") {
      cfg.n = static_cast<int>(parse_int(key, value));
      saw_n = true;
    } else if (key == "k") {
      cfg.k = static_cast<int>(parse_int(key, value));
      saw_k = true;
    } else if (key == "c") {
      cfg.c = static_cast<int>(parse_int(key, value));
    } else if (key == "delta") {
      cfg.delta = parse_double(key, value);
    } else if (key == "lambda") {
      cfg.lambda = parse_double(key, value);
    } else if (key == "T") {
      cfg.iterations = static_cast<int>(parse_int(key, value));
      saw_t = true;
    } else if (key == "seed") {
      cfg.seed = parse_u64(key, value);
    } else if (key == "gamma_policy") {
      try {
        cfg.gamma.kind = optim::step_policy_from_string(value);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(key, e.what());
      }
    } else if (key == "gamma0") {
      cfg.gamma.gamma0 = parse_double(key, value);
    } else if (key == "rho") {
      cfg.gamma.rho = parse_double(key, value);
    } else if (key == "debias") {
      cfg.debias = parse_bool(key, value);
    } else if (key == "objective") {
      cfg.objective.kind = value;
    } else if (key == "dim") {
      cfg.objective.dim = static_cast<int>(parse_int(key, value));
    } else if (key == "conditioning") {
      cfg.objective.conditioning = parse_double(key, value);
    } else if (key == "objective_seed") {
      cfg.objective.seed = parse_u64(key, value);
    } else if (key == "delta0") {
      cfg.objective.delta0 = parse_double(key, value);
    } else if (key == "dataset") {
      cfg.objective.dataset = value;
    } else if (key == "label_column") {
      cfg.objective.label_column = value;
    } else if (key == "standardize") {
      cfg.objective.standardize = parse_bool(key, value);
    } else if (key == "out") {
      cfg.out = value;
    } else if (key == "delay_table") {
      cfg.delay_table = value;
    } else if (key == "round_sync") {
      cfg.round_sync = parse_bool(key, value);
    } else if (key == "track_iterates") {
      cfg.track_iterates = parse_bool(key, value);
    } else if (key == "timeout") {
      cfg.timeout_s = parse_double(key, value);
    } else {
      throw ConfigError(key, "unknown key");
    }
  }
  if (!saw_n) throw ConfigError("n", "missing required key");
  if (!saw_k) throw ConfigError("k", "missing required key");
  if (!saw_t) throw ConfigError("T", "missing required key");
  return cfg;
}

ExperimentConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::string serialize(const ExperimentConfig& cfg) {
  std::map<std::string, std::string> pairs;
  pairs["method"] = analysis::to_string(cfg.method);
  pairs["n"] = std::to_string(cfg.n);
  pairs["k"] = std::to_string(cfg.k);
  pairs["c"] = std::to_string(cfg.c);
  pairs["delta"] = format_double(cfg.delta);
  pairs["lambda"] = format_double(cfg.lambda);
  pairs["T"] = std::to_string(cfg.iterations);
  pairs["seed"] = std::to_string(cfg.seed);
  pairs["gamma_policy"] = optim::to_string(cfg.gamma.kind);
  pairs["gamma0"] = format_double(cfg.gamma.gamma0);
  pairs["rho"] = format_double(cfg.gamma.rho);
  pairs["debias"] = cfg.debias ? "true" : "false";
  pairs["objective"] = cfg.objective.kind;
  pairs["dim"] = std::to_string(cfg.objective.dim);
  pairs["conditioning"] = format_double(cfg.objective.conditioning);
  pairs["objective_seed"] = std::to_string(cfg.objective.seed);
  pairs["delta0"] = format_double(cfg.objective.delta0);
  if (!cfg.objective.dataset.empty()) pairs["dataset"] = cfg.objective.dataset;
  pairs["label_column"] = cfg.objective.label_column;
  pairs["standardize"] = cfg.objective.standardize ? "true" : "false";
  if (!cfg.out.empty()) pairs["out"] = cfg.out;
  if (!cfg.delay_table.empty()) pairs["delay_table"] = cfg.delay_table;
  pairs["round_sync"] = cfg.round_sync ? "true" : "false";
  pairs["track_iterates"] = cfg.track_iterates ? "true" : "false";
  pairs["timeout"] = format_double(cfg.timeout_s);

  std::string out;
  for (const auto& [key, value] : pairs) {
    out += key;
    out += " = ";
    out += value;
    out += '\n';
  }
  return out;
}

std::string config_hash(const ExperimentConfig& cfg) {
  std::string text = serialize(cfg);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.n < 1) throw ConfigError("n", "must be >= 1");
  if (cfg.k < 1) throw ConfigError("k", "must be >= 1");
  if (cfg.c < 1) throw ConfigError("c", "must be >= 1");
  if (cfg.c > cfg.n) throw ConfigError("c", "must be <= n");
  if (cfg.n % cfg.c != 0) throw ConfigError("c", "must divide n");
  if ((static_cast<long long>(cfg.k) * cfg.c) % cfg.n != 0)
    throw ConfigError("k", "n must divide k*c");
  if (cfg.iterations < 0) throw ConfigError("T", "must be >= 0");
  if (!(cfg.lambda > 0.0)) throw ConfigError("lambda", "must be positive");
  if (cfg.method == analysis::Method::agc && !(cfg.delta > 0.0 && cfg.delta <= 1.0))
    throw ConfigError("delta", "must be in (0, 1] for agc");
  if (cfg.method == analysis::Method::uncoded && cfg.c != 1)
    throw ConfigError("c", "uncoded runs require c = 1");
  if (cfg.debias && cfg.gamma.kind == optim::StepPolicyKind::scaled_inv_beta)
    throw ConfigError("debias",
                      "debiasing combined with the scaled step over-corrects; enable only one");
  if (cfg.objective.kind != "quadratic" && cfg.objective.kind != "least_squares" &&
      cfg.objective.kind != "logistic")
    throw ConfigError("objective", "must be quadratic, least_squares or logistic");
  if (cfg.objective.kind != "quadratic" && cfg.objective.dataset.empty())
    throw ConfigError("dataset", "required for dataset objectives");
  if (cfg.objective.kind == "quadratic" && cfg.objective.dim < 1)
    throw ConfigError("dim", "must be >= 1");
  if (!(cfg.timeout_s > 0.0)) throw ConfigError("timeout", "must be positive");
}

}  // namespace gradcode::config
