#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "gradcode/analysis.hpp"
#include "gradcode/optim.hpp"

namespace gradcode::config {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error("config field '" + field + "': " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct ObjectiveSpec {
  // "quadratic", "least_squares" or "logistic"
  std::string kind = "quadratic";
  // quadratic
  int dim = 10;
  double conditioning = 10.0;
  std::uint64_t seed = 1;
  double delta0 = 1.0;
  // datasets
  std::string dataset;
  std::string label_column = "label";
  bool standardize = false;

  bool operator==(const ObjectiveSpec&) const = default;
};

struct ExperimentConfig {
  analysis::Method method = analysis::Method::agc;
  int n = 0;
  int k = 0;
  int c = 1;
  double delta = 1.0;   // waited-for worker fraction (agc)
  double lambda = 1.0;  // straggling parameter
  int iterations = 0;   // T
  std::uint64_t seed = 0;
  optim::StepPolicy gamma;
  bool debias = false;
  ObjectiveSpec objective;
  std::string out;          // output directory (optional)
  std::string delay_table;  // injected delays file (optional; overrides sampling)
  bool round_sync = false;  // master drains each round before the next broadcast
  bool track_iterates = false;
  double timeout_s = 120.0;  // per-round network timeout

  bool operator==(const ExperimentConfig&) const = default;
};

// key = value text, one pair per line, '#' comments. Unknown keys are errors.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::filesystem::path& path);

// Canonical form: sorted keys, stable number formatting. parse(serialize(c))
// reproduces c exactly.
std::string serialize(const ExperimentConfig& cfg);

// FNV-1a over the canonical form, as fixed-width hex.
std::string config_hash(const ExperimentConfig& cfg);

// Cross-field validation (c | n, n | k*c, delta in (0,1], policy/debias
// compatibility, ...). Throws ConfigError naming the offending field.
void validate(const ExperimentConfig& cfg);

}  // namespace gradcode::config
