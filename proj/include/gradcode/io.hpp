#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "gradcode/simulator.hpp"

namespace gradcode::io {

// RunResult <-> JSON. The JSON carries the canonical config text and its hash
// so any result file can be reproduced exactly.
std::string run_result_to_json(const sim::RunResult& result);
sim::RunResult run_result_from_json(const std::string& text);
void write_run_result(const sim::RunResult& result, const std::filesystem::path& path);
sim::RunResult read_run_result(const std::filesystem::path& path);

// Per-iteration trace CSV: t, wall_time, covered_blocks, finished_count,
// loss, grad_error. The first line is a '#' comment with the config hash.
void write_iteration_csv(const sim::RunResult& result, const std::filesystem::path& path);

// Cross-seed summary CSV: per-iteration mean and 95% band of loss and wall
// time. Also prefixed with the config hash comment.
void write_summary_csv(const sim::Summary& summary, const std::string& config_hash,
                       const std::filesystem::path& path);

}  // namespace gradcode::io
