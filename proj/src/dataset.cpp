#include "gradcode/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "gradcode/codes.hpp"
#include "json.hpp"

namespace gradcode::dataset {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    // trim surrounding whitespace
    auto b = cell.find_first_not_of(" \t\r");
    auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_number(const std::string& s, int line_no, const std::string& col) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw DataError("non-numeric value '" + s + "' in column '" + col + "' at line " +
                    std::to_string(line_no));
  if (!std::isfinite(v))
    throw DataError("non-finite value in column '" + col + "' at line " + std::to_string(line_no));
  return v;
}

// Fixed formatting so shard output is byte-stable across runs.
std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path, const std::string& label_column,
                 bool standardize) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset file " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw DataError("empty dataset file " + path.string());
  auto header = split_csv_line(line);

  int label_idx = -1;
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == label_column) label_idx = static_cast<int>(i);
  if (label_idx < 0)
    throw DataError("label column '" + label_column + "' not found in " + path.string());

  Dataset ds;
  ds.num_features = static_cast<int>(header.size()) - 1;
  if (ds.num_features < 1) throw DataError("dataset has no feature columns");
  ds.label_name = label_column;
  for (std::size_t i = 0; i < header.size(); ++i)
    if (static_cast<int>(i) != label_idx) ds.feature_names.push_back(header[i]);

  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw DataError("row at line " + std::to_string(line_no) + " has " +
                      std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(header.size()));
    for (std::size_t i = 0; i < cells.size(); ++i) {
      double v = parse_number(cells[i], line_no, header[i]);
      if (static_cast<int>(i) == label_idx)
        ds.labels.push_back(v);
      else
        ds.features.push_back(v);
    }
    ++ds.num_rows;
  }
  if (ds.num_rows == 0) throw DataError("dataset " + path.string() + " has no data rows");

  if (standardize) {
    for (int c = 0; c < ds.num_features; ++c) {
      double mean = 0.0;
      for (int r = 0; r < ds.num_rows; ++r)
        mean += ds.features[static_cast<std::size_t>(r) * ds.num_features + c];
      mean /= ds.num_rows;
      double var = 0.0;
      for (int r = 0; r < ds.num_rows; ++r) {
        double d = ds.features[static_cast<std::size_t>(r) * ds.num_features + c] - mean;
        var += d * d;
      }
      var /= ds.num_rows;
      double scale = var > 1e-24 ? 1.0 / std::sqrt(var) : 1.0;
      for (int r = 0; r < ds.num_rows; ++r) {
        auto& v = ds.features[static_cast<std::size_t>(r) * ds.num_features + c];
        v = (v - mean) * scale;
      }
    }
  }
  return ds;
}

int write_shards(const Dataset& ds, int n_tasks, int k, int c,
                 const std::filesystem::path& out_dir) {
  if (n_tasks < 1) throw DataError("write_shards: n_tasks must be >= 1");
  if (ds.num_rows < n_tasks)
    throw DataError("write_shards: dataset has " + std::to_string(ds.num_rows) +
                    " rows, need at least " + std::to_string(n_tasks));
  auto matrix = codes::build_frc(n_tasks, k, c);  // validates the code parameters

  std::filesystem::create_directories(out_dir);
  int rows_per_task = ds.num_rows / n_tasks;
  int dropped = ds.num_rows - rows_per_task * n_tasks;

  for (int t = 0; t < n_tasks; ++t) {
    char name[32];
    std::snprintf(name, sizeof(name), "task_%04d.csv", t);
    std::ofstream out(out_dir / name, std::ios::trunc);
    if (!out) throw DataError("cannot write shard file " + (out_dir / name).string());
    for (std::size_t i = 0; i < ds.feature_names.size(); ++i)
      out << ds.feature_names[i] << ',';
    out << ds.label_name << '\n';
    for (int r = t * rows_per_task; r < (t + 1) * rows_per_task; ++r) {
      auto row = ds.row(r);
      for (double v : row) out << format_value(v) << ',';
      out << format_value(ds.labels[r]) << '\n';
    }
  }

  nlohmann::json manifest;
  manifest["n"] = n_tasks;
  manifest["k"] = k;
  manifest["c"] = c;
  manifest["ell"] = matrix.params.ell;
  manifest["rows_per_task"] = rows_per_task;
  manifest["dropped_rows"] = dropped;
  nlohmann::json blocks = nlohmann::json::array();
  for (int b = 0; b < matrix.params.block_count(); ++b) {
    nlohmann::json entry;
    entry["block"] = b;
    entry["tasks"] = matrix.block_tasks(b);
    entry["workers"] = matrix.block_workers(b);
    blocks.push_back(entry);
  }
  manifest["blocks"] = blocks;
  std::ofstream mf(out_dir / "manifest.json", std::ios::trunc);
  mf << manifest.dump(2) << '\n';
  return dropped;
}

ShardSet load_shards(const std::filesystem::path& dir, std::span<const int> task_ids,
                     const std::string& label_column) {
  ShardSet out;
  for (int t : task_ids) {
    char name[32];
    std::snprintf(name, sizeof(name), "task_%04d.csv", t);
    out.task_ids.push_back(t);
    out.tasks.push_back(load_csv(dir / name, label_column, false));
  }
  return out;
}

}  // namespace gradcode::dataset
