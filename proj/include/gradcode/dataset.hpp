#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace gradcode::dataset {

// In-memory dense dataset: one row per example, numeric features, one label.
struct Dataset {
  std::vector<std::string> feature_names;
  std::string label_name = "label";
  std::vector<double> features;  // row-major, num_rows x num_features
  std::vector<double> labels;
  int num_rows = 0;
  int num_features = 0;

  std::span<const double> row(int i) const {
    return {features.data() + static_cast<std::size_t>(i) * num_features,
            static_cast<std::size_t>(num_features)};
  }
};

// Thrown for unreadable files, non-numeric cells, missing label columns and
// label-domain violations.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Reads a CSV with a header row; `label_column` names the label, every other
// column must be numeric. With standardize, features are shifted/scaled to
// zero mean and unit variance (constant columns are left centered).
Dataset load_csv(const std::filesystem::path& path, const std::string& label_column,
                 bool standardize = false);

// Writes dataset `ds` as `n_tasks` per-task CSV shards (task_0000.csv, ...)
// of floor(rows/n_tasks) rows each, dropping any remainder, plus a
// manifest.json mapping blocks to tasks to workers for FRC(n_tasks, k, c).
// Returns the number of dropped rows. Output is byte-stable, so re-running
// produces identical files.
int write_shards(const Dataset& ds, int n_tasks, int k, int c,
                 const std::filesystem::path& out_dir);

// Loads the shard files for the given task indices from a shard directory.
// Tasks keep their global index; rows of task i come back contiguous.
struct ShardSet {
  std::vector<int> task_ids;
  std::vector<Dataset> tasks;  // parallel to task_ids
};
ShardSet load_shards(const std::filesystem::path& dir, std::span<const int> task_ids,
                     const std::string& label_column);

}  // namespace gradcode::dataset
