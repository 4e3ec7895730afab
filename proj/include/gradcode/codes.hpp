#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace gradcode::codes {

// Parameters of a fractional repetition code: n tasks spread over k workers,
// c tasks per worker, every task replicated on ell = k*c/n workers.
struct CodeParams {
  int n = 0;
  int k = 0;
  int c = 0;
  int ell = 0;

  int block_count() const { return n / c; }

  // Validates c | n and n | k*c and 1 <= c <= n.
  static CodeParams create(int n, int k, int c);
};

// Block-diagonal assignment: tasks are split into n/c contiguous blocks of c,
// workers into n/c contiguous groups of ell, and group m computes block m.
// Worker and task indices are 0-based throughout.
struct AssignmentMatrix {
  CodeParams params;
  std::vector<std::vector<int>> supports;  // supports[j] = tasks computed by worker j

  int group_of_worker(int j) const;
  std::vector<int> block_tasks(int block) const;
  std::vector<int> block_workers(int block) const;
};

AssignmentMatrix build_frc(int n, int k, int c);

// y[i] = 1 iff block i has at least one non-straggler worker.
struct CoverageIndicators {
  std::vector<std::uint8_t> y;
  int covered_count() const;
};

CoverageIndicators coverage(const AssignmentMatrix& matrix,
                            std::span<const int> non_stragglers);

// (1/n) * sum_i y_i * block_sums[i]. block_sums must hold n/c vectors of one
// shared dimension (vectors for uncovered blocks are still required so the
// result dimension is unambiguous).
std::vector<double> combine(const std::vector<std::vector<double>>& block_sums,
                            const CoverageIndicators& y, int n);

// g / (1 - p); the inverse of the coverage attenuation E[g] = (1-p) grad f.
std::vector<double> debias(std::vector<double> g, double p);

}  // namespace gradcode::codes
