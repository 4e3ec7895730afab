#include "gradcode/codes.hpp"

#include <stdexcept>
#include <string>

namespace gradcode::codes {

CodeParams CodeParams::create(int n, int k, int c) {
  if (n <= 0 || k <= 0 || c <= 0)
    throw std::invalid_argument("CodeParams: n, k, c must be positive (n=" + std::to_string(n) +
                                ", k=" + std::to_string(k) + ", c=" + std::to_string(c) + ")");
  if (c > n)
    throw std::invalid_argument("CodeParams: need c <= n (n=" + std::to_string(n) +
                                ", c=" + std::to_string(c) + ")");
  if (n % c != 0)
    throw std::invalid_argument("CodeParams: c must divide n (n=" + std::to_string(n) +
                                ", c=" + std::to_string(c) + ")");
  long long kc = static_cast<long long>(k) * c;
  if (kc % n != 0)
    throw std::invalid_argument("CodeParams: n must divide k*c (n=" + std::to_string(n) +
                                ", k=" + std::to_string(k) + ", c=" + std::to_string(c) + ")");
  CodeParams p;
  p.n = n;
  p.k = k;
  p.c = c;
  p.ell = static_cast<int>(kc / n);
  if (p.ell < 1 || p.ell > k)
    throw std::invalid_argument("CodeParams: repetition factor out of range (ell=" +
                                std::to_string(p.ell) + ", k=" + std::to_string(k) + ")");
  return p;
}

int AssignmentMatrix::group_of_worker(int j) const {
  if (j < 0 || j >= params.k) throw std::out_of_range("group_of_worker: worker id out of range");
  return j / params.ell;
}

std::vector<int> AssignmentMatrix::block_tasks(int block) const {
  if (block < 0 || block >= params.block_count())
    throw std::out_of_range("block_tasks: block index out of range");
  std::vector<int> tasks(params.c);
  for (int i = 0; i < params.c; ++i) tasks[i] = block * params.c + i;
  return tasks;
}

std::vector<int> AssignmentMatrix::block_workers(int block) const {
  if (block < 0 || block >= params.block_count())
    throw std::out_of_range("block_workers: block index out of range");
  std::vector<int> workers(params.ell);
  for (int i = 0; i < params.ell; ++i) workers[i] = block * params.ell + i;
  return workers;
}

AssignmentMatrix build_frc(int n, int k, int c) {
  AssignmentMatrix m;
  m.params = CodeParams::create(n, k, c);
  m.supports.resize(k);
  for (int j = 0; j < k; ++j) m.supports[j] = m.block_tasks(j / m.params.ell);
  return m;
}

int CoverageIndicators::covered_count() const {
  int count = 0;
  for (auto b : y) count += b ? 1 : 0;
  return count;
}

CoverageIndicators coverage(const AssignmentMatrix& matrix,
                            std::span<const int> non_stragglers) {
  CoverageIndicators out;
  out.y.assign(matrix.params.block_count(), 0);
  for (int j : non_stragglers) {
    if (j < 0 || j >= matrix.params.k)
      throw std::out_of_range("coverage: worker id out of range (" + std::to_string(j) + ")");
    out.y[matrix.group_of_worker(j)] = 1;
  }
  return out;
}

std::vector<double> combine(const std::vector<std::vector<double>>& block_sums,
                            const CoverageIndicators& y, int n) {
  if (block_sums.size() != y.y.size())
    throw std::invalid_argument("combine: block_sums length must equal block count");
  if (block_sums.empty()) throw std::invalid_argument("combine: no blocks");
  std::size_t dim = block_sums.front().size();
  std::vector<double> acc(dim, 0.0);
  for (std::size_t i = 0; i < block_sums.size(); ++i) {
    if (block_sums[i].size() != dim)
      throw std::invalid_argument("combine: block gradient dimension mismatch");
    if (!y.y[i]) continue;
    for (std::size_t d = 0; d < dim; ++d) acc[d] += block_sums[i][d];
  }
  double scale = 1.0 / static_cast<double>(n);
  for (double& v : acc) v *= scale;
  return acc;
}

std::vector<double> debias(std::vector<double> g, double p) {
  if (p < 0.0 || p >= 1.0)
    throw std::domain_error("debias: need 0 <= p < 1 (p=" + std::to_string(p) + ")");
  double scale = 1.0 / (1.0 - p);
  for (double& v : g) v *= scale;
  return g;
}

}  // namespace gradcode::codes
