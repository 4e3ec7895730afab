#pragma once

#include <span>
#include <vector>

namespace gradcode::linalg {

// Dense matrices are flat row-major buffers; dimensions travel alongside.

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);

// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

// A (rows x cols) * x
std::vector<double> matvec(std::span<const double> a, int rows, int cols,
                           std::span<const double> x);

// A^T (rows x cols) * y, result has cols entries
std::vector<double> matvec_transposed(std::span<const double> a, int rows, int cols,
                                      std::span<const double> y);

struct SymEig {
  std::vector<double> values;   // ascending
  std::vector<double> vectors;  // row-major n x n, column j = eigenvector of values[j]
};

// Cyclic Jacobi eigendecomposition for symmetric matrices. Fine for the small
// dimensions used here (tens); not meant for large n.
SymEig jacobi_eigen(std::vector<double> a, int n);

// Solves A x = b for symmetric positive definite A via Cholesky.
std::vector<double> cholesky_solve(std::vector<double> a, int n, std::vector<double> b);

}  // namespace gradcode::linalg
