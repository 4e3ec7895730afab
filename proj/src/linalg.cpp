#include "gradcode/linalg.hpp"

#include <cmath>
#include <stdexcept>

namespace gradcode::linalg {

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("axpy: size mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

std::vector<double> matvec(std::span<const double> a, int rows, int cols,
                           std::span<const double> x) {
  if (static_cast<int>(x.size()) != cols) throw std::invalid_argument("matvec: size mismatch");
  std::vector<double> out(rows, 0.0);
  for (int r = 0; r < rows; ++r) {
    double s = 0.0;
    const double* row = a.data() + static_cast<std::size_t>(r) * cols;
    for (int c = 0; c < cols; ++c) s += row[c] * x[c];
    out[r] = s;
  }
  return out;
}

std::vector<double> matvec_transposed(std::span<const double> a, int rows, int cols,
                                      std::span<const double> y) {
  if (static_cast<int>(y.size()) != rows)
    throw std::invalid_argument("matvec_transposed: size mismatch");
  std::vector<double> out(cols, 0.0);
  for (int r = 0; r < rows; ++r) {
    const double* row = a.data() + static_cast<std::size_t>(r) * cols;
    for (int c = 0; c < cols; ++c) out[c] += row[c] * y[r];
  }
  return out;
}

SymEig jacobi_eigen(std::vector<double> a, int n) {
  std::vector<double> v(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i) * n + i] = 1.0;

  auto at = [&](std::vector<double>& m, int r, int c) -> double& {
    return m[static_cast<std::size_t>(r) * n + c];
  };

  const int max_sweeps = 100;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += at(a, p, q) * at(a, p, q);
    if (off < 1e-26) break;

    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        double apq = at(a, p, q);
        if (apq == 0.0) continue;
        double theta = (at(a, q, q) - at(a, p, p)) / (2.0 * apq);
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (int i = 0; i < n; ++i) {
          double aip = at(a, i, p), aiq = at(a, i, q);
          at(a, i, p) = c * aip - s * aiq;
          at(a, i, q) = s * aip + c * aiq;
        }
        for (int i = 0; i < n; ++i) {
          double api = at(a, p, i), aqi = at(a, q, i);
          at(a, p, i) = c * api - s * aqi;
          at(a, q, i) = s * api + c * aqi;
        }
        for (int i = 0; i < n; ++i) {
          double vip = at(v, i, p), viq = at(v, i, q);
          at(v, i, p) = c * vip - s * viq;
          at(v, i, q) = s * vip + c * viq;
        }
      }
    }
  }

  SymEig out;
  out.values.resize(n);
  for (int i = 0; i < n; ++i) out.values[i] = at(a, i, i);

  // sort ascending, permuting eigenvector columns along
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (out.values[order[j]] < out.values[order[i]]) std::swap(order[i], order[j]);

  SymEig sorted;
  sorted.values.resize(n);
  sorted.vectors.resize(static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j) {
    sorted.values[j] = out.values[order[j]];
    for (int i = 0; i < n; ++i)
      sorted.vectors[static_cast<std::size_t>(i) * n + j] = at(v, i, order[j]);
  }
  return sorted;
}

std::vector<double> cholesky_solve(std::vector<double> a, int n, std::vector<double> b) {
  if (static_cast<int>(b.size()) != n) throw std::invalid_argument("cholesky_solve: size mismatch");
  auto at = [&](int r, int c) -> double& { return a[static_cast<std::size_t>(r) * n + c]; };

  // in-place lower Cholesky
  for (int j = 0; j < n; ++j) {
    double d = at(j, j);
    for (int k = 0; k < j; ++k) d -= at(j, k) * at(j, k);
    if (!(d > 0.0)) throw std::domain_error("cholesky_solve: matrix not positive definite");
    at(j, j) = std::sqrt(d);
    for (int i = j + 1; i < n; ++i) {
      double s = at(i, j);
      for (int k = 0; k < j; ++k) s -= at(i, k) * at(j, k);
      at(i, j) = s / at(j, j);
    }
  }
  // forward then backward substitution
  for (int i = 0; i < n; ++i) {
    double s = b[i];
    for (int k = 0; k < i; ++k) s -= at(i, k) * b[k];
    b[i] = s / at(i, i);
  }
  for (int i = n - 1; i >= 0; --i) {
    double s = b[i];
    for (int k = i + 1; k < n; ++k) s -= at(k, i) * b[k];
    b[i] = s / at(i, i);
  }
  return b;
}

}  // namespace gradcode::linalg
