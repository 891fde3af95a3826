#pragma once

// Dense row-major matrix plus the three kernels everything hot reduces to:
// y = Wx + b, g_in += W^T g_out, and dW += outer(g, x). The dot product uses
// four explicit accumulators: the grouping is fixed in source (deterministic
// results without -ffast-math) while still giving the compiler independent
// chains to vectorize.

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace lanegnn {

struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;  // row-major

  Matrix() = default;
  Matrix(int r, int c)
      : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
  const double* row(int r) const { return data.data() + static_cast<std::size_t>(r) * cols; }
  double* row(int r) { return data.data() + static_cast<std::size_t>(r) * cols; }
  int size() const { return rows * cols; }
};

inline double dot(const double* a, const double* b, int n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  double s = (s0 + s1) + (s2 + s3);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

// y = W x + b; y must not alias x.
inline void matvec(const Matrix& w, const double* x, const double* b, double* y) {
  for (int r = 0; r < w.rows; ++r) {
    y[r] = b[r] + dot(w.row(r), x, w.cols);
  }
}

// g_in += W^T g_out, accumulated row by row so each row pass is a contiguous axpy.
inline void matvec_transpose_add(const Matrix& w, const double* g_out, double* g_in) {
  for (int r = 0; r < w.rows; ++r) {
    const double gr = g_out[r];
    if (gr == 0.0) continue;
    const double* wr = w.row(r);
    for (int c = 0; c < w.cols; ++c) g_in[c] += wr[c] * gr;
  }
}

// dW += outer(g, x).
inline void outer_add(Matrix& wg, const double* g, const double* x) {
  for (int r = 0; r < wg.rows; ++r) {
    const double gr = g[r];
    if (gr == 0.0) continue;
    double* wr = wg.row(r);
    for (int c = 0; c < wg.cols; ++c) wr[c] += x[c] * gr;
  }
}

}  // namespace lanegnn
