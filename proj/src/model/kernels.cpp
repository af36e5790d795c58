#include "mmhar/model/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>

namespace mmhar::kernels {

namespace {

// Row kernels shared by both variants.
inline void nn_row(const Gemm& g, int i) {
  double* __restrict c = g.c + static_cast<std::ptrdiff_t>(i) * g.ldc;
  if (!g.accumulate) std::fill(c, c + g.m, 0.0);
  const double* a = g.a + static_cast<std::ptrdiff_t>(i) * g.lda;
  const std::ptrdiff_t ldb = g.ldb;
  int p = 0;
  for (; p + 3 < g.k; p += 4) {
    const double a0 = a[p], a1 = a[p + 1], a2 = a[p + 2], a3 = a[p + 3];
    const double* __restrict b0 = g.b + p * ldb;
    const double* __restrict b1 = b0 + ldb;
    const double* __restrict b2 = b1 + ldb;
    const double* __restrict b3 = b2 + ldb;
    for (int j = 0; j < g.m; ++j) c[j] += a0 * b0[j] + a1 * b1[j] + a2 * b2[j] + a3 * b3[j];
  }
  for (; p < g.k; ++p) {
    const double av = a[p];
    const double* __restrict b = g.b + p * ldb;
    for (int j = 0; j < g.m; ++j) c[j] += av * b[j];
  }
}

inline void nt_row(const Gemm& g, int i) {
  double* c = g.c + static_cast<std::ptrdiff_t>(i) * g.ldc;
  const double* a = g.a + static_cast<std::ptrdiff_t>(i) * g.lda;
  for (int j = 0; j < g.m; ++j) {
    const double* b = g.b + static_cast<std::ptrdiff_t>(j) * g.ldb;
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    int p = 0;
    for (; p + 3 < g.k; p += 4) {
      s0 += a[p] * b[p];
      s1 += a[p + 1] * b[p + 1];
      s2 += a[p + 2] * b[p + 2];
      s3 += a[p + 3] * b[p + 3];
    }
    for (; p < g.k; ++p) s0 += a[p] * b[p];
    const double s = (s0 + s1) + (s2 + s3);
    c[j] = g.accumulate ? c[j] + s : s;
  }
}

inline void tn_row(const Gemm& g, int r) {
  double* __restrict c = g.c + static_cast<std::ptrdiff_t>(r) * g.ldc;
  if (!g.accumulate) std::fill(c, c + g.m, 0.0);
  const std::ptrdiff_t lda = g.lda, ldb = g.ldb;
  const double* a = g.a + r;
  int i = 0;
  for (; i + 3 < g.n; i += 4) {
    const double a0 = a[i * lda], a1 = a[(i + 1) * lda], a2 = a[(i + 2) * lda], a3 = a[(i + 3) * lda];
    const double* __restrict b0 = g.b + i * ldb;
    const double* __restrict b1 = b0 + ldb;
    const double* __restrict b2 = b1 + ldb;
    const double* __restrict b3 = b2 + ldb;
    for (int j = 0; j < g.m; ++j) c[j] += a0 * b0[j] + a1 * b1[j] + a2 * b2[j] + a3 * b3[j];
  }
  for (; i < g.n; ++i) {
    const double av = a[i * lda];
    const double* __restrict b = g.b + i * ldb;
    for (int j = 0; j < g.m; ++j) c[j] += av * b[j];
  }
}

inline void softmax_row(double* x, int m) {
  double mx = x[0];
  for (int j = 1; j < m; ++j) mx = std::max(mx, x[j]);
  double sum = 0.0;
  for (int j = 0; j < m; ++j) {
    x[j] = std::exp(x[j] - mx);
    sum += x[j];
  }
  const double inv = 1.0 / sum;
  for (int j = 0; j < m; ++j) x[j] *= inv;
}

bool go_parallel(double work) { return !omp_in_parallel() && omp_get_max_threads() > 1 && work > 65536.0; }

}  // namespace

namespace serial {
void gemm_nn(const Gemm& g) {
  for (int i = 0; i < g.n; ++i) nn_row(g, i);
}
void gemm_nt(const Gemm& g) {
  for (int i = 0; i < g.n; ++i) nt_row(g, i);
}
void gemm_tn(const Gemm& g) {
  for (int r = 0; r < g.k; ++r) tn_row(g, r);
}
void softmax_rows(double* x, int n, int m, int ld) {
  for (int i = 0; i < n; ++i) softmax_row(x + static_cast<std::ptrdiff_t>(i) * ld, m);
}
}  // namespace serial

namespace parallel {
void gemm_nn(const Gemm& g) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < g.n; ++i) nn_row(g, i);
}
void gemm_nt(const Gemm& g) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < g.n; ++i) nt_row(g, i);
}
void gemm_tn(const Gemm& g) {
#pragma omp parallel for schedule(static)
  for (int r = 0; r < g.k; ++r) tn_row(g, r);
}
void softmax_rows(double* x, int n, int m, int ld) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) softmax_row(x + static_cast<std::ptrdiff_t>(i) * ld, m);
}
}  // namespace parallel

void gemm_nn(const Gemm& g) {
  if (go_parallel(static_cast<double>(g.n) * g.k * g.m)) parallel::gemm_nn(g);
  else serial::gemm_nn(g);
}
void gemm_nt(const Gemm& g) {
  if (go_parallel(static_cast<double>(g.n) * g.k * g.m)) parallel::gemm_nt(g);
  else serial::gemm_nt(g);
}
void gemm_tn(const Gemm& g) {
  if (go_parallel(static_cast<double>(g.n) * g.k * g.m)) parallel::gemm_tn(g);
  else serial::gemm_tn(g);
}
void softmax_rows(double* x, int n, int m, int ld) {
  if (go_parallel(static_cast<double>(n) * m * 8)) parallel::softmax_rows(x, n, m, ld);
  else serial::softmax_rows(x, n, m, ld);
}

int max_threads() { return omp_get_max_threads(); }

}  // namespace mmhar::kernels
