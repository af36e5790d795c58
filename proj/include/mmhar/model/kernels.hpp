#pragma once

#include <cstddef>

// Dense row-major kernels used by the classifier. Every kernel has a serial
// reference and an OpenMP variant that splits output rows across threads;
// both perform the same per-element accumulation, so results are
// bit-identical. The unqualified entry points dispatch to the parallel
// variant only outside an existing parallel region.
//
//   gemm_nn: C[n x m] (+)= A[n x k]   * B[k x m]
//   gemm_nt: C[n x m] (+)= A[n x k]   * B[m x k]^T
//   gemm_tn: C[k x m] (+)= A[n x k]^T * B[n x m]
namespace mmhar::kernels {

struct Gemm {
  int n, k, m;
  const double* a;
  int lda;
  const double* b;
  int ldb;
  double* c;
  int ldc;
  bool accumulate;
};

namespace serial {
void gemm_nn(const Gemm& g);
void gemm_nt(const Gemm& g);
void gemm_tn(const Gemm& g);
// Row-wise softmax of an n x m block, in place.
void softmax_rows(double* x, int n, int m, int ld);
}  // namespace serial

namespace parallel {
void gemm_nn(const Gemm& g);
void gemm_nt(const Gemm& g);
void gemm_tn(const Gemm& g);
void softmax_rows(double* x, int n, int m, int ld);
}  // namespace parallel

void gemm_nn(const Gemm& g);
void gemm_nt(const Gemm& g);
void gemm_tn(const Gemm& g);
void softmax_rows(double* x, int n, int m, int ld);

int max_threads();

}  // namespace mmhar::kernels
