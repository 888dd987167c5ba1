#pragma once

#include <cstddef>

// Internal declarations of the per-lane kernel entry points.
namespace dehaze::kernels {

#define DEHAZE_LANE_DECLS                                                          \
    void gemm_nn(int m, int n, int k, const double* a, int lda, const double* b,   \
                 int ldb, double* c, int ldc, bool acc);                           \
    void gemm_nt(int m, int n, int k, const double* a, int lda, const double* b,   \
                 int ldb, double* c, int ldc, bool acc);                           \
    void gemm_tn(int m, int n, int k, const double* a, int lda, const double* b,   \
                 int ldb, double* c, int ldc, bool acc);                           \
    void add(const double* a, const double* b, double* y, size_t n);               \
    void sub(const double* a, const double* b, double* y, size_t n);               \
    void mul(const double* a, const double* b, double* y, size_t n);               \
    void div(const double* a, const double* b, double* y, size_t n);               \
    void madd_acc(const double* a, const double* b, double* y, size_t n);          \
    void axpy(double alpha, const double* x, double* y, size_t n);                 \
    void affine(const double* x, double alpha, double beta, double* y, size_t n);  \
    void fill(double* y, double v, size_t n);                                      \
    void clamp_min(const double* x, double lo, double* y, size_t n);               \
    void relu(const double* x, double* y, size_t n);                               \
    void relu_bwd_acc(const double* x, const double* dy, double* dx, size_t n);    \
    void lrelu(const double* x, double slope, double* y, size_t n);                \
    void lrelu_bwd_acc(const double* x, double slope, const double* dy,            \
                       double* dx, size_t n);                                      \
    void vexp(const double* x, double* y, size_t n);                               \
    double sum(const double* x, size_t n);                                         \
    double dot(const double* a, const double* b, size_t n);                        \
    double vmax(const double* x, size_t n);                                        \
    double vmin(const double* x, size_t n);                                        \
    bool all_finite(const double* x, size_t n);                                    \
    void adam(double* p, const double* g, double* m, double* v, size_t n,          \
              double lr, double beta1, double beta2, double eps, double c1,        \
              double c2);

namespace scalar {
DEHAZE_LANE_DECLS
}

#ifdef DEHAZE_HAVE_AVX2_TU
namespace avx2 {
DEHAZE_LANE_DECLS
}
#endif

#undef DEHAZE_LANE_DECLS

}  // namespace dehaze::kernels
