#pragma once

#include <cstddef>

// Flat f64 compute kernels behind the tensor engine. Every entry has a
// scalar reference implementation and (on x86-64) an AVX2+FMA variant;
// the active table is picked once at startup from CPUID, overridable via
// force_lane() or the DEHAZE_LANE environment variable (scalar|avx2).
//
// Lanes may differ in the rounding of reductions (vector accumulators,
// explicit FMA), so cross-lane comparisons are tolerance-based; within a
// lane results are bit-stable for fixed inputs.
namespace dehaze::kernels {

enum class Lane { scalar, avx2 };

struct Ops {
    const char* name;

    // Row-major f64 GEMM. C[m,n] = op(A)*op(B), added to C when acc.
    //   nn: A[m,k] lda, B[k,n] ldb
    //   nt: A[m,k] lda, B[n,k] ldb   (effective B^T)
    //   tn: A[k,m] lda, B[k,n] ldb   (effective A^T)
    void (*gemm_nn)(int m, int n, int k, const double* a, int lda,
                    const double* b, int ldb, double* c, int ldc, bool acc);
    void (*gemm_nt)(int m, int n, int k, const double* a, int lda,
                    const double* b, int ldb, double* c, int ldc, bool acc);
    void (*gemm_tn)(int m, int n, int k, const double* a, int lda,
                    const double* b, int ldb, double* c, int ldc, bool acc);

    // Elementwise, all length n; y may alias inputs.
    void (*add)(const double* a, const double* b, double* y, size_t n);
    void (*sub)(const double* a, const double* b, double* y, size_t n);
    void (*mul)(const double* a, const double* b, double* y, size_t n);
    void (*div)(const double* a, const double* b, double* y, size_t n);
    void (*madd_acc)(const double* a, const double* b, double* y, size_t n);  // y += a*b
    void (*axpy)(double alpha, const double* x, double* y, size_t n);         // y += alpha*x
    void (*affine)(const double* x, double alpha, double beta, double* y, size_t n);  // y = alpha*x+beta
    void (*fill)(double* y, double v, size_t n);
    void (*clamp_min)(const double* x, double lo, double* y, size_t n);

    void (*relu)(const double* x, double* y, size_t n);
    void (*relu_bwd_acc)(const double* x, const double* dy, double* dx, size_t n);
    void (*lrelu)(const double* x, double slope, double* y, size_t n);
    void (*lrelu_bwd_acc)(const double* x, double slope, const double* dy, double* dx, size_t n);

    // exp with the argument clamped to [-708, 708]
    void (*vexp)(const double* x, double* y, size_t n);

    double (*sum)(const double* x, size_t n);
    double (*dot)(const double* a, const double* b, size_t n);
    double (*vmax)(const double* x, size_t n);  // n >= 1
    double (*vmin)(const double* x, size_t n);  // n >= 1
    bool (*all_finite)(const double* x, size_t n);

    // Fused ADAM update; c1 = 1-beta1^t, c2 = 1-beta2^t for the post-increment t.
    void (*adam)(double* p, const double* g, double* m, double* v, size_t n,
                 double lr, double beta1, double beta2, double eps,
                 double c1, double c2);
};

const Ops& ops();
const Ops& table(Lane lane);
Lane active_lane();
void force_lane(Lane lane);
bool lane_available(Lane lane);

}  // namespace dehaze::kernels
