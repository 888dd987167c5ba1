// AVX2+FMA lane. Edge strips that do not fill a full register tile are
// delegated to the scalar lane, so only the blocked interiors differ from
// the reference by reduction order / FMA rounding.

#include "lanes.hpp"

#include <immintrin.h>

#include <cmath>
#include <cstdint>

namespace dehaze::kernels::avx2 {

namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

// Copy the i/j edge strips of an (m,n) problem to the scalar kernel.
template <typename F>
inline void run_edges(int m, int n, int mi, int nj, F&& scalar_block) {
    if (nj < n) scalar_block(0, mi, nj, n - nj);   // right strip of blocked rows
    if (mi < m) scalar_block(mi, m - mi, 0, n);    // bottom strip, full width
}

}  // namespace

void gemm_nn(int m, int n, int k, const double* a, int lda, const double* b,
             int ldb, double* c, int ldc, bool acc) {
    const int MR = 4, NR = 8;
    const int mi = m - m % MR, nj = n - n % NR;
    for (int i = 0; i < mi; i += MR) {
        for (int j = 0; j < nj; j += NR) {
            __m256d acc00, acc01, acc10, acc11, acc20, acc21, acc30, acc31;
            if (acc) {
                acc00 = _mm256_loadu_pd(c + (size_t)(i + 0) * ldc + j);
                acc01 = _mm256_loadu_pd(c + (size_t)(i + 0) * ldc + j + 4);
                acc10 = _mm256_loadu_pd(c + (size_t)(i + 1) * ldc + j);
                acc11 = _mm256_loadu_pd(c + (size_t)(i + 1) * ldc + j + 4);
                acc20 = _mm256_loadu_pd(c + (size_t)(i + 2) * ldc + j);
                acc21 = _mm256_loadu_pd(c + (size_t)(i + 2) * ldc + j + 4);
                acc30 = _mm256_loadu_pd(c + (size_t)(i + 3) * ldc + j);
                acc31 = _mm256_loadu_pd(c + (size_t)(i + 3) * ldc + j + 4);
            } else {
                acc00 = acc01 = acc10 = acc11 = _mm256_setzero_pd();
                acc20 = acc21 = acc30 = acc31 = _mm256_setzero_pd();
            }
            for (int p = 0; p < k; ++p) {
                const __m256d b0 = _mm256_loadu_pd(b + (size_t)p * ldb + j);
                const __m256d b1 = _mm256_loadu_pd(b + (size_t)p * ldb + j + 4);
                __m256d av;
                av = _mm256_broadcast_sd(a + (size_t)(i + 0) * lda + p);
                acc00 = _mm256_fmadd_pd(av, b0, acc00);
                acc01 = _mm256_fmadd_pd(av, b1, acc01);
                av = _mm256_broadcast_sd(a + (size_t)(i + 1) * lda + p);
                acc10 = _mm256_fmadd_pd(av, b0, acc10);
                acc11 = _mm256_fmadd_pd(av, b1, acc11);
                av = _mm256_broadcast_sd(a + (size_t)(i + 2) * lda + p);
                acc20 = _mm256_fmadd_pd(av, b0, acc20);
                acc21 = _mm256_fmadd_pd(av, b1, acc21);
                av = _mm256_broadcast_sd(a + (size_t)(i + 3) * lda + p);
                acc30 = _mm256_fmadd_pd(av, b0, acc30);
                acc31 = _mm256_fmadd_pd(av, b1, acc31);
            }
            _mm256_storeu_pd(c + (size_t)(i + 0) * ldc + j, acc00);
            _mm256_storeu_pd(c + (size_t)(i + 0) * ldc + j + 4, acc01);
            _mm256_storeu_pd(c + (size_t)(i + 1) * ldc + j, acc10);
            _mm256_storeu_pd(c + (size_t)(i + 1) * ldc + j + 4, acc11);
            _mm256_storeu_pd(c + (size_t)(i + 2) * ldc + j, acc20);
            _mm256_storeu_pd(c + (size_t)(i + 2) * ldc + j + 4, acc21);
            _mm256_storeu_pd(c + (size_t)(i + 3) * ldc + j, acc30);
            _mm256_storeu_pd(c + (size_t)(i + 3) * ldc + j + 4, acc31);
        }
    }
    run_edges(m, n, mi, nj, [&](int i0, int mm, int j0, int nn) {
        scalar::gemm_nn(mm, nn, k, a + (size_t)i0 * lda, lda, b + j0, ldb,
                        c + (size_t)i0 * ldc + j0, ldc, acc);
    });
}

void gemm_nt(int m, int n, int k, const double* a, int lda, const double* b,
             int ldb, double* c, int ldc, bool acc) {
    const int NR = 4;
    const int kk = k - k % 4, nj = n - n % NR;
    for (int i = 0; i < m; ++i) {
        const double* arow = a + (size_t)i * lda;
        for (int j = 0; j < nj; j += NR) {
            __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd();
            __m256d s2 = _mm256_setzero_pd(), s3 = _mm256_setzero_pd();
            for (int p = 0; p < kk; p += 4) {
                const __m256d av = _mm256_loadu_pd(arow + p);
                s0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b + (size_t)(j + 0) * ldb + p), s0);
                s1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b + (size_t)(j + 1) * ldb + p), s1);
                s2 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b + (size_t)(j + 2) * ldb + p), s2);
                s3 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b + (size_t)(j + 3) * ldb + p), s3);
            }
            // transpose-reduce the four accumulators into one vector of dots
            const __m256d t01 = _mm256_hadd_pd(s0, s1);
            const __m256d t23 = _mm256_hadd_pd(s2, s3);
            const __m256d lo = _mm256_permute2f128_pd(t01, t23, 0x20);
            const __m256d hi = _mm256_permute2f128_pd(t01, t23, 0x31);
            __m256d dots = _mm256_add_pd(lo, hi);
            if (kk < k) {
                alignas(32) double tail[4] = {0, 0, 0, 0};
                for (int jj = 0; jj < 4; ++jj)
                    for (int p = kk; p < k; ++p)
                        tail[jj] += arow[p] * b[(size_t)(j + jj) * ldb + p];
                dots = _mm256_add_pd(dots, _mm256_load_pd(tail));
            }
            double* cp = c + (size_t)i * ldc + j;
            if (acc) dots = _mm256_add_pd(dots, _mm256_loadu_pd(cp));
            _mm256_storeu_pd(cp, dots);
        }
    }
    if (nj < n)
        scalar::gemm_nt(m, n - nj, k, a, lda, b + (size_t)nj * ldb, ldb, c + nj,
                        ldc, acc);
}

void gemm_tn(int m, int n, int k, const double* a, int lda, const double* b,
             int ldb, double* c, int ldc, bool acc) {
    const int MR = 2, NR = 8;
    const int mi = m - m % MR, nj = n - n % NR;
    for (int i = 0; i < mi; i += MR) {
        for (int j = 0; j < nj; j += NR) {
            __m256d acc00, acc01, acc10, acc11;
            if (acc) {
                acc00 = _mm256_loadu_pd(c + (size_t)(i + 0) * ldc + j);
                acc01 = _mm256_loadu_pd(c + (size_t)(i + 0) * ldc + j + 4);
                acc10 = _mm256_loadu_pd(c + (size_t)(i + 1) * ldc + j);
                acc11 = _mm256_loadu_pd(c + (size_t)(i + 1) * ldc + j + 4);
            } else {
                acc00 = acc01 = acc10 = acc11 = _mm256_setzero_pd();
            }
            for (int p = 0; p < k; ++p) {
                const __m256d b0 = _mm256_loadu_pd(b + (size_t)p * ldb + j);
                const __m256d b1 = _mm256_loadu_pd(b + (size_t)p * ldb + j + 4);
                const __m256d a0 = _mm256_broadcast_sd(a + (size_t)p * lda + i);
                const __m256d a1 = _mm256_broadcast_sd(a + (size_t)p * lda + i + 1);
                acc00 = _mm256_fmadd_pd(a0, b0, acc00);
                acc01 = _mm256_fmadd_pd(a0, b1, acc01);
                acc10 = _mm256_fmadd_pd(a1, b0, acc10);
                acc11 = _mm256_fmadd_pd(a1, b1, acc11);
            }
            _mm256_storeu_pd(c + (size_t)(i + 0) * ldc + j, acc00);
            _mm256_storeu_pd(c + (size_t)(i + 0) * ldc + j + 4, acc01);
            _mm256_storeu_pd(c + (size_t)(i + 1) * ldc + j, acc10);
            _mm256_storeu_pd(c + (size_t)(i + 1) * ldc + j + 4, acc11);
        }
    }
    run_edges(m, n, mi, nj, [&](int i0, int mm, int j0, int nn) {
        scalar::gemm_tn(mm, nn, k, a + i0, lda, b + j0, ldb,
                        c + (size_t)i0 * ldc + j0, ldc, acc);
    });
}

#define EW_LOOP(expr_vec, expr_scalar)                    \
    size_t i = 0;                                         \
    for (; i + 4 <= n; i += 4) {                          \
        expr_vec;                                         \
    }                                                     \
    for (; i < n; ++i) {                                  \
        expr_scalar;                                      \
    }

void add(const double* a, const double* b, double* y, size_t n) {
    EW_LOOP(_mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(a + i),
                                                  _mm256_loadu_pd(b + i))),
            y[i] = a[i] + b[i])
}

void sub(const double* a, const double* b, double* y, size_t n) {
    EW_LOOP(_mm256_storeu_pd(y + i, _mm256_sub_pd(_mm256_loadu_pd(a + i),
                                                  _mm256_loadu_pd(b + i))),
            y[i] = a[i] - b[i])
}

void mul(const double* a, const double* b, double* y, size_t n) {
    EW_LOOP(_mm256_storeu_pd(y + i, _mm256_mul_pd(_mm256_loadu_pd(a + i),
                                                  _mm256_loadu_pd(b + i))),
            y[i] = a[i] * b[i])
}

void div(const double* a, const double* b, double* y, size_t n) {
    EW_LOOP(_mm256_storeu_pd(y + i, _mm256_div_pd(_mm256_loadu_pd(a + i),
                                                  _mm256_loadu_pd(b + i))),
            y[i] = a[i] / b[i])
}

void madd_acc(const double* a, const double* b, double* y, size_t n) {
    EW_LOOP(_mm256_storeu_pd(y + i, _mm256_fmadd_pd(_mm256_loadu_pd(a + i),
                                                    _mm256_loadu_pd(b + i),
                                                    _mm256_loadu_pd(y + i))),
            y[i] += a[i] * b[i])
}

void axpy(double alpha, const double* x, double* y, size_t n) {
    const __m256d av = _mm256_set1_pd(alpha);
    EW_LOOP(_mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i),
                                                    _mm256_loadu_pd(y + i))),
            y[i] += alpha * x[i])
}

void affine(const double* x, double alpha, double beta, double* y, size_t n) {
    const __m256d av = _mm256_set1_pd(alpha), bv = _mm256_set1_pd(beta);
    EW_LOOP(_mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), bv)),
            y[i] = alpha * x[i] + beta)
}

void fill(double* y, double v, size_t n) {
    const __m256d vv = _mm256_set1_pd(v);
    EW_LOOP(_mm256_storeu_pd(y + i, vv), y[i] = v)
}

void clamp_min(const double* x, double lo, double* y, size_t n) {
    const __m256d lov = _mm256_set1_pd(lo);
    EW_LOOP(_mm256_storeu_pd(y + i, _mm256_max_pd(_mm256_loadu_pd(x + i), lov)),
            y[i] = x[i] < lo ? lo : x[i])
}

void relu(const double* x, double* y, size_t n) {
    const __m256d z = _mm256_setzero_pd();
    EW_LOOP(_mm256_storeu_pd(y + i, _mm256_max_pd(_mm256_loadu_pd(x + i), z)),
            y[i] = x[i] > 0.0 ? x[i] : 0.0)
}

void relu_bwd_acc(const double* x, const double* dy, double* dx, size_t n) {
    const __m256d z = _mm256_setzero_pd();
    EW_LOOP(
        {
            const __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(x + i), z, _CMP_GT_OQ);
            const __m256d g = _mm256_and_pd(mask, _mm256_loadu_pd(dy + i));
            _mm256_storeu_pd(dx + i, _mm256_add_pd(_mm256_loadu_pd(dx + i), g));
        },
        dx[i] += x[i] > 0.0 ? dy[i] : 0.0)
}

void lrelu(const double* x, double slope, double* y, size_t n) {
    const __m256d z = _mm256_setzero_pd(), sv = _mm256_set1_pd(slope);
    EW_LOOP(
        {
            const __m256d xv = _mm256_loadu_pd(x + i);
            const __m256d mask = _mm256_cmp_pd(xv, z, _CMP_GT_OQ);
            _mm256_storeu_pd(y + i, _mm256_blendv_pd(_mm256_mul_pd(sv, xv), xv, mask));
        },
        y[i] = x[i] > 0.0 ? x[i] : slope * x[i])
}

void lrelu_bwd_acc(const double* x, double slope, const double* dy, double* dx,
                   size_t n) {
    const __m256d z = _mm256_setzero_pd(), sv = _mm256_set1_pd(slope);
    EW_LOOP(
        {
            const __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(x + i), z, _CMP_GT_OQ);
            const __m256d dyv = _mm256_loadu_pd(dy + i);
            const __m256d g = _mm256_blendv_pd(_mm256_mul_pd(sv, dyv), dyv, mask);
            _mm256_storeu_pd(dx + i, _mm256_add_pd(_mm256_loadu_pd(dx + i), g));
        },
        dx[i] += x[i] > 0.0 ? dy[i] : slope * dy[i])
}

namespace {

// exp via the classic rational approximation on r = x - n*ln2 (Cephes
// coefficients), then a scale by 2^n assembled in the exponent bits.
inline __m256d exp4(__m256d x) {
    const __m256d hi = _mm256_set1_pd(708.0), lo = _mm256_set1_pd(-708.0);
    x = _mm256_min_pd(_mm256_max_pd(x, lo), hi);

    const __m256d log2e = _mm256_set1_pd(1.4426950408889634073599);
    const __m256d c1 = _mm256_set1_pd(6.93145751953125e-1);
    const __m256d c2 = _mm256_set1_pd(1.42860682030941723212e-6);

    __m256d nf = _mm256_round_pd(_mm256_mul_pd(x, log2e),
                                 _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_fnmadd_pd(nf, c1, x);
    r = _mm256_fnmadd_pd(nf, c2, r);
    const __m256d rr = _mm256_mul_pd(r, r);

    __m256d px = _mm256_set1_pd(1.26177193074810590878e-4);
    px = _mm256_fmadd_pd(px, rr, _mm256_set1_pd(3.02994407707441961300e-2));
    px = _mm256_fmadd_pd(px, rr, _mm256_set1_pd(9.99999999999999999910e-1));
    px = _mm256_mul_pd(px, r);

    __m256d qx = _mm256_set1_pd(3.00198505138664455042e-6);
    qx = _mm256_fmadd_pd(qx, rr, _mm256_set1_pd(2.52448340349684104192e-3));
    qx = _mm256_fmadd_pd(qx, rr, _mm256_set1_pd(2.27265548208155028766e-1));
    qx = _mm256_fmadd_pd(qx, rr, _mm256_set1_pd(2.00000000000000000005e0));

    const __m256d e = _mm256_add_pd(
        _mm256_set1_pd(1.0),
        _mm256_mul_pd(_mm256_set1_pd(2.0),
                      _mm256_div_pd(px, _mm256_sub_pd(qx, px))));

    // 2^n
    const __m128i ni = _mm256_cvtpd_epi32(nf);
    const __m256i n64 = _mm256_cvtepi32_epi64(ni);
    const __m256i bits =
        _mm256_slli_epi64(_mm256_add_epi64(n64, _mm256_set1_epi64x(1023)), 52);
    return _mm256_mul_pd(e, _mm256_castsi256_pd(bits));
}

}  // namespace

void vexp(const double* x, double* y, size_t n) {
    size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, exp4(_mm256_loadu_pd(x + i)));
    for (; i < n; ++i) {
        double v = x[i];
        if (v > 708.0) v = 708.0;
        if (v < -708.0) v = -708.0;
        y[i] = std::exp(v);
    }
}

double sum(const double* x, size_t n) {
    __m256d acc = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    double s = hsum(acc);
    for (; i < n; ++i) s += x[i];
    return s;
}

double dot(const double* a, const double* b, size_t n) {
    __m256d acc = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
    double s = hsum(acc);
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

double vmax(const double* x, size_t n) {
    size_t i = 0;
    double m = x[0];
    if (n >= 4) {
        __m256d acc = _mm256_loadu_pd(x);
        for (i = 4; i + 4 <= n; i += 4)
            acc = _mm256_max_pd(acc, _mm256_loadu_pd(x + i));
        alignas(32) double tmp[4];
        _mm256_store_pd(tmp, acc);
        m = tmp[0];
        for (int j = 1; j < 4; ++j) m = tmp[j] > m ? tmp[j] : m;
    }
    for (; i < n; ++i) m = x[i] > m ? x[i] : m;
    return m;
}

double vmin(const double* x, size_t n) {
    size_t i = 0;
    double m = x[0];
    if (n >= 4) {
        __m256d acc = _mm256_loadu_pd(x);
        for (i = 4; i + 4 <= n; i += 4)
            acc = _mm256_min_pd(acc, _mm256_loadu_pd(x + i));
        alignas(32) double tmp[4];
        _mm256_store_pd(tmp, acc);
        m = tmp[0];
        for (int j = 1; j < 4; ++j) m = tmp[j] < m ? tmp[j] : m;
    }
    for (; i < n; ++i) m = x[i] < m ? x[i] : m;
    return m;
}

bool all_finite(const double* x, size_t n) {
    // finite iff x - x == 0 (Inf-Inf and NaN-NaN are both NaN)
    const __m256d z = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d v = _mm256_loadu_pd(x + i);
        const __m256d ok = _mm256_cmp_pd(_mm256_sub_pd(v, v), z, _CMP_EQ_OQ);
        if (_mm256_movemask_pd(ok) != 0xF) return false;
    }
    for (; i < n; ++i)
        if (!std::isfinite(x[i])) return false;
    return true;
}

void adam(double* p, const double* g, double* m, double* v, size_t n, double lr,
          double beta1, double beta2, double eps, double c1, double c2) {
    const __m256d b1 = _mm256_set1_pd(beta1), nb1 = _mm256_set1_pd(1.0 - beta1);
    const __m256d b2 = _mm256_set1_pd(beta2), nb2 = _mm256_set1_pd(1.0 - beta2);
    const __m256d lrv = _mm256_set1_pd(lr), epsv = _mm256_set1_pd(eps);
    const __m256d ic1 = _mm256_set1_pd(1.0 / c1), ic2 = _mm256_set1_pd(1.0 / c2);
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d gv = _mm256_loadu_pd(g + i);
        __m256d mv = _mm256_fmadd_pd(nb1, gv, _mm256_mul_pd(b1, _mm256_loadu_pd(m + i)));
        __m256d vv = _mm256_fmadd_pd(nb2, _mm256_mul_pd(gv, gv),
                                     _mm256_mul_pd(b2, _mm256_loadu_pd(v + i)));
        _mm256_storeu_pd(m + i, mv);
        _mm256_storeu_pd(v + i, vv);
        const __m256d mhat = _mm256_mul_pd(mv, ic1);
        const __m256d vhat = _mm256_mul_pd(vv, ic2);
        const __m256d den = _mm256_add_pd(_mm256_sqrt_pd(vhat), epsv);
        const __m256d upd = _mm256_div_pd(_mm256_mul_pd(lrv, mhat), den);
        _mm256_storeu_pd(p + i, _mm256_sub_pd(_mm256_loadu_pd(p + i), upd));
    }
    if (i < n)
        scalar::adam(p + i, g + i, m + i, v + i, n - i, lr, beta1, beta2, eps, c1, c2);
}

#undef EW_LOOP

}  // namespace dehaze::kernels::avx2
