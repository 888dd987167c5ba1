// Scalar reference lane. Plain loops, no manual vectorization; built with
// -ffp-contract=off so results are the exact mul/add sequence written here.

#include "lanes.hpp"

#include <algorithm>
#include <cmath>

namespace dehaze::kernels::scalar {

void gemm_nn(int m, int n, int k, const double* a, int lda, const double* b,
             int ldb, double* c, int ldc, bool acc) {
    for (int i = 0; i < m; ++i) {
        double* crow = c + static_cast<size_t>(i) * ldc;
        if (!acc) std::fill(crow, crow + n, 0.0);
        for (int p = 0; p < k; ++p) {
            const double av = a[static_cast<size_t>(i) * lda + p];
            const double* brow = b + static_cast<size_t>(p) * ldb;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

void gemm_nt(int m, int n, int k, const double* a, int lda, const double* b,
             int ldb, double* c, int ldc, bool acc) {
    for (int i = 0; i < m; ++i) {
        const double* arow = a + static_cast<size_t>(i) * lda;
        for (int j = 0; j < n; ++j) {
            const double* brow = b + static_cast<size_t>(j) * ldb;
            double s = 0.0;
            for (int p = 0; p < k; ++p) s += arow[p] * brow[p];
            double* cp = c + static_cast<size_t>(i) * ldc + j;
            *cp = acc ? *cp + s : s;
        }
    }
}

void gemm_tn(int m, int n, int k, const double* a, int lda, const double* b,
             int ldb, double* c, int ldc, bool acc) {
    for (int i = 0; i < m; ++i) {
        double* crow = c + static_cast<size_t>(i) * ldc;
        if (!acc) std::fill(crow, crow + n, 0.0);
        for (int p = 0; p < k; ++p) {
            const double av = a[static_cast<size_t>(p) * lda + i];
            const double* brow = b + static_cast<size_t>(p) * ldb;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

void add(const double* a, const double* b, double* y, size_t n) {
    for (size_t i = 0; i < n; ++i) y[i] = a[i] + b[i];
}

void sub(const double* a, const double* b, double* y, size_t n) {
    for (size_t i = 0; i < n; ++i) y[i] = a[i] - b[i];
}

void mul(const double* a, const double* b, double* y, size_t n) {
    for (size_t i = 0; i < n; ++i) y[i] = a[i] * b[i];
}

void div(const double* a, const double* b, double* y, size_t n) {
    for (size_t i = 0; i < n; ++i) y[i] = a[i] / b[i];
}

void madd_acc(const double* a, const double* b, double* y, size_t n) {
    for (size_t i = 0; i < n; ++i) y[i] += a[i] * b[i];
}

void axpy(double alpha, const double* x, double* y, size_t n) {
    for (size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void affine(const double* x, double alpha, double beta, double* y, size_t n) {
    for (size_t i = 0; i < n; ++i) y[i] = alpha * x[i] + beta;
}

void fill(double* y, double v, size_t n) { std::fill(y, y + n, v); }

void clamp_min(const double* x, double lo, double* y, size_t n) {
    for (size_t i = 0; i < n; ++i) y[i] = x[i] < lo ? lo : x[i];
}

void relu(const double* x, double* y, size_t n) {
    for (size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_bwd_acc(const double* x, const double* dy, double* dx, size_t n) {
    for (size_t i = 0; i < n; ++i)
        if (x[i] > 0.0) dx[i] += dy[i];
}

void lrelu(const double* x, double slope, double* y, size_t n) {
    for (size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : slope * x[i];
}

void lrelu_bwd_acc(const double* x, double slope, const double* dy, double* dx,
                   size_t n) {
    for (size_t i = 0; i < n; ++i) dx[i] += x[i] > 0.0 ? dy[i] : slope * dy[i];
}

void vexp(const double* x, double* y, size_t n) {
    for (size_t i = 0; i < n; ++i) {
        double v = x[i];
        if (v > 708.0) v = 708.0;
        if (v < -708.0) v = -708.0;
        y[i] = std::exp(v);
    }
}

double sum(const double* x, size_t n) {
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) s += x[i];
    return s;
}

double dot(const double* a, const double* b, size_t n) {
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

double vmax(const double* x, size_t n) {
    double m = x[0];
    for (size_t i = 1; i < n; ++i) m = std::max(m, x[i]);
    return m;
}

double vmin(const double* x, size_t n) {
    double m = x[0];
    for (size_t i = 1; i < n; ++i) m = std::min(m, x[i]);
    return m;
}

bool all_finite(const double* x, size_t n) {
    for (size_t i = 0; i < n; ++i)
        if (!std::isfinite(x[i])) return false;
    return true;
}

void adam(double* p, const double* g, double* m, double* v, size_t n, double lr,
          double beta1, double beta2, double eps, double c1, double c2) {
    for (size_t i = 0; i < n; ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * (g[i] * g[i]);
        const double mhat = m[i] / c1;
        const double vhat = v[i] / c2;
        p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

}  // namespace dehaze::kernels::scalar
