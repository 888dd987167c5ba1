#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "dehaze/kernels.hpp"

using namespace dehaze;

namespace {

std::vector<double> rand_vec(size_t n, uint64_t seed, double lo = -2.0,
                             double hi = 2.0) {
    std::mt19937_64 eng(seed);
    std::uniform_real_distribution<double> d(lo, hi);
    std::vector<double> v(n);
    for (auto& x : v) x = d(eng);
    return v;
}

double max_rel(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double den = std::max({std::fabs(a[i]), std::fabs(b[i]), 1.0});
        m = std::max(m, std::fabs(a[i] - b[i]) / den);
    }
    return m;
}

// naive triple loop, the independent oracle for all three gemm layouts
void gemm_oracle(char ta, char tb, int m, int n, int k,
                 const std::vector<double>& a, const std::vector<double>& b,
                 std::vector<double>& c, bool acc) {
    if (!acc) c.assign(static_cast<size_t>(m) * n, 0.0);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int p = 0; p < k; ++p) {
                const double av = ta == 'n' ? a[(size_t)i * k + p] : a[(size_t)p * m + i];
                const double bv = tb == 'n' ? b[(size_t)p * n + j] : b[(size_t)j * k + p];
                s += av * bv;
            }
            c[(size_t)i * n + j] += s;
        }
}

bool has_avx2 = kernels::lane_available(kernels::Lane::avx2);

}  // namespace

TEST_CASE("gemm variants match the naive oracle on both lanes") {
    std::mt19937_64 eng(7);
    for (int iter = 0; iter < 40; ++iter) {
        const int m = 1 + static_cast<int>(eng() % 17);
        const int n = 1 + static_cast<int>(eng() % 23);
        const int k = 1 + static_cast<int>(eng() % 19);
        const bool acc = (eng() & 1) != 0;
        const auto a = rand_vec((size_t)m * k, eng());
        const auto b = rand_vec((size_t)k * n, eng());
        const auto c0 = rand_vec((size_t)m * n, eng());

        for (auto lane : {kernels::Lane::scalar, kernels::Lane::avx2}) {
            if (lane == kernels::Lane::avx2 && !has_avx2) continue;
            const auto& t = kernels::table(lane);

            std::vector<double> want(c0), got(c0);
            gemm_oracle('n', 'n', m, n, k, a, b, want, acc);
            t.gemm_nn(m, n, k, a.data(), k, b.data(), n, got.data(), n, acc);
            CHECK(max_rel(got, want) < 1e-12);

            // nt: B stored as [n,k]
            const auto bt = rand_vec((size_t)n * k, eng());
            want = c0;
            got = c0;
            gemm_oracle('n', 't', m, n, k, a, bt, want, acc);
            t.gemm_nt(m, n, k, a.data(), k, bt.data(), k, got.data(), n, acc);
            CHECK(max_rel(got, want) < 1e-12);

            // tn: A stored as [k,m]
            const auto at = rand_vec((size_t)k * m, eng());
            want = c0;
            got = c0;
            gemm_oracle('t', 'n', m, n, k, at, b, want, acc);
            t.gemm_tn(m, n, k, at.data(), m, b.data(), n, got.data(), n, acc);
            CHECK(max_rel(got, want) < 1e-12);
        }
    }
}

TEST_CASE("gemm lanes agree on large shapes") {
    if (!has_avx2) return;
    const int m = 37, n = 61, k = 113;
    const auto a = rand_vec((size_t)m * k, 11);
    const auto b = rand_vec((size_t)k * n, 12);
    std::vector<double> cs((size_t)m * n), cv((size_t)m * n);
    kernels::table(kernels::Lane::scalar)
        .gemm_nn(m, n, k, a.data(), k, b.data(), n, cs.data(), n, false);
    kernels::table(kernels::Lane::avx2)
        .gemm_nn(m, n, k, a.data(), k, b.data(), n, cv.data(), n, false);
    CHECK(max_rel(cs, cv) < 1e-13);
}

TEST_CASE("elementwise kernels: lane equivalence incl. ragged tails") {
    if (!has_avx2) return;
    const auto& s = kernels::table(kernels::Lane::scalar);
    const auto& v = kernels::table(kernels::Lane::avx2);
    for (size_t n : {1u, 3u, 4u, 5u, 17u, 64u, 1001u}) {
        const auto a = rand_vec(n, 100 + n);
        const auto b = rand_vec(n, 200 + n, 0.5, 2.0);
        std::vector<double> ys(n), yv(n);

        s.add(a.data(), b.data(), ys.data(), n);
        v.add(a.data(), b.data(), yv.data(), n);
        CHECK(ys == yv);
        s.sub(a.data(), b.data(), ys.data(), n);
        v.sub(a.data(), b.data(), yv.data(), n);
        CHECK(ys == yv);
        s.mul(a.data(), b.data(), ys.data(), n);
        v.mul(a.data(), b.data(), yv.data(), n);
        CHECK(ys == yv);
        s.div(a.data(), b.data(), ys.data(), n);
        v.div(a.data(), b.data(), yv.data(), n);
        CHECK(ys == yv);
        s.relu(a.data(), ys.data(), n);
        v.relu(a.data(), yv.data(), n);
        CHECK(ys == yv);
        s.lrelu(a.data(), 0.2, ys.data(), n);
        v.lrelu(a.data(), 0.2, yv.data(), n);
        CHECK(max_rel(ys, yv) < 1e-15);
        s.clamp_min(a.data(), 0.1, ys.data(), n);
        v.clamp_min(a.data(), 0.1, yv.data(), n);
        CHECK(ys == yv);
        s.affine(a.data(), 1.7, -0.3, ys.data(), n);
        v.affine(a.data(), 1.7, -0.3, yv.data(), n);
        CHECK(max_rel(ys, yv) < 1e-15);

        ys = b;
        yv = b;
        s.axpy(0.77, a.data(), ys.data(), n);
        v.axpy(0.77, a.data(), yv.data(), n);
        CHECK(max_rel(ys, yv) < 1e-15);
        ys = b;
        yv = b;
        s.madd_acc(a.data(), b.data(), ys.data(), n);
        v.madd_acc(a.data(), b.data(), yv.data(), n);
        CHECK(max_rel(ys, yv) < 1e-15);

        CHECK(std::fabs(s.sum(a.data(), n) - v.sum(a.data(), n)) < 1e-12);
        CHECK(std::fabs(s.dot(a.data(), b.data(), n) - v.dot(a.data(), b.data(), n)) < 1e-12);
        CHECK(s.vmax(a.data(), n) == v.vmax(a.data(), n));
        CHECK(s.vmin(a.data(), n) == v.vmin(a.data(), n));
    }
}

TEST_CASE("vexp matches std::exp closely on both lanes") {
    for (auto lane : {kernels::Lane::scalar, kernels::Lane::avx2}) {
        if (lane == kernels::Lane::avx2 && !has_avx2) continue;
        const auto& t = kernels::table(lane);
        auto x = rand_vec(1003, 42, -30.0, 30.0);
        x.push_back(0.0);
        x.push_back(-700.0);
        x.push_back(700.0);
        std::vector<double> y(x.size());
        t.vexp(x.data(), y.data(), x.size());
        for (size_t i = 0; i < x.size(); ++i) {
            const double want = std::exp(x[i]);
            CHECK(std::fabs(y[i] - want) <= 1e-14 * want);
        }
    }
}

TEST_CASE("vexp clamps extreme arguments instead of overflowing") {
    const auto& t = kernels::ops();
    const double x[2] = {1e9, -1e9};
    double y[2];
    t.vexp(x, y, 2);
    CHECK(std::isfinite(y[0]));
    CHECK(y[1] >= 0.0);
}

TEST_CASE("relu/lrelu backward accumulate, also across lanes") {
    const auto x = rand_vec(37, 5);
    const auto dy = rand_vec(37, 6);
    for (auto lane : {kernels::Lane::scalar, kernels::Lane::avx2}) {
        if (lane == kernels::Lane::avx2 && !has_avx2) continue;
        const auto& t = kernels::table(lane);
        std::vector<double> dx(37, 0.5);
        t.relu_bwd_acc(x.data(), dy.data(), dx.data(), 37);
        for (size_t i = 0; i < 37; ++i)
            CHECK(dx[i] == doctest::Approx(0.5 + (x[i] > 0 ? dy[i] : 0.0)).epsilon(1e-15));
        dx.assign(37, 0.0);
        t.lrelu_bwd_acc(x.data(), 0.2, dy.data(), dx.data(), 37);
        for (size_t i = 0; i < 37; ++i)
            CHECK(dx[i] == doctest::Approx(x[i] > 0 ? dy[i] : 0.2 * dy[i]).epsilon(1e-15));
    }
}

TEST_CASE("all_finite flags NaN and Inf anywhere in the buffer") {
    for (auto lane : {kernels::Lane::scalar, kernels::Lane::avx2}) {
        if (lane == kernels::Lane::avx2 && !has_avx2) continue;
        const auto& t = kernels::table(lane);
        auto x = rand_vec(129, 8);
        CHECK(t.all_finite(x.data(), x.size()));
        for (size_t pos : {0u, 63u, 128u}) {
            auto bad = x;
            bad[pos] = std::numeric_limits<double>::quiet_NaN();
            CHECK_FALSE(t.all_finite(bad.data(), bad.size()));
            bad[pos] = std::numeric_limits<double>::infinity();
            CHECK_FALSE(t.all_finite(bad.data(), bad.size()));
        }
    }
}

TEST_CASE("adam kernel: lanes agree and first step matches hand formula") {
    const size_t n = 101;
    const auto g = rand_vec(n, 21);
    for (auto lane : {kernels::Lane::scalar, kernels::Lane::avx2}) {
        if (lane == kernels::Lane::avx2 && !has_avx2) continue;
        const auto& t = kernels::table(lane);
        std::vector<double> p(n, 1.0), m(n, 0.0), v(n, 0.0);
        const double b1 = 0.5, b2 = 0.9, lr = 1e-4, eps = 1e-8;
        t.adam(p.data(), g.data(), m.data(), v.data(), n, lr, b1, b2, eps,
               1.0 - b1, 1.0 - b2);
        for (size_t i = 0; i < n; ++i) {
            const double want = 1.0 - lr * g[i] / (std::sqrt(g[i] * g[i]) + eps);
            CHECK(p[i] == doctest::Approx(want).epsilon(1e-12));
        }
    }
}

TEST_CASE("lane forcing survives and reports") {
    const auto before = kernels::active_lane();
    kernels::force_lane(kernels::Lane::scalar);
    CHECK(kernels::active_lane() == kernels::Lane::scalar);
    CHECK(std::string(kernels::ops().name) == "scalar");
    if (has_avx2) {
        kernels::force_lane(kernels::Lane::avx2);
        CHECK(std::string(kernels::ops().name) == "avx2");
    }
    kernels::force_lane(before);
}
