#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "dehaze/adam.hpp"
#include "dehaze/tensor.hpp"
#include "testutil.hpp"

using namespace dehaze;
using testutil::fd_check;
using testutil::random_tensor;

TEST_CASE("backward: d/dx sum(x*x) = 2x") {
    Tensor x = Tensor::from({3}, {1.0, 2.0, 3.0}, true);
    Tensor f = sum(mul(x, x));
    backward(f);
    const auto g = x.grad_or_zeros();
    CHECK(g[0] == doctest::Approx(2.0));
    CHECK(g[1] == doctest::Approx(4.0));
    CHECK(g[2] == doctest::Approx(6.0));
}

TEST_CASE("backward: constant loss leaves grads absent/zero") {
    Tensor x = Tensor::from({4}, {1, 2, 3, 4}, true);
    Tensor c = Tensor::scalar(5.0);
    backward(c);  // no-op, nothing requires grad upstream
    const auto g = x.grad_or_zeros();
    for (double v : g) CHECK(v == 0.0);
}

TEST_CASE("backward rejects non-scalar loss") {
    Tensor x = Tensor::from({2}, {1, 2}, true);
    Tensor y = mul(x, x);
    CHECK_THROWS(backward(y));
}

TEST_CASE("grad accumulates across multiple uses of a tensor") {
    Tensor x = Tensor::from({2}, {3.0, -1.0}, true);
    Tensor f = sum(add(mul(x, 2.0), mul(x, x)));  // d/dx = 2 + 2x
    backward(f);
    CHECK(x.grad()[0] == doctest::Approx(8.0));
    CHECK(x.grad()[1] == doctest::Approx(0.0));
}

TEST_CASE("conv2d: 3x3 ones * 3x3 ones = 9") {
    Tensor x = Tensor::full({1, 1, 3, 3}, 1.0);
    Tensor k = Tensor::full({1, 1, 3, 3}, 1.0);
    Tensor y = conv2d(x, k, 1, 0);
    CHECK(y.shape() == std::vector<int>{1, 1, 1, 1});
    CHECK(y.item() == doctest::Approx(9.0));
}

TEST_CASE("conv2d: 1x1 identity kernel preserves input") {
    Tensor x = random_tensor({2, 3, 5, 4}, 17);
    Tensor k = Tensor::zeros({3, 3, 1, 1});
    for (int f = 0; f < 3; ++f) k.data_mut()[f * 3 + f] = 1.0;
    Tensor y = conv2d(x, k, 1, 0);
    REQUIRE(y.shape() == x.shape());
    for (size_t i = 0; i < x.size(); ++i)
        CHECK(y.data()[i] == doctest::Approx(x.data()[i]).epsilon(1e-14));
}

namespace {

// independent quadruple-loop oracle for cross-correlation conv
std::vector<double> conv_oracle(const Tensor& x, const Tensor& k, int stride,
                                int pad, std::vector<int>& oshape) {
    const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const int F = k.dim(0), KH = k.dim(2), KW = k.dim(3);
    const int OH = (H + 2 * pad - KH) / stride + 1;
    const int OW = (W + 2 * pad - KW) / stride + 1;
    oshape = {N, F, OH, OW};
    std::vector<double> out((size_t)N * F * OH * OW, 0.0);
    for (int n = 0; n < N; ++n)
        for (int f = 0; f < F; ++f)
            for (int oh = 0; oh < OH; ++oh)
                for (int ow = 0; ow < OW; ++ow) {
                    double s = 0.0;
                    for (int c = 0; c < C; ++c)
                        for (int i = 0; i < KH; ++i)
                            for (int j = 0; j < KW; ++j) {
                                const int ih = oh * stride - pad + i;
                                const int iw = ow * stride - pad + j;
                                if (ih < 0 || ih >= H || iw < 0 || iw >= W) continue;
                                s += x.data()[((size_t)(n * C + c) * H + ih) * W + iw] *
                                     k.data()[((size_t)(f * C + c) * KH + i) * KW + j];
                            }
                    out[((size_t)(n * F + f) * OH + oh) * OW + ow] = s;
                }
    return out;
}

}  // namespace

TEST_CASE("conv2d matches the direct-summation oracle (stride 2, pad 1)") {
    Tensor x = random_tensor({1, 2, 6, 6}, 23);
    Tensor k = random_tensor({3, 2, 3, 3}, 24);
    std::vector<int> oshape;
    const auto want = conv_oracle(x, k, 2, 1, oshape);
    Tensor y = conv2d(x, k, 2, 1);
    REQUIRE(y.shape() == oshape);
    for (size_t i = 0; i < want.size(); ++i)
        CHECK(y.data()[i] == doctest::Approx(want[i]).epsilon(1e-12));
}

TEST_CASE("conv2d rejects channel mismatch") {
    Tensor x = random_tensor({1, 2, 6, 6}, 1);
    Tensor k = random_tensor({3, 4, 3, 3}, 2);
    CHECK_THROWS(conv2d(x, k, 1, 0));
}

TEST_CASE("conv2d gradient matches finite differences") {
    for (uint64_t seed = 0; seed < 3; ++seed) {
        Tensor x = random_tensor({1, 1, 5, 5}, 100 + seed, true);
        Tensor k = random_tensor({1, 1, 3, 3}, 200 + seed, true);
        const double err = fd_check(
            [](std::vector<Tensor>& in) { return sum(conv2d(in[0], in[1], 1, 0)); },
            {x, k});
        CHECK(err < 1e-4);
    }
}

TEST_CASE("conv2d with bias gradient matches finite differences") {
    Tensor x = random_tensor({2, 2, 4, 4}, 31, true);
    Tensor k = random_tensor({3, 2, 3, 3}, 32, true);
    Tensor b = random_tensor({3}, 33, true);
    const double err = fd_check(
        [](std::vector<Tensor>& in) {
            Tensor y = conv2d(in[0], in[1], in[2], 2, 1);
            return mean(mul(y, y));
        },
        {x, k, b});
    CHECK(err < 1e-4);
}

TEST_CASE("batchnorm: train mode normalizes per channel") {
    // channel variance ~21 keeps the eps=1e-5 bias under the 1e-6 bound
    Tensor x = random_tensor({2, 3, 4, 4}, 40, false, -8.0, 8.0);
    Tensor gamma = Tensor::full({3}, 1.0);
    Tensor beta = Tensor::zeros({3});
    std::vector<double> rm(3, 0.0), rv(3, 1.0);
    Tensor y = batchnorm(x, gamma, beta, rm, rv, true);
    const size_t hw = 16, m = 2 * hw;
    for (int c = 0; c < 3; ++c) {
        double s = 0.0, sq = 0.0;
        for (int n = 0; n < 2; ++n)
            for (size_t i = 0; i < hw; ++i) {
                const double v = y.data()[(n * 3 + c) * hw + i];
                s += v;
                sq += v * v;
            }
        const double mu = s / m;
        const double var = sq / m - mu * mu;
        CHECK(std::fabs(mu) < 1e-10);
        CHECK(std::fabs(var - 1.0) < 1e-6);
    }
}

TEST_CASE("batchnorm: gamma=0 gives beta everywhere") {
    Tensor x = random_tensor({1, 2, 3, 3}, 41);
    Tensor gamma = Tensor::zeros({2});
    Tensor beta = Tensor::from({2}, {0.3, -0.7});
    std::vector<double> rm(2, 0.0), rv(2, 1.0);
    Tensor y = batchnorm(x, gamma, beta, rm, rv, true);
    for (int c = 0; c < 2; ++c)
        for (size_t i = 0; i < 9; ++i)
            CHECK(y.data()[c * 9 + i] == doctest::Approx(beta.data()[c]));
}

TEST_CASE("batchnorm: zero-variance channel is safe") {
    Tensor x = Tensor::full({1, 1, 2, 2}, 3.0);
    Tensor gamma = Tensor::full({1}, 1.0);
    Tensor beta = Tensor::zeros({1});
    std::vector<double> rm(1, 0.0), rv(1, 1.0);
    Tensor y = batchnorm(x, gamma, beta, rm, rv, true);
    for (size_t i = 0; i < 4; ++i) CHECK(std::isfinite(y.data()[i]));
}

TEST_CASE("batchnorm gradients match finite differences (train and eval)") {
    for (bool train : {true, false}) {
        Tensor x = random_tensor({2, 2, 3, 3}, 50 + train, true);
        Tensor gamma = random_tensor({2}, 52, true, 0.5, 1.5);
        Tensor beta = random_tensor({2}, 53, true);
        std::vector<double> rm(2, 0.1), rv(2, 0.9);
        const double err = fd_check(
            [&rm, &rv, train](std::vector<Tensor>& in) {
                std::vector<double> rm2 = rm, rv2 = rv;  // keep stats fixed per call
                Tensor y = batchnorm(in[0], in[1], in[2], rm2, rv2, train);
                return mean(mul(y, y));
            },
            {x, gamma, beta});
        CHECK(err < 1e-4);
    }
}

TEST_CASE("pixel_shuffle: r=1 is the identity") {
    Tensor x = random_tensor({1, 3, 2, 2}, 60);
    Tensor y = pixel_shuffle(x, 1);
    REQUIRE(y.shape() == x.shape());
    for (size_t i = 0; i < x.size(); ++i) CHECK(y.data()[i] == x.data()[i]);
}

TEST_CASE("pixel_shuffle: declared layout on 1x4x1x1") {
    Tensor x = Tensor::from({1, 4, 1, 1}, {1.0, 2.0, 3.0, 4.0});
    Tensor y = pixel_shuffle(x, 2);
    REQUIRE(y.shape() == std::vector<int>{1, 1, 2, 2});
    CHECK(y.data()[0] == 1.0);
    CHECK(y.data()[1] == 2.0);
    CHECK(y.data()[2] == 3.0);
    CHECK(y.data()[3] == 4.0);
}

TEST_CASE("pixel_unshuffle inverts pixel_shuffle") {
    for (int r : {1, 2, 4}) {
        Tensor x = random_tensor({2, 2 * r * r, 3, 5}, 61 + r);
        Tensor y = pixel_unshuffle(pixel_shuffle(x, r), r);
        REQUIRE(y.shape() == x.shape());
        for (size_t i = 0; i < x.size(); ++i) CHECK(y.data()[i] == x.data()[i]);
    }
}

TEST_CASE("pixel_shuffle rejects indivisible channels") {
    Tensor x = random_tensor({1, 3, 2, 2}, 63);
    CHECK_THROWS(pixel_shuffle(x, 2));
}

TEST_CASE("maxpool basics and tie-break determinism") {
    Tensor x = Tensor::from({1, 1, 2, 2}, {1, 2, 3, 4});
    CHECK(maxpool(x, 2).item() == 4.0);

    // ties route the gradient to the first max in scan order
    Tensor t = Tensor::from({1, 1, 2, 2}, {5, 5, 5, 5}, true);
    Tensor y = maxpool(t, 2);
    backward(sum(y));
    CHECK(t.grad()[0] == 1.0);
    CHECK(t.grad()[1] == 0.0);
    CHECK(t.grad()[2] == 0.0);
    CHECK(t.grad()[3] == 0.0);
}

TEST_CASE("maxpool rejects indivisible extents") {
    Tensor x = random_tensor({1, 1, 5, 4}, 70);
    CHECK_THROWS(maxpool(x, 2));
}

TEST_CASE("softmax of equal logits is exactly 1/C") {
    for (int c : {2, 5, 8}) {
        Tensor x = Tensor::full({1, c, 1, 1}, 0.37);
        Tensor s = softmax(x, 1);
        for (int i = 0; i < c; ++i) CHECK(s.data()[i] == 1.0 / c);
    }
}

TEST_CASE("global_avg_pool of [[1,2],[3,4]] is 2.5") {
    Tensor x = Tensor::from({1, 1, 2, 2}, {1, 2, 3, 4});
    CHECK(global_avg_pool(x).item() == doctest::Approx(2.5));
}

TEST_CASE("elementwise and reduction gradients match finite differences") {
    auto run = [](auto&& f, std::vector<Tensor> in) {
        CHECK(fd_check(f, std::move(in)) < 1e-4);
    };
    Tensor a = random_tensor({2, 3}, 80, true);
    Tensor b = random_tensor({2, 3}, 81, true, 0.5, 2.0);
    run([](std::vector<Tensor>& t) { return sum(mul(t[0], t[1])); }, {a, b});
    run([](std::vector<Tensor>& t) { return mean(div(t[0], t[1])); }, {a, b});
    run([](std::vector<Tensor>& t) { return sum(abs(t[0])); }, {a});
    run([](std::vector<Tensor>& t) { return sum(log(clamp_min(t[0], 0.3))); }, {b});
    run([](std::vector<Tensor>& t) { return sum(sigmoid(t[0])); }, {a});
    run([](std::vector<Tensor>& t) { return sum(mul(relu(t[0]), relu(t[0]))); }, {a});
    run([](std::vector<Tensor>& t) { return sum(mul(leaky_relu(t[0]), t[0])); }, {a});
    run([](std::vector<Tensor>& t) { return mean(sub(1.0, t[0])); }, {a});

    Tensor x4 = random_tensor({2, 3, 2, 2}, 82, true);
    Tensor s4 = random_tensor({2, 3, 1, 1}, 83, true);
    run([](std::vector<Tensor>& t) { return sum(mul(mul(t[0], t[1]), t[0])); },
        {x4, s4});
    run([](std::vector<Tensor>& t) { return sum(mul(add(t[0], t[1]), t[0])); },
        {x4, s4});
    run([](std::vector<Tensor>& t) { return sum(mul(softmax(t[0], 1), t[0])); },
        {x4});
    run([](std::vector<Tensor>& t) { return sum(mul(global_avg_pool(t[0]), global_avg_pool(t[0]))); },
        {x4});
    run([](std::vector<Tensor>& t) { return sum(mul(pad_reflect(t[0], 1), pad_reflect(t[0], 1))); },
        {x4});
    run([](std::vector<Tensor>& t) { return sum(mul(minmax_normalize_items(t[0]), t[0])); },
        {x4});

    Tensor p = random_tensor({1, 8, 2, 2}, 84, true);
    run([](std::vector<Tensor>& t) {
        Tensor y = pixel_shuffle(t[0], 2);
        return sum(mul(y, y));
    },
        {p});
    Tensor mp = random_tensor({1, 2, 4, 4}, 85, true);
    run([](std::vector<Tensor>& t) {
        Tensor y = maxpool(t[0], 2);
        return sum(mul(y, y));
    },
        {mp});

    Tensor ma = random_tensor({2, 3, 4}, 86, true);
    Tensor mb = random_tensor({2, 4, 5}, 87, true);
    run([](std::vector<Tensor>& t) {
        Tensor y = matmul(t[0], t[1]);
        return sum(mul(y, y));
    },
        {ma, mb});
    Tensor mat = random_tensor({2, 4, 3}, 88, true);
    run([](std::vector<Tensor>& t) {
        Tensor y = matmul(t[0], t[1], true, false);
        return sum(mul(y, y));
    },
        {mat, mb});
    Tensor mbt = random_tensor({2, 5, 4}, 89, true);
    run([](std::vector<Tensor>& t) {
        Tensor y = matmul(t[0], t[1], false, true);
        return sum(mul(y, y));
    },
        {ma, mbt});

    Tensor c1 = random_tensor({1, 2, 2, 2}, 90, true);
    Tensor c2 = random_tensor({1, 3, 2, 2}, 91, true);
    run([](std::vector<Tensor>& t) {
        Tensor y = concat({t[0], t[1]}, 1);
        return sum(mul(y, y));
    },
        {c1, c2});
}

TEST_CASE("matmul agrees with a straightforward loop") {
    Tensor a = random_tensor({2, 3, 4}, 92);
    Tensor b = random_tensor({2, 4, 5}, 93);
    Tensor y = matmul(a, b);
    for (int n = 0; n < 2; ++n)
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 5; ++j) {
                double s = 0.0;
                for (int k = 0; k < 4; ++k)
                    s += a.data()[(n * 3 + i) * 4 + k] * b.data()[(n * 4 + k) * 5 + j];
                CHECK(y.data()[(n * 3 + i) * 5 + j] == doctest::Approx(s).epsilon(1e-13));
            }
}

TEST_CASE("minmax_normalize_items maps each item onto [0,1]") {
    Tensor x = random_tensor({3, 2, 4, 4}, 94, false, -3.0, 7.0);
    Tensor y = minmax_normalize_items(x);
    for (int i = 0; i < 3; ++i) {
        double mn = 2.0, mx = -2.0;
        for (size_t j = 0; j < 32; ++j) {
            const double v = y.data()[i * 32 + j];
            mn = std::min(mn, v);
            mx = std::max(mx, v);
        }
        CHECK(mn == 0.0);
        CHECK(mx == 1.0);
    }
    Tensor flat = minmax_normalize_items(Tensor::full({2, 5}, 0.4));
    for (size_t i = 0; i < flat.size(); ++i) CHECK(flat.data()[i] == 0.0);
}

TEST_CASE("non-finite op output raises with the op name") {
    Tensor z = Tensor::zeros({2});
    CHECK_THROWS_WITH_AS(log(z), doctest::Contains("log"), std::runtime_error);
}

TEST_CASE("no-grad mode records no graph") {
    Tensor x = Tensor::from({2}, {1.0, 2.0}, true);
    Tensor y;
    {
        NoGradGuard ng;
        y = sum(mul(x, x));
    }
    CHECK_FALSE(y.requires_grad());
}

TEST_CASE("determinism: same op sequence twice is bit-identical") {
    auto make = [](uint64_t seed) {
        Tensor x = random_tensor({1, 4, 8, 8}, seed);
        Tensor k = random_tensor({4, 4, 3, 3}, seed + 1);
        Tensor y = conv2d(x, k, 1, 1);
        y = softmax(y, 1);
        return sum(mul(y, y)).item();
    };
    CHECK(make(7) == make(7));
}

// ---- ADAM -------------------------------------------------------------------

TEST_CASE("adam: bias-corrected first step is about -lr") {
    Tensor p = Tensor::from({1}, {0.0}, true);
    {
        Tensor loss = mul(p, 1.0);
        backward(loss);  // grad = 1
    }
    AdamState st;
    st.lr = 1e-4;
    std::vector<Tensor> params{p};
    adam_step(params, st);
    CHECK(p.data()[0] == doctest::Approx(-1e-4).epsilon(1e-7));
    CHECK(st.t == 1);
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
    Tensor p = Tensor::from({3}, {1.0, -2.0, 0.5}, true);
    AdamState st;
    std::vector<Tensor> params{p};
    for (int i = 0; i < 5; ++i) adam_step(params, st);  // no grads at all
    CHECK(p.data()[0] == 1.0);
    CHECK(p.data()[1] == -2.0);
    CHECK(p.data()[2] == 0.5);
}

TEST_CASE("adam: 5 steps on f(t)=t^2 match a hand-rolled trace to 1e-12") {
    // independent scalar reference of the same recurrence
    double theta = 1.0, m = 0.0, v = 0.0;
    const double lr = 0.1, b1 = 0.5, b2 = 0.9, eps = 1e-8;
    std::vector<double> trace;
    for (int t = 1; t <= 5; ++t) {
        const double g = 2.0 * theta;
        m = b1 * m + (1 - b1) * g;
        v = b2 * v + (1 - b2) * g * g;
        const double mhat = m / (1 - std::pow(b1, t));
        const double vhat = v / (1 - std::pow(b2, t));
        theta -= lr * mhat / (std::sqrt(vhat) + eps);
        trace.push_back(theta);
    }

    Tensor p = Tensor::from({1}, {1.0}, true);
    AdamState st;
    st.lr = lr;
    st.beta1 = b1;
    st.beta2 = b2;
    st.eps = eps;
    std::vector<Tensor> params{p};
    for (int t = 0; t < 5; ++t) {
        Tensor loss = mul(p, p);
        backward(loss);
        adam_step(params, st);
        CHECK(std::fabs(p.data()[0] - trace[t]) < 1e-12);
    }
}
