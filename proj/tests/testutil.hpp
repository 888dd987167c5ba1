#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "dehaze/rng.hpp"
#include "dehaze/tensor.hpp"

namespace testutil {

inline std::vector<double> random_vec(size_t n, uint64_t seed, double lo = -1.0,
                                      double hi = 1.0) {
    std::mt19937_64 eng(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> v(n);
    for (auto& x : v) x = dist(eng);
    return v;
}

inline double rel_err(double got, double want) {
    const double denom = std::max({std::fabs(got), std::fabs(want), 1e-6});
    return std::fabs(got - want) / denom;
}

inline double max_abs_diff(const std::vector<double>& a,
                           const std::vector<double>& b) {
    double m = 0.0;
    for (size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

inline dehaze::Tensor random_tensor(const std::vector<int>& shape, uint64_t seed,
                                    bool requires_grad = false, double lo = -1.0,
                                    double hi = 1.0) {
    size_t n = 1;
    for (int d : shape) n *= static_cast<size_t>(d);
    return dehaze::Tensor::from(shape, random_vec(n, seed, lo, hi), requires_grad);
}

// Central-difference gradient check of `f` against the reverse-mode gradient
// of each tensor in `inputs`. Returns the max elementwise relative error.
template <typename F>
double fd_check(F&& f, std::vector<dehaze::Tensor> inputs, double h = 1e-5) {
    dehaze::Tensor loss = f(inputs);
    for (auto& t : inputs) t.zero_grad();
    dehaze::backward(loss);

    double worst = 0.0;
    for (auto& t : inputs) {
        if (!t.requires_grad()) continue;
        const auto analytic = t.grad_or_zeros();
        for (size_t i = 0; i < t.size(); ++i) {
            const double orig = t.data()[i];
            t.data_mut()[i] = orig + h;
            double fp;
            {
                dehaze::NoGradGuard ng;
                fp = f(inputs).item();
            }
            t.data_mut()[i] = orig - h;
            double fm;
            {
                dehaze::NoGradGuard ng;
                fm = f(inputs).item();
            }
            t.data_mut()[i] = orig;
            const double fd = (fp - fm) / (2.0 * h);
            worst = std::max(worst, rel_err(analytic[i], fd));
        }
    }
    return worst;
}

// Directional derivative probe for large parameter sets: compares u.g against
// (f(theta+h*u)-f(theta-h*u))/2h for a random unit direction u.
template <typename F>
double fd_directional(F&& f, std::vector<dehaze::Tensor> params,
                      dehaze::RngStream& dir_rng, double h = 1e-5) {
    dehaze::Tensor loss = f();
    for (auto& t : params) t.zero_grad();
    dehaze::backward(loss);

    std::vector<std::vector<double>> dirs;
    double norm2 = 0.0;
    for (auto& t : params) {
        std::vector<double> u(t.size());
        for (auto& x : u) {
            x = dir_rng.normal();
            norm2 += x * x;
        }
        dirs.push_back(std::move(u));
    }
    const double inv_norm = 1.0 / std::sqrt(norm2);

    double analytic = 0.0;
    for (size_t k = 0; k < params.size(); ++k) {
        const auto g = params[k].grad_or_zeros();
        for (size_t i = 0; i < g.size(); ++i)
            analytic += g[i] * dirs[k][i] * inv_norm;
    }

    auto shift = [&](double s) {
        for (size_t k = 0; k < params.size(); ++k) {
            double* d = params[k].data_mut();
            for (size_t i = 0; i < params[k].size(); ++i)
                d[i] += s * dirs[k][i] * inv_norm;
        }
    };

    shift(h);
    double fp;
    {
        dehaze::NoGradGuard ng;
        fp = f().item();
    }
    shift(-2.0 * h);
    double fm;
    {
        dehaze::NoGradGuard ng;
        fm = f().item();
    }
    shift(h);

    const double fd = (fp - fm) / (2.0 * h);
    return rel_err(analytic, fd);
}

}  // namespace testutil
