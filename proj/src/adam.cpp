#include "dehaze/adam.hpp"

#include <cmath>
#include <stdexcept>

#include "dehaze/kernels.hpp"

namespace dehaze {

void adam_step(std::vector<Tensor>& params, AdamState& state) {
    if (state.m.empty()) {
        state.m.resize(params.size());
        state.v.resize(params.size());
        for (size_t i = 0; i < params.size(); ++i) {
            state.m[i].assign(params[i].size(), 0.0);
            state.v[i].assign(params[i].size(), 0.0);
        }
    }
    if (state.m.size() != params.size())
        throw std::invalid_argument("adam_step: state tracks a different parameter list");

    state.t += 1;
    const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));

    for (size_t i = 0; i < params.size(); ++i) {
        Tensor& p = params[i];
        if (state.m[i].size() != p.size())
            throw std::invalid_argument("adam_step: moment shape mismatch at param " +
                                        std::to_string(i));
        std::vector<double> zero;
        const double* g;
        if (p.has_grad()) {
            g = p.grad();
        } else {
            zero.assign(p.size(), 0.0);
            g = zero.data();
        }
        kernels::ops().adam(p.data_mut(), g, state.m[i].data(), state.v[i].data(),
                            p.size(), state.lr, state.beta1, state.beta2, state.eps,
                            c1, c2);
        p.zero_grad();
    }
}

}  // namespace dehaze
