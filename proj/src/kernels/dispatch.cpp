#include "dehaze/kernels.hpp"

#include <cstdlib>
#include <cstring>
#include <stdexcept>

#include "lanes.hpp"

namespace dehaze::kernels {

namespace {

#define DEHAZE_FILL_TABLE(ns)                                                \
    {                                                                        \
        #ns, ns::gemm_nn, ns::gemm_nt, ns::gemm_tn, ns::add, ns::sub,        \
            ns::mul, ns::div, ns::madd_acc, ns::axpy, ns::affine, ns::fill,  \
            ns::clamp_min, ns::relu, ns::relu_bwd_acc, ns::lrelu,            \
            ns::lrelu_bwd_acc, ns::vexp, ns::sum, ns::dot, ns::vmax,         \
            ns::vmin, ns::all_finite, ns::adam                               \
    }

const Ops scalar_table = DEHAZE_FILL_TABLE(scalar);
#ifdef DEHAZE_HAVE_AVX2_TU
const Ops avx2_table = DEHAZE_FILL_TABLE(avx2);
#endif
#undef DEHAZE_FILL_TABLE

bool cpu_has_avx2() {
#if defined(DEHAZE_HAVE_AVX2_TU) && defined(__GNUC__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Lane detect() {
    if (const char* env = std::getenv("DEHAZE_LANE")) {
        if (std::strcmp(env, "scalar") == 0) return Lane::scalar;
        if (std::strcmp(env, "avx2") == 0 && cpu_has_avx2()) return Lane::avx2;
    }
    return cpu_has_avx2() ? Lane::avx2 : Lane::scalar;
}

Lane g_lane = detect();

}  // namespace

bool lane_available(Lane lane) {
    switch (lane) {
        case Lane::scalar:
            return true;
        case Lane::avx2:
            return cpu_has_avx2();
    }
    return false;
}

const Ops& table(Lane lane) {
#ifdef DEHAZE_HAVE_AVX2_TU
    if (lane == Lane::avx2) return avx2_table;
#endif
    (void)lane;
    return scalar_table;
}

const Ops& ops() { return table(g_lane); }

Lane active_lane() { return g_lane; }

void force_lane(Lane lane) {
    if (!lane_available(lane))
        throw std::runtime_error("kernels: requested lane not available on this CPU");
    g_lane = lane;
}

}  // namespace dehaze::kernels
