#include "dehaze/rng.hpp"

#include <cmath>

namespace dehaze {

namespace {

constexpr uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void philox_round(uint32_t ctr[4], const uint32_t key[2]) {
    const uint64_t p0 = static_cast<uint64_t>(kPhiloxM0) * ctr[0];
    const uint64_t p1 = static_cast<uint64_t>(kPhiloxM1) * ctr[2];
    const uint32_t hi0 = static_cast<uint32_t>(p0 >> 32), lo0 = static_cast<uint32_t>(p0);
    const uint32_t hi1 = static_cast<uint32_t>(p1 >> 32), lo1 = static_cast<uint32_t>(p1);
    const uint32_t out0 = hi1 ^ ctr[1] ^ key[0];
    const uint32_t out2 = hi0 ^ ctr[3] ^ key[1];
    ctr[0] = out0;
    ctr[1] = lo1;
    ctr[2] = out2;
    ctr[3] = lo0;
}

// Philox4x32-10
inline void philox(uint64_t key64, uint64_t ctr_hi, uint64_t ctr_lo, uint32_t out[4]) {
    uint32_t key[2] = {static_cast<uint32_t>(key64), static_cast<uint32_t>(key64 >> 32)};
    out[0] = static_cast<uint32_t>(ctr_lo);
    out[1] = static_cast<uint32_t>(ctr_lo >> 32);
    out[2] = static_cast<uint32_t>(ctr_hi);
    out[3] = static_cast<uint32_t>(ctr_hi >> 32);
    for (int r = 0; r < 10; ++r) {
        philox_round(out, key);
        key[0] += kPhiloxW0;
        key[1] += kPhiloxW1;
    }
}

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

}  // namespace

uint64_t hash_label(std::string_view s) {
    // FNV-1a 64
    uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return h;
}

RngStream::RngStream(uint64_t seed, std::string_view label, uint64_t counter)
    : seed_(seed), label_hash_(hash_label(label)), counter_(counter) {}

RngStream RngStream::fork(std::string_view sublabel, uint64_t counter) const {
    RngStream s(seed_, sublabel, counter);
    // mix the parent label in so fork("a").fork("b") != fork("b").fork("a")
    s.label_hash_ = splitmix64(label_hash_ ^ (s.label_hash_ + 0x9E3779B97F4A7C15ull));
    return s;
}

void RngStream::refill() {
    const uint64_t key = splitmix64(seed_ ^ splitmix64(label_hash_));
    philox(key, counter_, index_++, block_);
    avail_ = 4;
}

uint64_t RngStream::next_u64() {
    if (avail_ < 2) refill();
    const uint64_t lo = block_[4 - avail_];
    const uint64_t hi = block_[4 - avail_ + 1];
    avail_ -= 2;
    return lo | (hi << 32);
}

double RngStream::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

uint64_t RngStream::uniform_int(uint64_t n) {
    if (n == 0) return 0;
    // Lemire multiply-shift; bias < n / 2^64, irrelevant at our scales.
    const uint64_t x = next_u64();
    return static_cast<uint64_t>((static_cast<unsigned __int128>(x) * n) >> 64);
}

double RngStream::normal() {
    if (have_spare_normal_) {
        have_spare_normal_ = false;
        return spare_normal_;
    }
    // Box-Muller; u1 strictly positive so log() is safe
    const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_normal_ = r * std::sin(a);
    have_spare_normal_ = true;
    return r * std::cos(a);
}

bool RngStream::bernoulli(double p) { return uniform() < p; }

}  // namespace dehaze
