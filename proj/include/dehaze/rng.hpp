#pragma once

#include <cstdint>
#include <string_view>

namespace dehaze {

// Counter-based random stream built on Philox4x32-10. A stream is addressed
// by (seed, label, counter); draws walk the 64-bit index inside that block,
// so distinct triples can never produce overlapping sequences and the same
// triple always replays the same values. This is what makes training runs
// resumable and batch prefetch order-independent.
class RngStream {
  public:
    RngStream(uint64_t seed, std::string_view label, uint64_t counter = 0);

    uint64_t next_u64();
    double uniform();                      // [0,1)
    double uniform(double lo, double hi);  // [lo,hi)
    uint64_t uniform_int(uint64_t n);      // [0,n)
    double normal();                       // standard normal (Box-Muller)
    bool bernoulli(double p = 0.5);

    uint64_t seed() const { return seed_; }
    uint64_t counter() const { return counter_; }

    // Derived stream: same seed, sub-label mixed into the key.
    RngStream fork(std::string_view sublabel, uint64_t counter = 0) const;

  private:
    RngStream(uint64_t key_hi, uint64_t key_lo, uint64_t counter, bool);

    void refill();

    uint64_t seed_ = 0;
    uint64_t label_hash_ = 0;
    uint64_t counter_ = 0;
    uint64_t index_ = 0;  // draw index inside the block
    uint32_t block_[4];
    int avail_ = 0;
    bool have_spare_normal_ = false;
    double spare_normal_ = 0.0;
};

uint64_t hash_label(std::string_view s);

}  // namespace dehaze
