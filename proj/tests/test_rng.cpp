#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "dehaze/rng.hpp"

using dehaze::RngStream;

TEST_CASE("same (seed,label,counter) replays an identical sequence") {
    RngStream a(42, "batch", 7);
    RngStream b(42, "batch", 7);
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("distinct triples give disjoint draw sequences") {
    std::set<uint64_t> seen;
    size_t total = 0;
    for (uint64_t seed : {1ull, 2ull}) {
        for (const char* label : {"init", "batch", "aug"}) {
            for (uint64_t ctr : {0ull, 1ull, 99ull}) {
                RngStream s(seed, label, ctr);
                for (int i = 0; i < 200; ++i) {
                    seen.insert(s.next_u64());
                    ++total;
                }
            }
        }
    }
    CHECK(seen.size() == total);
}

TEST_CASE("uniform stays in [0,1) and fills the range") {
    RngStream s(3, "u");
    double lo = 1.0, hi = 0.0;
    for (int i = 0; i < 20000; ++i) {
        const double x = s.uniform();
        CHECK(x >= 0.0);
        CHECK(x < 1.0);
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    CHECK(lo < 0.01);
    CHECK(hi > 0.99);
}

TEST_CASE("uniform_int covers [0,n)") {
    RngStream s(9, "ints");
    std::vector<int> counts(7, 0);
    for (int i = 0; i < 7000; ++i) {
        const uint64_t v = s.uniform_int(7);
        REQUIRE(v < 7);
        ++counts[v];
    }
    for (int c : counts) CHECK(c > 700);
    CHECK(s.uniform_int(1) == 0);
}

TEST_CASE("normal has roughly unit scale") {
    RngStream s(5, "n");
    double mean = 0.0, var = 0.0;
    const int n = 40000;
    std::vector<double> xs(n);
    for (auto& x : xs) {
        x = s.normal();
        mean += x;
    }
    mean /= n;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= n;
    CHECK(std::fabs(mean) < 0.02);
    CHECK(std::fabs(var - 1.0) < 0.05);
}

TEST_CASE("fork derives order-sensitive substreams") {
    RngStream base(11, "root");
    RngStream ab = base.fork("a").fork("b");
    RngStream ba = base.fork("b").fork("a");
    bool all_equal = true;
    for (int i = 0; i < 16; ++i)
        if (ab.next_u64() != ba.next_u64()) all_equal = false;
    CHECK_FALSE(all_equal);

    RngStream f1 = base.fork("a").fork("b");
    RngStream f2 = base.fork("a").fork("b");
    for (int i = 0; i < 16; ++i) CHECK(f1.next_u64() == f2.next_u64());
}

TEST_CASE("counter advances independently of draw index") {
    RngStream s0(1, "x", 0), s1(1, "x", 1);
    bool differ = false;
    for (int i = 0; i < 8; ++i)
        if (s0.next_u64() != s1.next_u64()) differ = true;
    CHECK(differ);
}
