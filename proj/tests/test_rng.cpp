#include "doctest.h"

#include "ivope/parallel.hpp"
#include "ivope/rng.hpp"

#include <cmath>
#include <set>
#include <vector>

using namespace ivope;

TEST_SUITE("rng") {

// Published Philox4x32-10 known-answer vectors.
TEST_CASE("philox block function matches the reference vectors") {
    CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == std::array<std::uint32_t, 4>{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
          std::array<std::uint32_t, 4>{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
          std::array<std::uint32_t, 4>{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("same key and stream reproduce the same draws") {
    RngStream a(11, 3), b(11, 3);
    for (int i = 0; i < 1000; ++i) REQUIRE(a.next_u64() == b.next_u64());
    RngStream c = derive_rng_stream(5, "data", 7), d = derive_rng_stream(5, "data", 7);
    for (int i = 0; i < 100; ++i) REQUIRE(c.normal() == d.normal());
}

TEST_CASE("tags, indices and substreams separate streams") {
    std::set<std::uint64_t> firsts;
    firsts.insert(derive_rng_stream(5, "data", 0).next_u64());
    firsts.insert(derive_rng_stream(5, "data", 1).next_u64());
    firsts.insert(derive_rng_stream(5, "oracle", 0).next_u64());
    firsts.insert(derive_rng_stream(6, "data", 0).next_u64());
    const RngStream base(1, 2);
    firsts.insert(base.substream(0).next_u64());
    firsts.insert(base.substream(1).next_u64());
    CHECK(firsts.size() == 6);
}

TEST_CASE("substream leaves the parent untouched") {
    RngStream a(9, 9), b(9, 9);
    (void)a.substream(4).uniform();
    CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("uniform and normal moments") {
    RngStream r(2024, 0);
    const int n = 200000;
    double su = 0.0, sn = 0.0, sn2 = 0.0;
    double lo = 1.0, hi = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = r.uniform();
        lo = std::min(lo, u);
        hi = std::max(hi, u);
        su += u;
        const double z = r.normal();
        sn += z;
        sn2 += z * z;
    }
    CHECK(lo > 0.0);
    CHECK(hi < 1.0);
    // 5-sigma bands.
    CHECK(std::abs(su / n - 0.5) < 5.0 * std::sqrt(1.0 / 12.0 / n));
    CHECK(std::abs(sn / n) < 5.0 / std::sqrt(n));
    CHECK(std::abs(sn2 / n - 1.0) < 5.0 * std::sqrt(2.0 / n));
}

TEST_CASE("parallel_for result does not depend on the worker count") {
    auto run = [](int workers) {
        std::vector<double> out(37);
        parallel_for(37, workers, [&](int i) { out[i] = derive_rng_stream(3, "cell", i).uniform(); });
        return out;
    };
    const auto one = run(1);
    CHECK(run(3) == one);
    CHECK(run(64) == one);
}

TEST_CASE("parallel_for rethrows worker exceptions") {
    CHECK_THROWS_AS(parallel_for(10, 2, [](int i) {
                        if (i == 7) throw std::runtime_error("boom");
                    }),
                    std::runtime_error);
}

}
