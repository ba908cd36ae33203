#include <doctest.h>

#include <array>
#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "mvlab/rng.hpp"

using namespace mvlab;

TEST_SUITE("rng") {

TEST_CASE("philox matches the published 4x32-10 reference vectors") {
    // Zero key, zero counter.
    auto z = philox::block(0, 0, 0);
    CHECK(z[0] == 0x6627e8d5u);
    CHECK(z[1] == 0xe169c58du);
    CHECK(z[2] == 0xbc57ac4cu);
    CHECK(z[3] == 0x9b00dbd8u);

    // All ones.
    auto o = philox::block(~0ull, ~0ull, ~0ull);
    CHECK(o[0] == 0x408f276du);
    CHECK(o[1] == 0x41c83b0eu);
    CHECK(o[2] == 0xa20bc7c6u);
    CHECK(o[3] == 0x6d5451fdu);

    // Digits-of-pi counter and key, packed little end first.
    std::uint64_t lo = (0x85a308d3ull << 32) | 0x243f6a88ull;
    std::uint64_t hi = (0x03707344ull << 32) | 0x13198a2eull;
    std::uint64_t k = (0x299f31d0ull << 32) | 0xa4093822ull;
    auto p = philox::block(k, hi, lo);
    CHECK(p[0] == 0xd16cfe09u);
    CHECK(p[1] == 0x94fdccebu);
    CHECK(p[2] == 0x5001e420u);
    CHECK(p[3] == 0x24126ea1u);
}

TEST_CASE("draws are pure functions of (seed, stream, counter)") {
    double a = uniform01(42, 7, 1000);
    double b = uniform01(42, 7, 1000);
    CHECK(a == b);
    CHECK(uniform01(43, 7, 1000) != a);
    CHECK(uniform01(42, 8, 1000) != a);
    CHECK(uniform01(42, 7, 1001) != a);
}

TEST_CASE("uniform01 stays strictly inside the open interval") {
    for (std::uint64_t c = 0; c < 20000; ++c) {
        double u = uniform01(123, 0, c);
        CHECK(u > 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("uniform01 empirical cdf tracks the identity") {
    // Deterministic seed, so the bound either always holds or never does.
    const int n = 20000;
    std::vector<double> u(n);
    for (int i = 0; i < n; ++i) u[i] = uniform01(2024, 3, static_cast<std::uint64_t>(i));
    std::sort(u.begin(), u.end());
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
        double ecdf = (i + 1.0) / n;
        worst = std::max(worst, std::abs(ecdf - u[i]));
    }
    CHECK(worst < 0.015);
}

TEST_CASE("mix_seed separates salts and roots") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t root : {0ull, 1ull, 42ull, ~0ull})
        for (std::uint64_t salt : {0ull, 1ull, 0xA11Cull, 0xD1CEull, 0x51C2ull})
            seen.insert(mix_seed(root, salt));
    CHECK(seen.size() == 20);
    CHECK(mix_seed(7, 11) == mix_seed(7, 11));
}

TEST_CASE("gaussian field has the right first four moments") {
    GaussianField g(99);
    const int n = 200000;
    double m1 = 0, m2 = 0, m3 = 0, m4 = 0;
    for (int i = 0; i < n; ++i) {
        double x = g(0, static_cast<std::uint64_t>(i));
        m1 += x;
        m2 += x * x;
        m3 += x * x * x;
        m4 += x * x * x * x;
    }
    m1 /= n; m2 /= n; m3 /= n; m4 /= n;
    CHECK(std::abs(m1) < 0.01);
    CHECK(m2 == doctest::Approx(1.0).epsilon(0.02));
    CHECK(std::abs(m3) < 0.05);
    CHECK(m4 == doctest::Approx(3.0).epsilon(0.05));
}

TEST_CASE("indexed access agrees with the box-muller pair") {
    GaussianField g(7);
    for (std::uint64_t b = 0; b < 50; ++b) {
        auto p = g.pair(4, b);
        CHECK(g(4, 2 * b) == p[0]);
        CHECK(g(4, 2 * b + 1) == p[1]);
    }
}

TEST_CASE("streams decorrelate") {
    GaussianField g(321);
    const int n = 50000;
    double dot = 0;
    for (int i = 0; i < n; ++i)
        dot += g(0, static_cast<std::uint64_t>(i)) * g(1, static_cast<std::uint64_t>(i));
    CHECK(std::abs(dot / n) < 0.02);
}

TEST_CASE("sequential generator is reproducible and respects ranges") {
    SequentialRng a(5), b(5);
    for (int i = 0; i < 100; ++i) CHECK(a.gaussian() == b.gaussian());

    SequentialRng r(17);
    for (int i = 0; i < 1000; ++i) {
        double u = r.uniform(-2.0, 3.0);
        CHECK(u > -2.0);
        CHECK(u < 3.0);
    }
    for (int i = 0; i < 1000; ++i) {
        std::uint64_t k = r.integer(7);
        CHECK(k < 7);
    }
    CHECK(r.integer(0) == 0);
}

}
