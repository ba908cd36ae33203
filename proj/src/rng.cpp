#include "mvlab/rng.hpp"

#include <cmath>

namespace mvlab {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void philox_round(std::array<std::uint32_t, 4>& ctr, std::uint32_t k0, std::uint32_t k1) {
    std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * ctr[0];
    std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * ctr[2];
    std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ k0, lo1, hi0 ^ ctr[3] ^ k1, lo0};
}

inline double to_unit(std::uint32_t hi, std::uint32_t lo) {
    // 53 random bits, offset by half an ulp so the value is strictly inside (0,1).
    std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 21) | (lo >> 11);
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

constexpr double kTwoPi = 6.283185307179586476925286766559;

}  // namespace

namespace philox {

std::array<std::uint32_t, 4> block(std::uint64_t key, std::uint64_t ctr_hi, std::uint64_t ctr_lo) {
    std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(ctr_lo), static_cast<std::uint32_t>(ctr_lo >> 32),
        static_cast<std::uint32_t>(ctr_hi), static_cast<std::uint32_t>(ctr_hi >> 32)};
    std::uint32_t k0 = static_cast<std::uint32_t>(key);
    std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
    for (int round = 0; round < 10; ++round) {
        philox_round(ctr, k0, k1);
        k0 += kWeyl0;
        k1 += kWeyl1;
    }
    return ctr;
}

}  // namespace philox

std::uint64_t mix_seed(std::uint64_t root, std::uint64_t salt) {
    std::uint64_t z = root + 0x9E3779B97F4A7C15ull * (salt + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

double uniform01(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
    auto w = philox::block(seed, stream, counter);
    return to_unit(w[0], w[1]);
}

std::array<double, 2> GaussianField::pair(std::uint64_t stream, std::uint64_t block) const {
    auto w = philox::block(seed_, stream, block);
    double u1 = to_unit(w[0], w[1]);
    double u2 = to_unit(w[2], w[3]);
    double radius = std::sqrt(-2.0 * std::log(u1));
    return {radius * std::cos(kTwoPi * u2), radius * std::sin(kTwoPi * u2)};
}

double GaussianField::operator()(std::uint64_t stream, std::uint64_t index) const {
    return pair(stream, index >> 1)[index & 1];
}

double SequentialRng::uniform() { return uniform01(field_.seed(), 0, counter_++); }

double SequentialRng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double SequentialRng::gaussian() { return field_(1, counter_++); }

std::uint64_t SequentialRng::integer(std::uint64_t n) {
    return n == 0 ? 0 : static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
}

}  // namespace mvlab
