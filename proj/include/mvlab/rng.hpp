#pragma once

#include <array>
#include <cstdint>

namespace mvlab {

// Counter-based random numbers (Philox 4x32-10). A draw is a pure function of
// (seed, stream, counter), so per-particle noise streams can be evaluated in any
// order, replayed, or shared between two coupled ensembles without storing state.
namespace philox {

std::array<std::uint32_t, 4> block(std::uint64_t key, std::uint64_t ctr_hi, std::uint64_t ctr_lo);

}  // namespace philox

// splitmix64 style mixer, used to derive independent child seeds from a root seed.
std::uint64_t mix_seed(std::uint64_t root, std::uint64_t salt);

// Uniform double in (0,1), exclusive on both ends.
double uniform01(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter);

// Standard Gaussians indexed by (stream, index). Consecutive indices come in
// Box-Muller pairs from a single Philox block, so index k touches block k/2.
class GaussianField {
  public:
    explicit GaussianField(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t seed() const { return seed_; }

    double operator()(std::uint64_t stream, std::uint64_t index) const;

    // Both values of the Box-Muller pair for block b of the stream.
    std::array<double, 2> pair(std::uint64_t stream, std::uint64_t block) const;

  private:
    std::uint64_t seed_;
};

// Small sequential generator for test fixtures and initial-condition jitter.
class SequentialRng {
  public:
    explicit SequentialRng(std::uint64_t seed) : field_(seed) {}

    double uniform();                       // (0,1)
    double uniform(double lo, double hi);   // (lo,hi)
    double gaussian();
    std::uint64_t integer(std::uint64_t n); // [0,n)

  private:
    GaussianField field_;
    std::uint64_t counter_ = 0;
};

}  // namespace mvlab
