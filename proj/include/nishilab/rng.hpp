#pragma once

#include <array>
#include <cstdint>
#include <utility>

namespace nishilab {

// Philox4x32-10 counter-based generator (Salmon et al., SC 2011).
// A block is a pure function of (counter, key), so any draw in any stream
// is reproducible without generating its predecessors.
namespace philox {

std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> counter,
                                   std::array<std::uint32_t, 2> key);

// Uniform double in [0,1) from two 32-bit words (53-bit resolution).
double to_unit(std::uint32_t hi, std::uint32_t lo);
// Uniform double in (0,1]; safe as a log() argument.
double to_unit_open(std::uint32_t hi, std::uint32_t lo);

}  // namespace philox

// One standard normal keyed by (seed, realization, species p, range index).
// Consumes one Philox block; Box-Muller with the cosine branch.
double keyed_standard_normal(std::uint64_t seed, std::uint64_t realization,
                             std::uint32_t species_p, std::uint32_t range_index);

// Sequential counter-mode engine for Markov chains. Distinct stream ids give
// provably disjoint counter spaces under the same seed. The position is the
// number of 32-bit words consumed, which makes checkpoints exact.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream);

    std::uint32_t next_u32();
    double next_uniform();       // [0,1)
    double next_uniform_open();  // (0,1]
    double next_normal();        // consumes exactly 4 words
    // Uniform integer in [0, n); rejection-free modulo is fine here because
    // n is a lattice size, far below 2^32.
    std::uint32_t next_index(std::uint32_t n);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }
    std::uint64_t position() const { return position_; }
    void seek(std::uint64_t position);

private:
    void refill();

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t position_ = 0;  // words consumed so far
    std::array<std::uint32_t, 4> buffer_{};
    unsigned buffered_ = 0;  // valid words remaining in buffer_
};

}  // namespace nishilab
