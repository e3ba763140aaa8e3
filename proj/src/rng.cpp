#include "nishilab/rng.hpp"

#include <cmath>

namespace nishilab {

namespace philox {

namespace {

constexpr std::uint32_t kWeylA = 0x9E3779B9u;  // golden ratio
constexpr std::uint32_t kWeylB = 0xBB67AE85u;  // sqrt(3) - 1
constexpr std::uint32_t kMulA = 0xD2511F53u;
constexpr std::uint32_t kMulB = 0xCD9E8D57u;

inline void mul_hi_lo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

inline void round_once(std::array<std::uint32_t, 4>& c, const std::array<std::uint32_t, 2>& k) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mul_hi_lo(kMulA, c[0], hi0, lo0);
    mul_hi_lo(kMulB, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

}  // namespace

std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> counter,
                                   std::array<std::uint32_t, 2> key) {
    for (int r = 0; r < 10; ++r) {
        round_once(counter, key);
        key[0] += kWeylA;
        key[1] += kWeylB;
    }
    return counter;
}

double to_unit(std::uint32_t hi, std::uint32_t lo) {
    std::uint64_t v = (static_cast<std::uint64_t>(hi) << 32) | lo;
    return static_cast<double>(v >> 11) * 0x1.0p-53;
}

double to_unit_open(std::uint32_t hi, std::uint32_t lo) {
    std::uint64_t v = (static_cast<std::uint64_t>(hi) << 32) | lo;
    return static_cast<double>((v >> 11) + 1) * 0x1.0p-53;
}

}  // namespace philox

double keyed_standard_normal(std::uint64_t seed, std::uint64_t realization,
                             std::uint32_t species_p, std::uint32_t range_index) {
    std::array<std::uint32_t, 4> counter = {
        range_index,
        species_p,
        static_cast<std::uint32_t>(realization),
        static_cast<std::uint32_t>(realization >> 32),
    };
    std::array<std::uint32_t, 2> key = {
        static_cast<std::uint32_t>(seed),
        static_cast<std::uint32_t>(seed >> 32),
    };
    auto words = philox::block(counter, key);
    double u1 = philox::to_unit_open(words[0], words[1]);
    double u2 = philox::to_unit(words[2], words[3]);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

void CounterRng::refill() {
    std::uint64_t block_index = position_ / 4;
    std::array<std::uint32_t, 4> counter = {
        static_cast<std::uint32_t>(block_index),
        static_cast<std::uint32_t>(block_index >> 32),
        static_cast<std::uint32_t>(stream_),
        static_cast<std::uint32_t>(stream_ >> 32),
    };
    std::array<std::uint32_t, 2> key = {
        static_cast<std::uint32_t>(seed_),
        static_cast<std::uint32_t>(seed_ >> 32),
    };
    buffer_ = philox::block(counter, key);
    buffered_ = 4 - static_cast<unsigned>(position_ % 4);
}

std::uint32_t CounterRng::next_u32() {
    if (buffered_ == 0) refill();
    std::uint32_t w = buffer_[4 - buffered_];
    --buffered_;
    ++position_;
    return w;
}

double CounterRng::next_uniform() {
    std::uint32_t hi = next_u32();
    std::uint32_t lo = next_u32();
    return philox::to_unit(hi, lo);
}

double CounterRng::next_uniform_open() {
    std::uint32_t hi = next_u32();
    std::uint32_t lo = next_u32();
    return philox::to_unit_open(hi, lo);
}

double CounterRng::next_normal() {
    double u1 = next_uniform_open();
    double u2 = next_uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::uint32_t CounterRng::next_index(std::uint32_t n) {
    return static_cast<std::uint32_t>(static_cast<std::uint64_t>(next_u32()) * n >> 32);
}

void CounterRng::seek(std::uint64_t position) {
    position_ = position;
    buffered_ = 0;
}

}  // namespace nishilab
