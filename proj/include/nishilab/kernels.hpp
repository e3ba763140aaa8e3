#pragma once

#include <cstdint>
#include <span>
#include <string>

namespace nishilab::kernels {

// Inner arithmetic loops exist as a scalar reference plus SIMD variants.
// The variant is picked once at runtime (CPU probe, overridable with the
// NISHILAB_SIMD env var); every variant is equivalence-tested against the
// scalar reference.
enum class Impl { scalar, avx2, neon };

Impl active();
bool available(Impl impl);
std::string impl_name(Impl impl);

// Gray-walk sign sums. w has power-of-two length 2^B and w[t] is the weight
// of the t-th configuration of a Gray-code walk (configuration bits
// t ^ (t >> 1), bit i = site i down). For each mask:
//
//   out[k] = sum_t w[t] * s_k(t),   s_k(0) = +1,
//   s_k flips at step t > 0 iff bit countr_zero(t) of masks[k] is set.
//
// Accumulation is blocked with Neumaier compensation across blocks, and the
// per-step order is identical in every variant, so scalar and SIMD results
// agree bit for bit.
void gray_sign_sums(std::span<const double> w, std::span<const std::uint64_t> masks,
                    std::span<double> out, Impl impl = active());

// Parity-signed dot: sum_c values[c] * parity_sign(masks[c] & spin_bits),
// where parity_sign is +1 for even popcount and -1 for odd. SIMD variants
// split the sum across lanes, so equivalence holds to roundoff, not bitwise.
double parity_signed_sum(std::span<const double> values, std::span<const std::uint64_t> masks,
                         std::uint64_t spin_bits, Impl impl = active());

}  // namespace nishilab::kernels
