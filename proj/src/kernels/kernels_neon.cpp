#include <arm_neon.h>
#include <bit>

#include "kernels_impl.hpp"

// NEON variants (aarch64 baseline). Driver pads the stride to a multiple of
// 4, so the 2-lane loops below never leave a tail.

namespace nishilab::kernels::detail {

void gray_sign_block_neon(const double* w, std::uint64_t t_begin, std::uint64_t t_end,
                          const double* flip, std::size_t stride, double* signs, double* acc) {
    for (std::uint64_t t = t_begin; t < t_end; ++t) {
        const double* row = flip + static_cast<std::size_t>(std::countr_zero(t)) * stride;
        float64x2_t wt = vdupq_n_f64(w[t]);
        for (std::size_t k = 0; k < stride; k += 2) {
            float64x2_t s = vld1q_f64(signs + k);
            s = vmulq_f64(s, vld1q_f64(row + k));  // exact: row is +-1
            vst1q_f64(signs + k, s);
            float64x2_t a = vld1q_f64(acc + k);
            a = vfmaq_f64(a, wt, s);  // product exact, so fma == mul+add
            vst1q_f64(acc + k, a);
        }
    }
}

double parity_signed_sum_neon(const double* values, const std::uint64_t* masks, std::size_t n,
                              std::uint64_t spin_bits) {
    float64x2_t acc = vdupq_n_f64(0.0);
    uint64x2_t bits = vdupq_n_u64(spin_bits);
    std::size_t c = 0;
    for (; c + 2 <= n; c += 2) {
        uint64x2_t x = vandq_u64(vld1q_u64(masks + c), bits);
        x = veorq_u64(x, vshrq_n_u64(x, 32));
        x = veorq_u64(x, vshrq_n_u64(x, 16));
        x = veorq_u64(x, vshrq_n_u64(x, 8));
        x = veorq_u64(x, vshrq_n_u64(x, 4));
        x = veorq_u64(x, vshrq_n_u64(x, 2));
        x = veorq_u64(x, vshrq_n_u64(x, 1));
        uint64x2_t signbit = vshlq_n_u64(vandq_u64(x, vdupq_n_u64(1)), 63);
        float64x2_t v = vld1q_f64(values + c);
        v = vreinterpretq_f64_u64(veorq_u64(vreinterpretq_u64_f64(v), signbit));
        acc = vaddq_f64(acc, v);
    }
    double sum = vgetq_lane_f64(acc, 0) + vgetq_lane_f64(acc, 1);
    for (; c < n; ++c) {
        std::uint64_t hit = masks[c] & spin_bits;
        sum += (std::popcount(hit) & 1) ? -values[c] : values[c];
    }
    return sum;
}

}  // namespace nishilab::kernels::detail
