#include <bit>
#include <immintrin.h>

#include "kernels_impl.hpp"

// AVX2 + FMA variants, compiled with -mavx2 -mfma. The stride is padded to a
// multiple of 4 by the driver, so vector tails never occur.

namespace nishilab::kernels::detail {

void gray_sign_block_avx2(const double* w, std::uint64_t t_begin, std::uint64_t t_end,
                          const double* flip, std::size_t stride, double* signs, double* acc) {
    for (std::uint64_t t = t_begin; t < t_end; ++t) {
        const double* row = flip + static_cast<std::size_t>(std::countr_zero(t)) * stride;
        __m256d wt = _mm256_set1_pd(w[t]);
        for (std::size_t k = 0; k < stride; k += 4) {
            __m256d s = _mm256_loadu_pd(signs + k);
            s = _mm256_mul_pd(s, _mm256_loadu_pd(row + k));  // exact: row is +-1
            _mm256_storeu_pd(signs + k, s);
            __m256d a = _mm256_loadu_pd(acc + k);
            a = _mm256_fmadd_pd(wt, s, a);  // product exact, so fma == mul+add
            _mm256_storeu_pd(acc + k, a);
        }
    }
}

namespace {

// Parity of each 64-bit lane, folded down to bit 0.
inline __m256i lane_parity(__m256i x) {
    x = _mm256_xor_si256(x, _mm256_srli_epi64(x, 32));
    x = _mm256_xor_si256(x, _mm256_srli_epi64(x, 16));
    x = _mm256_xor_si256(x, _mm256_srli_epi64(x, 8));
    x = _mm256_xor_si256(x, _mm256_srli_epi64(x, 4));
    x = _mm256_xor_si256(x, _mm256_srli_epi64(x, 2));
    x = _mm256_xor_si256(x, _mm256_srli_epi64(x, 1));
    return _mm256_and_si256(x, _mm256_set1_epi64x(1));
}

}  // namespace

double parity_signed_sum_avx2(const double* values, const std::uint64_t* masks, std::size_t n,
                              std::uint64_t spin_bits) {
    __m256d acc = _mm256_setzero_pd();
    const __m256i bits = _mm256_set1_epi64x(static_cast<long long>(spin_bits));
    std::size_t c = 0;
    for (; c + 4 <= n; c += 4) {
        __m256i m = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(masks + c));
        __m256i par = lane_parity(_mm256_and_si256(m, bits));
        // odd parity -> flip the sign bit of the double
        __m256i signbit = _mm256_slli_epi64(par, 63);
        __m256d v = _mm256_loadu_pd(values + c);
        v = _mm256_xor_pd(v, _mm256_castsi256_pd(signbit));
        acc = _mm256_add_pd(acc, v);
    }
    alignas(32) double lanes[4];
    _mm256_storeu_pd(lanes, acc);
    double sum = lanes[0] + lanes[1] + lanes[2] + lanes[3];
    for (; c < n; ++c) {
        std::uint64_t hit = masks[c] & spin_bits;
        sum += (std::popcount(hit) & 1) ? -values[c] : values[c];
    }
    return sum;
}

}  // namespace nishilab::kernels::detail
