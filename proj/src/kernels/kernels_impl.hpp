#pragma once

#include <cstddef>
#include <cstdint>

// Internal per-variant entry points. Layout contract shared by all variants:
//  - flip is n_bits rows of stride columns, entries exactly +1.0 / -1.0;
//  - signs/acc hold `stride` doubles (mask count padded up), padding lanes +1;
//  - the step loop covers t in [t_begin, t_end), t_begin >= 1;
//  - per step: j = countr_zero(t); signs *= flip_row(j); acc += w[t] * signs.
// Sign flips are exact, so every variant produces bit-identical acc.

namespace nishilab::kernels::detail {

void gray_sign_block_scalar(const double* w, std::uint64_t t_begin, std::uint64_t t_end,
                            const double* flip, std::size_t stride, double* signs, double* acc);

double parity_signed_sum_scalar(const double* values, const std::uint64_t* masks, std::size_t n,
                                std::uint64_t spin_bits);

#if defined(NISHILAB_HAVE_AVX2)
void gray_sign_block_avx2(const double* w, std::uint64_t t_begin, std::uint64_t t_end,
                          const double* flip, std::size_t stride, double* signs, double* acc);

double parity_signed_sum_avx2(const double* values, const std::uint64_t* masks, std::size_t n,
                              std::uint64_t spin_bits);
#endif

#if defined(NISHILAB_HAVE_NEON)
void gray_sign_block_neon(const double* w, std::uint64_t t_begin, std::uint64_t t_end,
                          const double* flip, std::size_t stride, double* signs, double* acc);

double parity_signed_sum_neon(const double* values, const std::uint64_t* masks, std::size_t n,
                              std::uint64_t spin_bits);
#endif

}  // namespace nishilab::kernels::detail
