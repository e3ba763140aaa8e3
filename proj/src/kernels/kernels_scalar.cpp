#include <bit>

#include "kernels_impl.hpp"

namespace nishilab::kernels::detail {

void gray_sign_block_scalar(const double* w, std::uint64_t t_begin, std::uint64_t t_end,
                            const double* flip, std::size_t stride, double* signs, double* acc) {
    for (std::uint64_t t = t_begin; t < t_end; ++t) {
        const double* row = flip + static_cast<std::size_t>(std::countr_zero(t)) * stride;
        double wt = w[t];
        for (std::size_t k = 0; k < stride; ++k) {
            signs[k] *= row[k];
            acc[k] += wt * signs[k];
        }
    }
}

double parity_signed_sum_scalar(const double* values, const std::uint64_t* masks, std::size_t n,
                                std::uint64_t spin_bits) {
    double sum = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
        std::uint64_t hit = masks[c] & spin_bits;
        sum += (std::popcount(hit) & 1) ? -values[c] : values[c];
    }
    return sum;
}

}  // namespace nishilab::kernels::detail
