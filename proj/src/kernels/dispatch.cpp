#include "nishilab/kernels.hpp"

#include <bit>
#include <cstdlib>
#include <stdexcept>
#include <vector>

#include "kernels_impl.hpp"
#include "nishilab/stats.hpp"

namespace nishilab::kernels {

bool available(Impl impl) {
    switch (impl) {
        case Impl::scalar:
            return true;
        case Impl::avx2:
#if defined(NISHILAB_HAVE_AVX2)
            return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
            return false;
#endif
        case Impl::neon:
#if defined(NISHILAB_HAVE_NEON)
            return true;
#else
            return false;
#endif
    }
    return false;
}

std::string impl_name(Impl impl) {
    switch (impl) {
        case Impl::scalar: return "scalar";
        case Impl::avx2: return "avx2";
        case Impl::neon: return "neon";
    }
    return "scalar";
}

namespace {

Impl select_impl() {
    if (const char* env = std::getenv("NISHILAB_SIMD")) {
        std::string want(env);
        for (Impl i : {Impl::scalar, Impl::avx2, Impl::neon})
            if (want == impl_name(i)) return available(i) ? i : Impl::scalar;
    }
    if (available(Impl::avx2)) return Impl::avx2;
    if (available(Impl::neon)) return Impl::neon;
    return Impl::scalar;
}

using GrayBlockFn = void (*)(const double*, std::uint64_t, std::uint64_t, const double*,
                             std::size_t, double*, double*);
using ParityFn = double (*)(const double*, const std::uint64_t*, std::size_t, std::uint64_t);

GrayBlockFn gray_block_fn(Impl impl) {
    switch (impl) {
#if defined(NISHILAB_HAVE_AVX2)
        case Impl::avx2: return detail::gray_sign_block_avx2;
#endif
#if defined(NISHILAB_HAVE_NEON)
        case Impl::neon: return detail::gray_sign_block_neon;
#endif
        default: return detail::gray_sign_block_scalar;
    }
}

ParityFn parity_fn(Impl impl) {
    switch (impl) {
#if defined(NISHILAB_HAVE_AVX2)
        case Impl::avx2: return detail::parity_signed_sum_avx2;
#endif
#if defined(NISHILAB_HAVE_NEON)
        case Impl::neon: return detail::parity_signed_sum_neon;
#endif
        default: return detail::parity_signed_sum_scalar;
    }
}

constexpr std::uint64_t kBlockSteps = 1u << 14;

}  // namespace

Impl active() {
    static const Impl impl = select_impl();
    return impl;
}

void gray_sign_sums(std::span<const double> w, std::span<const std::uint64_t> masks,
                    std::span<double> out, Impl impl) {
    const std::uint64_t n = w.size();
    if (n == 0 || (n & (n - 1)) != 0)
        throw std::invalid_argument("gray_sign_sums: weight count must be a power of two");
    if (out.size() != masks.size())
        throw std::invalid_argument("gray_sign_sums: output size mismatch");
    const std::size_t m = masks.size();
    if (m == 0) return;
    if (!available(impl)) impl = Impl::scalar;

    const unsigned n_bits = static_cast<unsigned>(std::countr_zero(n));
    const std::size_t stride = (m + 7) & ~std::size_t{7};

    // Per-site flip rows: -1 where the mask contains the site.
    std::vector<double> flip(static_cast<std::size_t>(n_bits ? n_bits : 1) * stride, 1.0);
    for (unsigned j = 0; j < n_bits; ++j)
        for (std::size_t k = 0; k < m; ++k)
            if (masks[k] >> j & 1) flip[j * stride + k] = -1.0;

    std::vector<double> signs(stride, 1.0);
    std::vector<double> block_acc(stride, 0.0);
    std::vector<KahanSum> totals(m);
    for (std::size_t k = 0; k < m; ++k) totals[k].add(w[0]);  // t = 0, all signs +1

    GrayBlockFn block = gray_block_fn(impl);
    for (std::uint64_t t0 = 1; t0 < n; t0 += kBlockSteps) {
        std::uint64_t t1 = t0 + kBlockSteps < n ? t0 + kBlockSteps : n;
        std::fill(block_acc.begin(), block_acc.end(), 0.0);
        block(w.data(), t0, t1, flip.data(), stride, signs.data(), block_acc.data());
        for (std::size_t k = 0; k < m; ++k) totals[k].add(block_acc[k]);
    }
    for (std::size_t k = 0; k < m; ++k) out[k] = totals[k].value();
}

double parity_signed_sum(std::span<const double> values, std::span<const std::uint64_t> masks,
                         std::uint64_t spin_bits, Impl impl) {
    if (values.size() != masks.size())
        throw std::invalid_argument("parity_signed_sum: size mismatch");
    if (!available(impl)) impl = Impl::scalar;
    return parity_fn(impl)(values.data(), masks.data(), values.size(), spin_bits);
}

}  // namespace nishilab::kernels
