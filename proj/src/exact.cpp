#include "nishilab/exact.hpp"

#include <cmath>
#include <unordered_map>

#include "nishilab/kernels.hpp"
#include "nishilab/stats.hpp"

namespace nishilab {

namespace {

constexpr std::uint64_t kEnergyResyncInterval = 1u << 16;

}  // namespace

ExactGibbs::ExactGibbs(const DisorderRealization& disorder,
                       const std::vector<CouplingFamily>& families, double beta,
                       std::uint32_t n_sites, std::uint32_t n_max)
    : beta_(beta), n_sites_(n_sites) {
    if (beta < 0.0) throw std::invalid_argument("ExactGibbs: beta must be >= 0");
    if (n_sites == 0) throw std::invalid_argument("ExactGibbs: empty lattice");
    if (n_sites > n_max)
        throw capacity_error("ExactGibbs: " + std::to_string(n_sites) + " sites exceeds n_max=" +
                             std::to_string(n_max) + "; use the MCMC sampler instead");

    CouplingTable table = CouplingTable::build(disorder, families, n_sites);
    const std::uint64_t n_conf = std::uint64_t{1} << n_sites;
    weights_.resize(n_conf);

    // Pass 1: Gray-code walk. Flipping one site negates the parity sign of
    // every coupling range containing it, so the energy updates in O(deg).
    // Signs are integer flips and cannot drift; the running energy is
    // resynced from scratch periodically to shed roundoff.
    std::vector<std::int8_t> sign(table.values.size(), 1);
    KahanSum h0;
    for (double j : table.values) h0.add(-j);
    double h = h0.value();  // all spins up
    double e_min = h;
    weights_[0] = h;
    for (std::uint64_t t = 1; t < n_conf; ++t) {
        unsigned j = static_cast<unsigned>(std::countr_zero(t));
        for (std::uint32_t i = table.site_offsets[j]; i < table.site_offsets[j + 1]; ++i) {
            std::uint32_t c = table.site_couplings[i];
            h += 2.0 * table.values[c] * sign[c];
            sign[c] = static_cast<std::int8_t>(-sign[c]);
        }
        if ((t & (kEnergyResyncInterval - 1)) == 0) {
            std::uint64_t conf = t ^ (t >> 1);
            h = -kernels::parity_signed_sum(table.values, table.masks, conf);
        }
        weights_[t] = h;
        if (h < e_min) e_min = h;
    }

    // Pass 2: weights anchored at the ground state; log Z and <H> fall out.
    KahanSum z, eh;
    for (std::uint64_t t = 0; t < n_conf; ++t) {
        double e = weights_[t];
        double w = std::exp(-beta * (e - e_min));
        weights_[t] = w;
        z.add(w);
        eh.add(e * w);
    }
    weight_sum_ = z.value();
    log_z_ = -beta * e_min + std::log(weight_sum_);
    mean_energy_ = eh.value() / weight_sum_;
}

double ExactGibbs::correlation(std::uint64_t mask) const {
    if (mask == 0) return 1.0;
    double sum = 0.0;
    kernels::gray_sign_sums(weights_, std::span<const std::uint64_t>(&mask, 1),
                            std::span<double>(&sum, 1));
    return sum / weight_sum_;
}

std::vector<double> ExactGibbs::correlations(std::span<const std::uint64_t> masks) const {
    std::vector<double> out(masks.size());
    kernels::gray_sign_sums(weights_, masks, out);
    for (std::size_t k = 0; k < masks.size(); ++k)
        out[k] = masks[k] == 0 ? 1.0 : out[k] / weight_sum_;
    return out;
}

double ExactGibbs::truncated_k1(std::uint64_t mask_x, std::uint64_t mask_y) const {
    std::uint64_t masks[3] = {mask_x ^ mask_y, mask_x, mask_y};
    auto v = correlations(masks);
    return v[0] - v[1] * v[2];
}

double ExactGibbs::probability_sum() const {
    KahanSum s;
    for (double w : weights_) s.add(w / weight_sum_);
    return s.value();
}

namespace {

// Distinct symmetric differences X xor Y over all ordered pairs, with
// multiplicities. The pair sums below only depend on these.
std::unordered_map<std::uint64_t, double> pair_xor_multiplicities(
    const std::vector<std::uint64_t>& masks) {
    std::unordered_map<std::uint64_t, double> mult;
    mult.reserve(masks.size() * 4);
    for (std::size_t i = 0; i < masks.size(); ++i) {
        mult[0] += 1.0;  // the X = Y diagonal
        for (std::size_t j = i + 1; j < masks.size(); ++j)
            mult[masks[i] ^ masks[j]] += 2.0;
    }
    return mult;
}

}  // namespace

ExactGibbs::MagnetizationMoments ExactGibbs::magnetization_moments(
    const CouplingFamily& family, PairStrategy strategy) const {
    auto masks = family.masks();
    if (masks.empty()) throw std::invalid_argument("magnetization_moments: empty family");
    const double nb = static_cast<double>(masks.size());
    if (strategy == PairStrategy::automatic)
        strategy = masks.size() <= kPairTableLimit ? PairStrategy::grouped
                                                   : PairStrategy::streaming;

    if (strategy == PairStrategy::streaming) {
        // Walk the Gray sequence once, carrying sum_X s_X incrementally, and
        // average m and m^2 against the cached weights.
        std::vector<std::int8_t> sign(masks.size(), 1);
        std::vector<std::vector<std::uint32_t>> touching(n_sites_);
        for (std::size_t k = 0; k < masks.size(); ++k)
            for (std::uint32_t j = 0; j < n_sites_; ++j)
                if (masks[k] >> j & 1) touching[j].push_back(static_cast<std::uint32_t>(k));
        double sum_signs = nb;
        KahanSum m1, m2;
        m1.add(weights_[0] * sum_signs);
        m2.add(weights_[0] * sum_signs * sum_signs);
        for (std::uint64_t t = 1; t < weights_.size(); ++t) {
            unsigned j = static_cast<unsigned>(std::countr_zero(t));
            for (std::uint32_t k : touching[j]) {
                sum_signs -= 2.0 * sign[k];
                sign[k] = static_cast<std::int8_t>(-sign[k]);
            }
            m1.add(weights_[t] * sum_signs);
            m2.add(weights_[t] * sum_signs * sum_signs);
        }
        MagnetizationMoments out;
        out.m1 = m1.value() / weight_sum_ / nb;
        out.m2 = m2.value() / weight_sum_ / (nb * nb);
        return out;
    }

    auto one_point = correlations(masks);
    KahanSum m1;
    for (double v : one_point) m1.add(v);

    auto mult = pair_xor_multiplicities(masks);
    std::vector<std::uint64_t> distinct;
    distinct.reserve(mult.size());
    for (const auto& entry : mult) distinct.push_back(entry.first);
    std::sort(distinct.begin(), distinct.end());  // deterministic accumulation order
    auto pair_vals = correlations(distinct);
    KahanSum m2;
    for (std::size_t i = 0; i < distinct.size(); ++i)
        m2.add(mult.at(distinct[i]) * pair_vals[i]);

    MagnetizationMoments out;
    out.m1 = m1.value() / nb;
    out.m2 = m2.value() / (nb * nb);
    return out;
}

ExactGibbs::OverlapMoments ExactGibbs::overlap_moments(const CouplingFamily& family) const {
    auto masks = family.masks();
    if (masks.empty()) throw std::invalid_argument("overlap_moments: empty family");
    if (masks.size() > kPairTableLimit)
        throw capacity_error("overlap_moments: family too large for pair tables (" +
                             std::to_string(masks.size()) + " ranges); use the MCMC sampler");
    const double nb = static_cast<double>(masks.size());

    auto one_point = correlations(masks);

    auto mult = pair_xor_multiplicities(masks);
    std::vector<std::uint64_t> distinct;
    distinct.reserve(mult.size());
    for (const auto& [mask, count] : mult) distinct.push_back(mask);
    std::sort(distinct.begin(), distinct.end());
    auto pair_vals = correlations(distinct);
    std::unordered_map<std::uint64_t, double> pair_value;
    pair_value.reserve(distinct.size());
    for (std::size_t i = 0; i < distinct.size(); ++i) pair_value[distinct[i]] = pair_vals[i];

    // Independent replicas under one disorder realization factorize:
    //   <R12>      = sum_X <sX>^2 / |B|
    //   <R12^2>    = sum_{X,Y} <s_{X xor Y}>^2 / |B|^2
    //   <R12 R13>  = sum_{X,Y} <s_{X xor Y}> <sX> <sY> / |B|^2
    KahanSum r;
    for (double v : one_point) r.add(v * v);
    KahanSum r2;
    for (std::size_t i = 0; i < distinct.size(); ++i)
        r2.add(mult.at(distinct[i]) * pair_vals[i] * pair_vals[i]);
    KahanSum r12r13;
    for (std::size_t i = 0; i < masks.size(); ++i) {
        r12r13.add(one_point[i] * one_point[i]);  // diagonal: <s_0> = 1
        for (std::size_t j = i + 1; j < masks.size(); ++j)
            r12r13.add(2.0 * pair_value.at(masks[i] ^ masks[j]) * one_point[i] * one_point[j]);
    }

    OverlapMoments out;
    out.r = r.value() / nb;
    out.r2 = r2.value() / (nb * nb);
    out.r12r13 = r12r13.value() / (nb * nb);
    return out;
}

}  // namespace nishilab
