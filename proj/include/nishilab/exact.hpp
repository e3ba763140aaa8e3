#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "nishilab/geometry.hpp"
#include "nishilab/model.hpp"

namespace nishilab {

// Raised when a system is too large to enumerate; callers should fall back
// to the MCMC sampler.
class capacity_error : public std::runtime_error {
public:
    explicit capacity_error(const std::string& what) : std::runtime_error(what) {}
};

// Exact Gibbs state of one disorder realization, built by a Gray-code walk
// over all 2^N spin configurations with incremental energy updates. Caches
// the unnormalized Boltzmann weight of every configuration (Gray order), so
// each correlation query is one pass of the sign-sum kernel. Immutable after
// construction; queries are const and thread-safe.
class ExactGibbs {
public:
    static constexpr std::uint32_t default_n_max = 24;

    ExactGibbs(const DisorderRealization& disorder, const std::vector<CouplingFamily>& families,
               double beta, std::uint32_t n_sites, std::uint32_t n_max = default_n_max);

    double beta() const { return beta_; }
    std::uint32_t n_sites() const { return n_sites_; }

    double log_partition() const { return log_z_; }
    double psi() const { return log_z_ / n_sites_; }  // log Z / |Lambda_L|
    double mean_energy() const { return mean_energy_; }

    // <sigma_X> for the site set encoded as a bitmask; the empty set gives
    // exactly 1.
    double correlation(std::uint64_t mask) const;
    std::vector<double> correlations(std::span<const std::uint64_t> masks) const;

    // <sigma_X sigma_Y> = <sigma_{X xor Y}> - <sigma_X><sigma_Y>.
    double truncated_k1(std::uint64_t mask_x, std::uint64_t mask_y) const;

    struct MagnetizationMoments {
        double m1 = 0.0;  // <m^p>
        double m2 = 0.0;  // <(m^p)^2>
    };
    // Pair sums go through grouped symmetric-difference parity tables up to
    // kPairTableLimit ranges; above that the per-configuration magnetization
    // is streamed along a fresh Gray walk instead.
    enum class PairStrategy { automatic, grouped, streaming };
    static constexpr std::size_t kPairTableLimit = 4096;
    MagnetizationMoments magnetization_moments(const CouplingFamily& family,
                                               PairStrategy strategy =
                                                   PairStrategy::automatic) const;

    struct OverlapMoments {
        double r = 0.0;        // <R_{1,2}>
        double r2 = 0.0;       // <R_{1,2}^2>
        double r12r13 = 0.0;   // <R_{1,2} R_{1,3}>
    };
    OverlapMoments overlap_moments(const CouplingFamily& family) const;

    // Sum of normalized probabilities (a consistency diagnostic; ~1).
    double probability_sum() const;

private:
    double beta_ = 0.0;
    std::uint32_t n_sites_ = 0;
    double log_z_ = 0.0;
    double weight_sum_ = 0.0;   // sum of cached unnormalized weights
    double mean_energy_ = 0.0;
    std::vector<double> weights_;  // exp(-beta (E_t - E_min)), Gray order
};

}  // namespace nishilab
