#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "nishilab/geometry.hpp"

namespace nishilab {

struct Species {
    int p = 2;
    double delta = 1.0;  // standard deviation of the disorder (model parameter)
    double mu = 0.0;     // mean of the disorder (model parameter)
};

// Inverse temperature plus one (delta, mu) pair per interaction species.
// species[i] always pairs with families[i] in model-level calls; a species
// with delta = mu = 0 contributes no couplings and exists only so that its
// family can be measured.
struct ModelParameters {
    double beta = 1.0;
    std::vector<Species> species;
    LatticeKind lattice_kind = LatticeKind::short_range;

    bool on_nishimori(double rel_tol = 1e-12) const;
};

// Common ratio mu_p / delta_p^2 over all species with delta_p > 0.
// Throws if the ratios disagree (naming the offending species) or if no
// species carries randomness.
double nishimori_beta(const ModelParameters& params, double rel_tol = 1e-12);

// One sampled coupling vector per species, indexed like the family ranges.
struct DisorderRealization {
    std::uint64_t seed = 0;
    std::uint64_t index = 0;
    struct SpeciesCouplings {
        int p = 2;
        std::vector<double> values;
    };
    std::vector<SpeciesCouplings> species;
};

// Mean/stddev of an individual coupling. Mean field rescales by powers of
// the system size so the Hamiltonian stays extensive.
double coupling_mean(const Species& s, LatticeKind kind, std::uint64_t n_sites);
double coupling_stddev(const Species& s, LatticeKind kind, std::uint64_t n_sites);

DisorderRealization sample_disorder(const ModelParameters& params,
                                    const std::vector<CouplingFamily>& families,
                                    std::uint64_t n_sites, std::uint64_t seed,
                                    std::uint64_t realization_index);

struct GaugeConfiguration {
    std::vector<std::int8_t> tau;  // entries in {-1,+1}
};

double hamiltonian(std::span<const std::int8_t> spins, const DisorderRealization& disorder,
                   const std::vector<CouplingFamily>& families);

DisorderRealization gauge_transform(const DisorderRealization& disorder,
                                    const GaugeConfiguration& tau,
                                    const std::vector<CouplingFamily>& families);

// log P(J tau) - log Ptilde(J) = sum_p sum_X (mu_p / delta_p^2) J_X tau_X.
double gauge_log_weight(const DisorderRealization& disorder, const GaugeConfiguration& tau,
                        const ModelParameters& params,
                        const std::vector<CouplingFamily>& families, std::uint64_t n_sites);

nlohmann::json disorder_to_json(const DisorderRealization& d);
DisorderRealization disorder_from_json(const nlohmann::json& j);

// Flattened couplings with per-site adjacency; the shared substrate for the
// enumeration engine, the Metropolis sampler and full-energy evaluation.
struct CouplingTable {
    std::uint32_t n_sites = 0;
    std::vector<double> values;                       // all couplings, species-major
    std::vector<std::uint64_t> masks;                 // site bitmask per coupling (n_sites <= 64)
    std::vector<std::uint32_t> range_offsets;         // into range_sites, size couplings+1
    std::vector<std::uint32_t> range_sites;           // flattened site lists
    std::vector<std::uint32_t> site_offsets;          // into site_couplings, size n_sites+1
    std::vector<std::uint32_t> site_couplings;        // couplings touching each site
    std::vector<std::size_t> species_offsets;         // first flat index per species

    static CouplingTable build(const DisorderRealization& disorder,
                               const std::vector<CouplingFamily>& families,
                               std::uint64_t n_sites);

    double energy(std::span<const std::int8_t> spins) const;
    // Energy change if spins[site] were flipped, given the current spins.
    double flip_delta(std::span<const std::int8_t> spins, std::uint32_t site) const;
};

}  // namespace nishilab
