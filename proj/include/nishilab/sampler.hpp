#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "nishilab/geometry.hpp"
#include "nishilab/model.hpp"
#include "nishilab/rng.hpp"

namespace nishilab {

// One Metropolis chain at a fixed rung. The cached energy is resynced
// against a full recomputation every 1000 sweeps; the worst observed drift
// is kept for the bookkeeping invariant.
struct ChainState {
    std::vector<std::int8_t> spins;
    double energy = 0.0;
    std::uint64_t sweeps = 0;
    CounterRng rng;

    ChainState(const CouplingTable& table, std::uint64_t seed, std::uint64_t stream);
};

// N random-site proposals, acceptance min(1, exp(-beta dH)). Returns the
// number of accepted flips.
std::uint32_t metropolis_sweep(ChainState& state, const CouplingTable& table, double beta);

nlohmann::json chain_to_json(const ChainState& state);
ChainState chain_from_json(const nlohmann::json& j, const CouplingTable& table);

// Configuration-level measurements shared by MCMC and tests.
double spin_product(std::span<const std::int8_t> spins, std::span<const std::uint32_t> sites);
double family_magnetization(std::span<const std::int8_t> spins, const CouplingFamily& family);
double family_overlap(std::span<const std::int8_t> a, std::span<const std::int8_t> b,
                      const CouplingFamily& family);

struct Schedule {
    std::uint64_t burn_in = 1000;   // sweeps discarded
    std::uint64_t sweeps = 10000;   // measurement sweeps
    std::uint32_t thinning = 1;     // record every k-th sweep
};

struct LadderConfig {
    int rungs = 8;
    double min_factor = 0.2;  // ladder spans [min_factor, max_factor] * beta_target
    double max_factor = 1.2;
};

// Geometric ladder around beta_target, with required betas spliced in.
std::vector<double> build_ladder(double beta_target, const LadderConfig& config,
                                 std::span<const double> must_include);

struct McmcEstimate {
    double value = 0.0;
    double std_error = 0.0;
    double tau_int = 0.5;
    bool converged = true;
    std::uint64_t n_samples = 0;
};

// A scalar measurement on one (or a pair of) equilibrium configurations.
struct Observable {
    std::string name;
    bool two_replica = false;
    std::function<double(std::span<const std::int8_t>, std::span<const std::int8_t>,
                         const CouplingTable&)>
        eval;
};

Observable energy_observable();
Observable sigma_observable(std::vector<std::uint32_t> sites);
Observable magnetization_observable(const CouplingFamily& family, int power);
Observable overlap_observable(const CouplingFamily& family, int power);

// Parallel tempering over a sorted beta ladder. Two independent ladders
// (replica lineages) run side by side, on provably disjoint RNG streams, so
// overlap observables see independent Gibbs samples under one disorder
// realization. Swaps exchange configurations between adjacent rungs within
// one lineage.
class TemperingSampler {
public:
    TemperingSampler(const CouplingTable& table, std::vector<double> betas, std::uint64_t seed,
                     std::uint64_t realization_index);

    struct Request {
        std::size_t beta_index = 0;
        Observable observable;
    };

    std::vector<McmcEstimate> run(const Schedule& schedule, std::span<const Request> requests,
                                  bool enable_swaps = true);

    const std::vector<double>& betas() const { return betas_; }
    std::size_t beta_index(double beta) const;  // throws if absent
    const ChainState& chain(unsigned lineage, std::size_t rung) const {
        return lineage == 0 ? lineage_a_.at(rung) : lineage_b_.at(rung);
    }
    double swap_acceptance() const;
    double max_energy_drift() const { return max_drift_; }

private:
    void sweep_all(bool enable_swaps);

    const CouplingTable& table_;
    std::vector<double> betas_;
    std::vector<ChainState> lineage_a_;
    std::vector<ChainState> lineage_b_;
    CounterRng swap_rng_;
    std::uint64_t swap_attempts_ = 0;
    std::uint64_t swap_accepts_ = 0;
    std::uint64_t sweeps_done_ = 0;
    double max_drift_ = 0.0;
};

}  // namespace nishilab
