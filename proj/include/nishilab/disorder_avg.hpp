#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nishilab/exact.hpp"
#include "nishilab/geometry.hpp"
#include "nishilab/model.hpp"
#include "nishilab/sampler.hpp"

namespace nishilab {

enum class Engine { exact, mcmc, quadrature };

std::string engine_name(Engine e);
Engine engine_from_name(const std::string& name);

// A lattice, its coupling families and the model parameters, with
// species[i] <-> families[i]. Inert species (delta = mu = 0) carry
// measurement-only families.
struct ModelSystem {
    LatticeSpec lattice;
    std::vector<CouplingFamily> families;
    ModelParameters params;

    std::uint64_t n_sites() const { return lattice.site_count(); }
    std::size_t family_index_for_p(int p) const;  // first match, throws if absent
    double beta_nishimori() const { return nishimori_beta(params); }
};

struct EngineSettings {
    std::uint32_t n_max = ExactGibbs::default_n_max;
    Schedule schedule;
    LadderConfig ladder;
    bool swaps = true;
    int quadrature_nodes = 64;
};

struct EstimatorResult {
    double mean = 0.0;
    double std_error = 0.0;
    std::uint64_t n_realizations = 0;
    Engine engine = Engine::exact;
    std::uint64_t seed = 0;
};

// Component means over a disorder ensemble plus the covariance of those
// means (cross-realization scatter; MCMC within-realization variance is
// added on the diagonal).
struct EnsembleStats {
    std::vector<double> mean;
    std::vector<std::vector<double>> cov;
    std::uint64_t n = 0;
    std::uint64_t seed = 0;
    Engine engine = Engine::exact;

    double stderr_of(std::size_t k) const;
    EstimatorResult result(std::size_t k) const;
};

struct RealizationValues {
    std::vector<double> values;
    std::vector<double> variances;  // within-realization variance per value (empty = exact)
};

using RealizationEval = std::function<RealizationValues(const DisorderRealization&, std::uint64_t)>;

// Parallel map over n realizations keyed by (seed, index), reduced in index
// order, so the result is identical for any worker count.
EnsembleStats quenched_ensemble(const ModelSystem& system, std::uint64_t n, std::uint64_t seed,
                                unsigned workers, const RealizationEval& eval);

// Deterministic disorder expectation by tensor Gauss-Hermite quadrature;
// usable when the system has at most three random couplings.
EnsembleStats quadrature_ensemble(const ModelSystem& system, int nodes,
                                  const std::function<std::vector<double>(
                                      const DisorderRealization&)>& eval);

std::size_t count_random_couplings(const ModelSystem& system);

// ---- Named observables -------------------------------------------------

struct ObservableSpec {
    enum class Kind { energy, sigma_x, magnetization, magnetization_sq, overlap, overlap_sq };
    Kind kind = Kind::energy;
    std::vector<std::uint32_t> sites;  // sigma_x
    int family_index = 0;              // magnetization/overlap
    std::string name() const;
};

EstimatorResult quenched_average(const ModelSystem& system, const ObservableSpec& observable,
                                 std::uint64_t n, std::uint64_t seed, Engine engine,
                                 const EngineSettings& settings, unsigned workers);

// Standard record emitted for disorder-averaged scalars:
// {"observable", "beta", "params", "mean", "stderr", "n", "engine", "seed"}.
nlohmann::json estimator_to_json(const std::string& observable_name, const ModelSystem& system,
                                 const EstimatorResult& result);

struct VariancePair {
    EstimatorResult thermal;  // E[<A^2> - <A>^2]
    EstimatorResult total;    // E<A^2> - (E<A>)^2
    std::string observable;
};

enum class VarianceObservable { magnetization, overlap };

VariancePair variance_pair(const ModelSystem& system, VarianceObservable which, int family_index,
                           std::uint64_t n, std::uint64_t seed, Engine engine,
                           const EngineSettings& settings, unsigned workers);

// Cross-temperature products on common random numbers. Components:
//   0: <sX>_b          1: <sX>_b <sX>_bn
//   2: <sX>_b <sY>_b   3: <sX>_b <sY>_b <sXsY>_bn
//   4: <sXsY>_b        5: <sXsY>_b <sXsY>_bn
// where b is params.beta and bn the Nishimori beta of the species.
EnsembleStats paired_average(const ModelSystem& system, double beta_n,
                             std::span<const std::uint32_t> x_sites,
                             std::span<const std::uint32_t> y_sites, std::uint64_t n,
                             std::uint64_t seed, Engine engine, const EngineSettings& settings,
                             unsigned workers);

}  // namespace nishilab
