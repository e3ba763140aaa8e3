#include "nishilab/disorder_avg.hpp"

#include <cmath>
#include <stdexcept>

#include "nishilab/parallel.hpp"
#include "nishilab/quadrature.hpp"
#include "nishilab/stats.hpp"

namespace nishilab {

std::string engine_name(Engine e) {
    switch (e) {
        case Engine::exact: return "exact";
        case Engine::mcmc: return "mcmc";
        case Engine::quadrature: return "quadrature";
    }
    return "exact";
}

Engine engine_from_name(const std::string& name) {
    if (name == "exact") return Engine::exact;
    if (name == "mcmc") return Engine::mcmc;
    if (name == "quadrature") return Engine::quadrature;
    throw std::invalid_argument("unknown engine: " + name);
}

std::size_t ModelSystem::family_index_for_p(int p) const {
    for (std::size_t i = 0; i < families.size(); ++i)
        if (families[i].p == p) return i;
    throw std::invalid_argument("ModelSystem: no family with p = " + std::to_string(p));
}

double EnsembleStats::stderr_of(std::size_t k) const { return std::sqrt(cov[k][k]); }

EstimatorResult EnsembleStats::result(std::size_t k) const {
    EstimatorResult r;
    r.mean = mean[k];
    r.std_error = stderr_of(k);
    r.n_realizations = n;
    r.engine = engine;
    r.seed = seed;
    return r;
}

EnsembleStats quenched_ensemble(const ModelSystem& system, std::uint64_t n, std::uint64_t seed,
                                unsigned workers, const RealizationEval& eval) {
    if (n < 1) throw std::invalid_argument("quenched_ensemble: need n >= 1 realizations");
    std::vector<RealizationValues> rows(n);
    parallel_for(n, workers, [&](std::uint64_t i) {
        DisorderRealization d =
            sample_disorder(system.params, system.families, system.n_sites(), seed, i);
        rows[i] = eval(d, i);
    });

    const std::size_t k = rows[0].values.size();
    std::vector<std::vector<double>> values(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        if (rows[i].values.size() != k)
            throw std::runtime_error("quenched_ensemble: inconsistent eval arity");
        values[i] = rows[i].values;
    }

    EnsembleStats stats;
    stats.n = n;
    stats.seed = seed;
    stats.mean.resize(k);
    for (std::size_t c = 0; c < k; ++c) {
        KahanSum s;
        for (std::uint64_t i = 0; i < n; ++i) s.add(values[i][c]);
        stats.mean[c] = s.value() / static_cast<double>(n);
    }
    stats.cov = sample_covariance(values, stats.mean);
    double inv_n = 1.0 / static_cast<double>(n);
    for (auto& row : stats.cov)
        for (auto& v : row) v *= inv_n;  // covariance of the mean

    // Propagate within-realization (MCMC) variance on the diagonal.
    for (std::size_t c = 0; c < k; ++c) {
        KahanSum s;
        bool any = false;
        for (std::uint64_t i = 0; i < n; ++i) {
            if (rows[i].variances.empty()) continue;
            any = true;
            s.add(rows[i].variances[c]);
        }
        if (any) stats.cov[c][c] += s.value() * inv_n * inv_n;
    }
    return stats;
}

std::size_t count_random_couplings(const ModelSystem& system) {
    std::size_t count = 0;
    for (std::size_t i = 0; i < system.params.species.size(); ++i)
        if (system.params.species[i].delta > 0.0) count += system.families[i].size();
    return count;
}

EnsembleStats quadrature_ensemble(const ModelSystem& system, int nodes,
                                  const std::function<std::vector<double>(
                                      const DisorderRealization&)>& eval) {
    const std::size_t dims = count_random_couplings(system);
    if (dims > 3)
        throw std::invalid_argument(
            "quadrature_ensemble: more than three random couplings; use sampling");

    // Flatten (species, range) slots of random couplings; deterministic
    // couplings are filled with their means.
    DisorderRealization proto;
    proto.seed = 0;
    proto.index = 0;
    std::vector<std::pair<std::size_t, std::size_t>> slots;
    std::vector<double> means, stds;
    for (std::size_t i = 0; i < system.params.species.size(); ++i) {
        const Species& sp = system.params.species[i];
        double mean = coupling_mean(sp, system.params.lattice_kind, system.n_sites());
        double sd = coupling_stddev(sp, system.params.lattice_kind, system.n_sites());
        DisorderRealization::SpeciesCouplings sc;
        sc.p = sp.p;
        sc.values.assign(system.families[i].size(), mean);
        if (sd > 0.0)
            for (std::size_t r = 0; r < sc.values.size(); ++r) {
                slots.emplace_back(i, r);
                means.push_back(mean);
                stds.push_back(sd);
            }
        proto.species.push_back(std::move(sc));
    }

    std::size_t arity = 0;
    bool arity_known = false;
    auto f = [&](std::span<const double> j) {
        DisorderRealization d = proto;
        for (std::size_t s = 0; s < slots.size(); ++s)
            d.species[slots[s].first].values[slots[s].second] = j[s];
        auto v = eval(d);
        if (!arity_known) {
            arity = v.size();
            arity_known = true;
        }
        return v;
    };
    // Probe once to learn the output arity.
    std::vector<double> probe(dims, 0.0);
    for (std::size_t s = 0; s < dims; ++s) probe[s] = means[s];
    arity = f(probe).size();

    auto result = quadrature_disorder_expectation(means, stds, arity, f, nodes);
    EnsembleStats stats;
    stats.mean = std::move(result);
    stats.cov.assign(arity, std::vector<double>(arity, 0.0));
    stats.n = 1;
    stats.engine = Engine::quadrature;
    return stats;
}

std::string ObservableSpec::name() const {
    switch (kind) {
        case Kind::energy: return "energy";
        case Kind::sigma_x: {
            std::string n = "sigma";
            for (auto s : sites) n += "_" + std::to_string(s);
            return n;
        }
        case Kind::magnetization: return "m";
        case Kind::magnetization_sq: return "m_sq";
        case Kind::overlap: return "R";
        case Kind::overlap_sq: return "R_sq";
    }
    return "observable";
}

namespace {

std::uint64_t sites_to_mask(std::span<const std::uint32_t> sites) {
    std::uint64_t mask = 0;
    for (std::uint32_t s : sites) mask ^= std::uint64_t{1} << s;
    return mask;
}

double eval_exact_observable(const ExactGibbs& gibbs, const ModelSystem& system,
                             const ObservableSpec& spec) {
    switch (spec.kind) {
        case ObservableSpec::Kind::energy:
            return gibbs.mean_energy();
        case ObservableSpec::Kind::sigma_x:
            return gibbs.correlation(sites_to_mask(spec.sites));
        case ObservableSpec::Kind::magnetization:
            return gibbs.magnetization_moments(system.families.at(spec.family_index)).m1;
        case ObservableSpec::Kind::magnetization_sq:
            return gibbs.magnetization_moments(system.families.at(spec.family_index)).m2;
        case ObservableSpec::Kind::overlap:
            return gibbs.overlap_moments(system.families.at(spec.family_index)).r;
        case ObservableSpec::Kind::overlap_sq:
            return gibbs.overlap_moments(system.families.at(spec.family_index)).r2;
    }
    throw std::logic_error("eval_exact_observable: unhandled kind");
}

Observable mcmc_observable(const ModelSystem& system, const ObservableSpec& spec) {
    switch (spec.kind) {
        case ObservableSpec::Kind::energy:
            return energy_observable();
        case ObservableSpec::Kind::sigma_x:
            return sigma_observable(spec.sites);
        case ObservableSpec::Kind::magnetization:
            return magnetization_observable(system.families.at(spec.family_index), 1);
        case ObservableSpec::Kind::magnetization_sq:
            return magnetization_observable(system.families.at(spec.family_index), 2);
        case ObservableSpec::Kind::overlap:
            return overlap_observable(system.families.at(spec.family_index), 1);
        case ObservableSpec::Kind::overlap_sq:
            return overlap_observable(system.families.at(spec.family_index), 2);
    }
    throw std::logic_error("mcmc_observable: unhandled kind");
}

}  // namespace

EstimatorResult quenched_average(const ModelSystem& system, const ObservableSpec& observable,
                                 std::uint64_t n, std::uint64_t seed, Engine engine,
                                 const EngineSettings& settings, unsigned workers) {
    if (engine == Engine::quadrature) {
        auto stats = quadrature_ensemble(system, settings.quadrature_nodes,
                                         [&](const DisorderRealization& d) {
                                             ExactGibbs gibbs(d, system.families,
                                                              system.params.beta,
                                                              static_cast<std::uint32_t>(
                                                                  system.n_sites()),
                                                              settings.n_max);
                                             return std::vector<double>{
                                                 eval_exact_observable(gibbs, system, observable)};
                                         });
        return stats.result(0);
    }
    if (n < 2) throw std::invalid_argument("quenched_average: need n >= 2 realizations");
    RealizationEval eval;
    if (engine == Engine::exact) {
        eval = [&](const DisorderRealization& d, std::uint64_t) {
            ExactGibbs gibbs(d, system.families, system.params.beta,
                             static_cast<std::uint32_t>(system.n_sites()), settings.n_max);
            return RealizationValues{{eval_exact_observable(gibbs, system, observable)}, {}};
        };
    } else {
        eval = [&](const DisorderRealization& d, std::uint64_t idx) {
            CouplingTable table = CouplingTable::build(d, system.families, system.n_sites());
            auto betas = build_ladder(system.params.beta, settings.ladder, {});
            TemperingSampler sampler(table, betas, seed, idx);
            TemperingSampler::Request req{sampler.beta_index(system.params.beta),
                                          mcmc_observable(system, observable)};
            auto est = sampler.run(settings.schedule, {&req, 1}, settings.swaps);
            return RealizationValues{{est[0].value}, {est[0].std_error * est[0].std_error}};
        };
    }
    auto stats = quenched_ensemble(system, n, seed, workers, eval);
    auto r = stats.result(0);
    r.engine = engine;
    return r;
}

nlohmann::json estimator_to_json(const std::string& observable_name, const ModelSystem& system,
                                 const EstimatorResult& result) {
    nlohmann::json params = nlohmann::json::array();
    for (const auto& s : system.params.species)
        params.push_back({{"p", s.p}, {"delta", s.delta}, {"mu", s.mu}});
    return {{"observable", observable_name},
            {"beta", system.params.beta},
            {"params", params},
            {"mean", result.mean},
            {"stderr", result.std_error},
            {"n", result.n_realizations},
            {"engine", engine_name(result.engine)},
            {"seed", result.seed}};
}

VariancePair variance_pair(const ModelSystem& system, VarianceObservable which, int family_index,
                           std::uint64_t n, std::uint64_t seed, Engine engine,
                           const EngineSettings& settings, unsigned workers) {
    const CouplingFamily& family = system.families.at(family_index);
    // Components per realization: <A>, <A^2>.
    RealizationEval eval;
    if (engine == Engine::exact || engine == Engine::quadrature) {
        eval = [&](const DisorderRealization& d, std::uint64_t) {
            ExactGibbs gibbs(d, system.families, system.params.beta,
                             static_cast<std::uint32_t>(system.n_sites()), settings.n_max);
            if (which == VarianceObservable::magnetization) {
                auto m = gibbs.magnetization_moments(family);
                return RealizationValues{{m.m1, m.m2}, {}};
            }
            auto o = gibbs.overlap_moments(family);
            return RealizationValues{{o.r, o.r2}, {}};
        };
    } else {
        eval = [&](const DisorderRealization& d, std::uint64_t idx) {
            CouplingTable table = CouplingTable::build(d, system.families, system.n_sites());
            auto betas = build_ladder(system.params.beta, settings.ladder, {});
            TemperingSampler sampler(table, betas, seed, idx);
            std::size_t bi = sampler.beta_index(system.params.beta);
            bool mag = which == VarianceObservable::magnetization;
            std::vector<TemperingSampler::Request> reqs = {
                {bi, mag ? magnetization_observable(family, 1) : overlap_observable(family, 1)},
                {bi, mag ? magnetization_observable(family, 2) : overlap_observable(family, 2)},
            };
            auto est = sampler.run(settings.schedule, reqs, settings.swaps);
            return RealizationValues{{est[0].value, est[1].value},
                                     {est[0].std_error * est[0].std_error,
                                      est[1].std_error * est[1].std_error}};
        };
    }

    EnsembleStats stats;
    if (engine == Engine::quadrature) {
        stats = quadrature_ensemble(system, settings.quadrature_nodes,
                                    [&](const DisorderRealization& d) {
                                        auto rv = eval(d, 0);
                                        // Also integrate <A>^2 exactly for the total variance.
                                        return std::vector<double>{rv.values[0], rv.values[1],
                                                                   rv.values[0] * rv.values[0]};
                                    });
    } else {
        if (n < 2) throw std::invalid_argument("variance_pair: need n >= 2 realizations");
        stats = quenched_ensemble(system, n, seed, workers, [&](const DisorderRealization& d,
                                                                std::uint64_t idx) {
            auto rv = eval(d, idx);
            // E[est^2] = <A>^2 + Var(est); subtract the within-realization
            // variance so the MCMC plug-in for <A>^2 is unbiased.
            double bias = rv.variances.empty() ? 0.0 : rv.variances[0];
            rv.values.push_back(rv.values[0] * rv.values[0] - bias);
            if (!rv.variances.empty())
                rv.variances.push_back(4.0 * rv.values[0] * rv.values[0] * rv.variances[0]);
            return rv;
        });
    }

    // thermal = E[<A^2>] - E[<A>^2];  total = E[<A^2>] - (E[<A>])^2.
    const double a1 = stats.mean[0], a2 = stats.mean[1], a1sq = stats.mean[2];
    VariancePair out;
    out.observable = which == VarianceObservable::magnetization
                         ? "m" + std::to_string(family.p)
                         : "R" + std::to_string(family.p);
    out.thermal.mean = a2 - a1sq;
    out.total.mean = a2 - a1 * a1;
    // Delta method on the mean covariance.
    double var_thermal = stats.cov[1][1] + stats.cov[2][2] - 2.0 * stats.cov[1][2];
    double var_total = stats.cov[1][1] + 4.0 * a1 * a1 * stats.cov[0][0] -
                       4.0 * a1 * stats.cov[0][1];
    out.thermal.std_error = std::sqrt(std::max(0.0, var_thermal));
    out.total.std_error = std::sqrt(std::max(0.0, var_total));
    out.thermal.n_realizations = out.total.n_realizations = stats.n;
    out.thermal.engine = out.total.engine = engine;
    out.thermal.seed = out.total.seed = seed;
    return out;
}

EnsembleStats paired_average(const ModelSystem& system, double beta_n,
                             std::span<const std::uint32_t> x_sites,
                             std::span<const std::uint32_t> y_sites, std::uint64_t n,
                             std::uint64_t seed, Engine engine, const EngineSettings& settings,
                             unsigned workers) {
    const std::uint64_t mask_x = sites_to_mask(x_sites);
    const std::uint64_t mask_y = sites_to_mask(y_sites);
    const double beta = system.params.beta;

    auto products = [&](const DisorderRealization& d) {
        ExactGibbs at_beta(d, system.families, beta, static_cast<std::uint32_t>(system.n_sites()),
                           settings.n_max);
        ExactGibbs at_nm(d, system.families, beta_n, static_cast<std::uint32_t>(system.n_sites()),
                         settings.n_max);
        std::uint64_t masks[3] = {mask_x, mask_y, mask_x ^ mask_y};
        auto vb = at_beta.correlations(masks);
        auto vn = at_nm.correlations(masks);
        return std::vector<double>{
            vb[0],                 vb[0] * vn[0],
            vb[0] * vb[1],         vb[0] * vb[1] * vn[2],
            vb[2],                 vb[2] * vn[2],
        };
    };

    if (engine == Engine::quadrature)
        return quadrature_ensemble(system, settings.quadrature_nodes, products);
    if (n < 2) throw std::invalid_argument("paired_average: need n >= 2 realizations");
    auto stats = quenched_ensemble(system, n, seed, workers,
                                   [&](const DisorderRealization& d, std::uint64_t) {
                                       return RealizationValues{products(d), {}};
                                   });
    stats.engine = engine;
    return stats;
}

}  // namespace nishilab
