#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "nishilab/exact.hpp"
#include "nishilab/sampler.hpp"
#include "nishilab/stats.hpp"
#include "nishilab/systems.hpp"

using namespace nishilab;

namespace {

struct Instance {
    ModelSystem system;
    DisorderRealization disorder;
    CouplingTable table;
};

Instance make_instance(ModelSystem system, std::uint64_t seed, std::uint64_t index) {
    auto d = sample_disorder(system.params, system.families, system.n_sites(), seed, index);
    auto table = CouplingTable::build(d, system.families, system.n_sites());
    return {std::move(system), std::move(d), std::move(table)};
}

}  // namespace

TEST_CASE("beta = 0 accepts every proposal") {
    auto inst = make_instance(make_ea_system(2, 3, 0.0, Species{2, 1.0, 0.5}), 31, 0);
    ChainState chain(inst.table, 5, 0);
    for (int s = 0; s < 100; ++s)
        CHECK(metropolis_sweep(chain, inst.table, 0.0) == inst.table.n_sites);
}

TEST_CASE("two-spin chain: aligned-state occupancy matches the Gibbs weight") {
    // Single bond J = 1 at beta = 3: P(aligned) = e^3 / (e^3 + e^-3).
    auto inst = make_instance(make_ea_system(1, 2, 3.0, Species{2, 0.0, 1.0}), 32, 0);
    ChainState chain(inst.table, 6, 0);
    const std::uint64_t sweeps = 1000000;
    std::vector<double> aligned;
    aligned.reserve(sweeps);
    for (std::uint64_t s = 0; s < sweeps; ++s) {
        metropolis_sweep(chain, inst.table, 3.0);
        aligned.push_back(chain.spins[0] == chain.spins[1] ? 1.0 : 0.0);
    }
    double expect = std::exp(3.0) / (std::exp(3.0) + std::exp(-3.0));
    auto ms = mean_stderr(aligned);
    double tau = integrated_autocorrelation_time(aligned);
    double se = ms.stderr_ * std::sqrt(2.0 * tau);
    CHECK(std::abs(ms.mean - expect) <= 3.0 * se);
}

TEST_CASE("incremental energy bookkeeping stays within 1e-9 over 1e5 sweeps") {
    auto inst = make_instance(make_ea_system(2, 3, 0.8, Species{2, 1.0, 0.5}), 33, 0);
    ChainState chain(inst.table, 7, 0);
    for (std::uint64_t s = 0; s < 100000; ++s) metropolis_sweep(chain, inst.table, 0.8);
    CHECK(std::abs(chain.energy - inst.table.energy(chain.spins)) <= 1e-9);
}

TEST_CASE("empirical occupancy converges to the exact Gibbs distribution") {
    // 1D chain of 3 sites: total variation <= 0.01 after 1e6 sweeps.
    auto inst = make_instance(make_ea_system(1, 3, 0.7, Species{2, 1.0, 0.3}), 34, 1);
    ExactGibbs exact(inst.disorder, inst.system.families, 0.7, 3);

    std::vector<double> p(8);
    for (std::size_t c = 0; c < 8; ++c) {
        std::vector<std::int8_t> spins(3);
        for (std::size_t i = 0; i < 3; ++i) spins[i] = (c >> i) & 1 ? -1 : 1;
        p[c] = std::exp(-0.7 * hamiltonian(spins, inst.disorder, inst.system.families) -
                        exact.log_partition());
    }

    ChainState chain(inst.table, 8, 0);
    for (int s = 0; s < 1000; ++s) metropolis_sweep(chain, inst.table, 0.7);  // burn-in
    std::vector<double> counts(8, 0.0);
    const std::uint64_t sweeps = 1000000;
    for (std::uint64_t s = 0; s < sweeps; ++s) {
        metropolis_sweep(chain, inst.table, 0.7);
        std::size_t c = 0;
        for (std::size_t i = 0; i < 3; ++i)
            if (chain.spins[i] < 0) c |= std::size_t{1} << i;
        counts[c] += 1.0;
    }
    double tv = 0.0;
    for (std::size_t c = 0; c < 8; ++c) tv += std::abs(counts[c] / sweeps - p[c]);
    CHECK(0.5 * tv <= 0.01);
}

TEST_CASE("ladder construction") {
    LadderConfig config;
    double must[1] = {0.5};
    auto betas = build_ladder(1.0, config, must);
    CHECK(std::is_sorted(betas.begin(), betas.end()));
    CHECK(betas.front() == doctest::Approx(0.2));
    CHECK(betas.back() == doctest::Approx(1.2));
    bool has_target = false, has_nm = false;
    for (double b : betas) {
        has_target |= std::abs(b - 1.0) <= 1e-12;
        has_nm |= std::abs(b - 0.5) <= 1e-12;
    }
    CHECK(has_target);
    CHECK(has_nm);

    auto trivial = build_ladder(0.0, config, {});
    CHECK(trivial == std::vector<double>{0.0});
}

TEST_CASE("tempering: lineages run on disjoint RNG streams") {
    auto inst = make_instance(make_ea_system(2, 2, 0.6, Species{2, 1.0, 0.3}), 35, 2);
    TemperingSampler sampler(inst.table, {0.3, 0.6}, 9, 17);
    std::set<std::uint64_t> streams;
    for (unsigned lineage : {0u, 1u})
        for (std::size_t rung = 0; rung < 2; ++rung)
            streams.insert(sampler.chain(lineage, rung).rng.stream());
    CHECK(streams.size() == 4);  // all distinct by construction
}

TEST_CASE("constant observable estimates to exactly 1") {
    auto inst = make_instance(make_ea_system(2, 2, 0.6, Species{2, 1.0, 0.3}), 36, 0);
    TemperingSampler sampler(inst.table, {0.6}, 10, 0);
    Observable one{"one", false,
                   [](std::span<const std::int8_t>, std::span<const std::int8_t>,
                      const CouplingTable&) { return 1.0; }};
    TemperingSampler::Request req{0, one};
    Schedule schedule{100, 1000, 1};
    auto est = sampler.run(schedule, {&req, 1});
    CHECK(est[0].value == 1.0);
    CHECK(est[0].std_error == 0.0);
}

TEST_CASE("MCMC agrees with exact enumeration on the 3x3 EA model") {
    // Every observable of the identity suite, 6 realizations.
    const double beta_n = 0.5;
    const double beta = 0.7;
    auto system = make_ea_system(2, 3, beta, Species{2, 1.0, 0.5});
    Schedule schedule{2000, 30000, 1};
    LadderConfig ladder_config;
    int rejected = 0;
    for (std::uint64_t r = 0; r < 6; ++r) {
        auto inst = make_instance(system, 40, r);
        ExactGibbs exact(inst.disorder, inst.system.families, beta, 9);
        const auto& site_family = inst.system.families[0];
        const auto& bond_family = inst.system.families[1];

        double must[1] = {beta_n};
        auto betas = build_ladder(beta, ladder_config, must);
        TemperingSampler sampler(inst.table, betas, 41, r);
        std::size_t bi = sampler.beta_index(beta);
        std::vector<TemperingSampler::Request> reqs = {
            {bi, energy_observable()},
            {bi, magnetization_observable(site_family, 1)},
            {bi, magnetization_observable(site_family, 2)},
            {bi, magnetization_observable(bond_family, 1)},
            {bi, sigma_observable({0, 1})},
            {bi, overlap_observable(bond_family, 1)},
            {bi, overlap_observable(bond_family, 2)},
        };
        auto est = sampler.run(schedule, reqs);
        CHECK(sampler.max_energy_drift() <= 1e-9);

        auto mm_site = exact.magnetization_moments(site_family);
        auto mm_bond = exact.magnetization_moments(bond_family);
        auto om = exact.overlap_moments(bond_family);
        double truth[7] = {exact.mean_energy(), mm_site.m1, mm_site.m2, mm_bond.m1,
                           exact.correlation(0b11), om.r, om.r2};
        for (int k = 0; k < 7; ++k) {
            CAPTURE(r);
            CAPTURE(k);
            double se = std::max(est[k].std_error, 1e-12);
            if (std::abs(est[k].value - truth[k]) > 4.0 * se) ++rejected;
            CHECK(est[k].converged);
        }
    }
    // 42 four-sigma comparisons; tolerate at most one statistical outlier.
    CHECK(rejected <= 1);
}

TEST_CASE("replica exchange preserves per-rung marginals") {
    const double beta = 0.9;
    auto system = make_ea_system(2, 2, beta, Species{2, 1.0, 0.5});
    auto inst = make_instance(system, 50, 3);
    ExactGibbs exact(inst.disorder, inst.system.families, beta, 4);
    auto betas = build_ladder(beta, LadderConfig{}, {});
    TemperingSampler sampler(inst.table, betas, 51, 3);
    TemperingSampler::Request req{sampler.beta_index(beta),
                                  magnetization_observable(inst.system.families[1], 2)};
    auto est = sampler.run(Schedule{2000, 40000, 1}, {&req, 1}, true);
    CHECK(sampler.swap_acceptance() > 0.0);
    double truth = exact.magnetization_moments(inst.system.families[1]).m2;
    CHECK(std::abs(est[0].value - truth) <= 4.0 * est[0].std_error);
}

TEST_CASE("standard error follows sqrt(n) scaling") {
    auto inst = make_instance(make_ea_system(2, 3, 0.6, Species{2, 1.0, 0.5}), 60, 0);
    std::vector<double> log_n, log_se;
    for (std::uint64_t sweeps : {4000, 16000, 64000}) {
        TemperingSampler sampler(inst.table, {0.6}, 61, sweeps);  // fresh streams per run
        TemperingSampler::Request req{0, magnetization_observable(inst.system.families[0], 2)};
        auto est = sampler.run(Schedule{500, sweeps, 1}, {&req, 1}, false);
        log_n.push_back(std::log(static_cast<double>(sweeps)));
        log_se.push_back(std::log(est[0].std_error));
    }
    LineFit fit = fit_line(log_n, log_se);
    CHECK(fit.slope == doctest::Approx(-0.5).epsilon(0.3));
}

TEST_CASE("chain checkpoints resume exactly") {
    auto inst = make_instance(make_ea_system(2, 3, 0.7, Species{2, 1.0, 0.5}), 70, 0);
    ChainState chain(inst.table, 71, 0);
    for (int s = 0; s < 500; ++s) metropolis_sweep(chain, inst.table, 0.7);
    auto snapshot = chain_to_json(chain);

    ChainState resumed = chain_from_json(snapshot, inst.table);
    for (int s = 0; s < 500; ++s) {
        metropolis_sweep(chain, inst.table, 0.7);
        metropolis_sweep(resumed, inst.table, 0.7);
    }
    CHECK(chain.spins == resumed.spins);
    // The restored chain recomputes its energy from scratch; the original
    // carries incremental roundoff, so agreement is to the drift bound.
    CHECK(std::abs(chain.energy - resumed.energy) <= 1e-9);
    CHECK(chain.rng.position() == resumed.rng.position());
}
