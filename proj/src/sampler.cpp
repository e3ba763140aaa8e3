#include "nishilab/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "nishilab/stats.hpp"

namespace nishilab {

namespace {

// Stream id layout: realization-scoped, disjoint by construction across
// lineages and rungs. Bit 5 separates the two lineages, the low bits index
// the rung, and 63 in the low bits marks the swap-decision stream.
constexpr std::uint64_t kStreamSpan = 128;

std::uint64_t chain_stream(std::uint64_t realization, unsigned lineage, unsigned rung) {
    return realization * kStreamSpan + lineage * 32 + rung;
}

std::uint64_t swap_stream(std::uint64_t realization) {
    return realization * kStreamSpan + 127;
}

constexpr std::uint64_t kDriftCheckInterval = 1000;  // sweeps

}  // namespace

ChainState::ChainState(const CouplingTable& table, std::uint64_t seed, std::uint64_t stream)
    : rng(seed, stream) {
    spins.resize(table.n_sites);
    for (auto& s : spins) s = rng.next_uniform() < 0.5 ? std::int8_t{1} : std::int8_t{-1};
    energy = table.energy(spins);
}

std::uint32_t metropolis_sweep(ChainState& state, const CouplingTable& table, double beta) {
    std::uint32_t accepted = 0;
    const std::uint32_t n = table.n_sites;
    for (std::uint32_t k = 0; k < n; ++k) {
        std::uint32_t site = state.rng.next_index(n);
        double dh = table.flip_delta(state.spins, site);
        // Always consume one uniform so the stream position is independent
        // of the trajectory shape.
        double u = state.rng.next_uniform();
        bool accept = dh <= 0.0 || u < std::exp(-beta * dh);
        if (accept) {
            state.spins[site] = static_cast<std::int8_t>(-state.spins[site]);
            state.energy += dh;
            ++accepted;
        }
    }
    ++state.sweeps;
    return accepted;
}

nlohmann::json chain_to_json(const ChainState& state) {
    nlohmann::json j;
    j["spins"] = std::vector<int>(state.spins.begin(), state.spins.end());
    j["sweeps"] = state.sweeps;
    j["rng"] = {{"seed", state.rng.seed()},
                {"stream", state.rng.stream()},
                {"position", state.rng.position()}};
    return j;
}

ChainState chain_from_json(const nlohmann::json& j, const CouplingTable& table) {
    ChainState state(table, j.at("rng").at("seed").get<std::uint64_t>(),
                     j.at("rng").at("stream").get<std::uint64_t>());
    auto spins = j.at("spins").get<std::vector<int>>();
    if (spins.size() != table.n_sites)
        throw std::invalid_argument("chain_from_json: spin count mismatch");
    for (std::size_t i = 0; i < spins.size(); ++i) {
        if (spins[i] != 1 && spins[i] != -1)
            throw std::invalid_argument("chain_from_json: spins must be +-1");
        state.spins[i] = static_cast<std::int8_t>(spins[i]);
    }
    state.energy = table.energy(state.spins);
    state.sweeps = j.at("sweeps").get<std::uint64_t>();
    state.rng.seek(j.at("rng").at("position").get<std::uint64_t>());
    return state;
}

double spin_product(std::span<const std::int8_t> spins, std::span<const std::uint32_t> sites) {
    int sign = 1;
    for (std::uint32_t s : sites) sign *= spins[s];
    return static_cast<double>(sign);
}

double family_magnetization(std::span<const std::int8_t> spins, const CouplingFamily& family) {
    KahanSum sum;
    for (const auto& range : family.ranges) sum.add(spin_product(spins, range));
    return sum.value() / static_cast<double>(family.size());
}

double family_overlap(std::span<const std::int8_t> a, std::span<const std::int8_t> b,
                      const CouplingFamily& family) {
    KahanSum sum;
    for (const auto& range : family.ranges)
        sum.add(spin_product(a, range) * spin_product(b, range));
    return sum.value() / static_cast<double>(family.size());
}

std::vector<double> build_ladder(double beta_target, const LadderConfig& config,
                                 std::span<const double> must_include) {
    std::vector<double> betas;
    if (beta_target > 0.0 && config.rungs > 1) {
        double lo = config.min_factor * beta_target;
        double hi = config.max_factor * beta_target;
        for (int k = 0; k < config.rungs; ++k)
            betas.push_back(lo * std::pow(hi / lo, static_cast<double>(k) / (config.rungs - 1)));
    }
    betas.push_back(beta_target);
    betas.insert(betas.end(), must_include.begin(), must_include.end());
    std::sort(betas.begin(), betas.end());
    betas.erase(std::unique(betas.begin(), betas.end(),
                            [](double a, double b) { return std::abs(a - b) <= 1e-12; }),
                betas.end());
    return betas;
}

Observable energy_observable() {
    return {"energy", false,
            [](std::span<const std::int8_t> s, std::span<const std::int8_t>,
               const CouplingTable& t) { return t.energy(s); }};
}

Observable sigma_observable(std::vector<std::uint32_t> sites) {
    std::string name = "sigma";
    for (auto s : sites) name += "_" + std::to_string(s);
    return {name, false,
            [sites = std::move(sites)](std::span<const std::int8_t> s,
                                       std::span<const std::int8_t>, const CouplingTable&) {
                return spin_product(s, sites);
            }};
}

Observable magnetization_observable(const CouplingFamily& family, int power) {
    if (power != 1 && power != 2)
        throw std::invalid_argument("magnetization_observable: power must be 1 or 2");
    std::string name = "m" + std::to_string(family.p) + (power == 2 ? "_sq" : "");
    return {name, false,
            [family, power](std::span<const std::int8_t> s, std::span<const std::int8_t>,
                            const CouplingTable&) {
                double m = family_magnetization(s, family);
                return power == 2 ? m * m : m;
            }};
}

Observable overlap_observable(const CouplingFamily& family, int power) {
    if (power != 1 && power != 2)
        throw std::invalid_argument("overlap_observable: power must be 1 or 2");
    std::string name = "R" + std::to_string(family.p) + (power == 2 ? "_sq" : "");
    return {name, true,
            [family, power](std::span<const std::int8_t> a, std::span<const std::int8_t> b,
                            const CouplingTable&) {
                double r = family_overlap(a, b, family);
                return power == 2 ? r * r : r;
            }};
}

TemperingSampler::TemperingSampler(const CouplingTable& table, std::vector<double> betas,
                                   std::uint64_t seed, std::uint64_t realization_index)
    : table_(table), betas_(std::move(betas)), swap_rng_(seed, swap_stream(realization_index)) {
    if (betas_.empty()) throw std::invalid_argument("TemperingSampler: empty ladder");
    if (!std::is_sorted(betas_.begin(), betas_.end()))
        throw std::invalid_argument("TemperingSampler: ladder must be ascending");
    if (betas_.size() > 31) throw std::invalid_argument("TemperingSampler: ladder too long");
    for (std::size_t r = 0; r < betas_.size(); ++r) {
        lineage_a_.emplace_back(table, seed, chain_stream(realization_index, 0, r));
        lineage_b_.emplace_back(table, seed, chain_stream(realization_index, 1, r));
    }
}

std::size_t TemperingSampler::beta_index(double beta) const {
    for (std::size_t r = 0; r < betas_.size(); ++r)
        if (std::abs(betas_[r] - beta) <= 1e-12) return r;
    throw std::invalid_argument("TemperingSampler: beta not on the ladder");
}

void TemperingSampler::sweep_all(bool enable_swaps) {
    for (std::size_t r = 0; r < betas_.size(); ++r) {
        metropolis_sweep(lineage_a_[r], table_, betas_[r]);
        metropolis_sweep(lineage_b_[r], table_, betas_[r]);
    }
    ++sweeps_done_;

    if (enable_swaps && betas_.size() > 1) {
        // Alternate even/odd adjacent pairs; both lineages swap independently.
        std::size_t start = sweeps_done_ % 2;
        for (auto* lineage : {&lineage_a_, &lineage_b_}) {
            for (std::size_t r = start; r + 1 < betas_.size(); r += 2) {
                ChainState& low = (*lineage)[r];
                ChainState& high = (*lineage)[r + 1];
                double delta = (betas_[r] - betas_[r + 1]) * (low.energy - high.energy);
                ++swap_attempts_;
                double u = swap_rng_.next_uniform();
                if (delta >= 0.0 || u < std::exp(delta)) {
                    std::swap(low.spins, high.spins);
                    std::swap(low.energy, high.energy);
                    ++swap_accepts_;
                }
            }
        }
    }

    if (sweeps_done_ % kDriftCheckInterval == 0) {
        for (auto* lineage : {&lineage_a_, &lineage_b_}) {
            for (auto& chain : *lineage) {
                double exact = table_.energy(chain.spins);
                max_drift_ = std::max(max_drift_, std::abs(exact - chain.energy));
                chain.energy = exact;
            }
        }
    }
}

std::vector<McmcEstimate> TemperingSampler::run(const Schedule& schedule,
                                                std::span<const Request> requests,
                                                bool enable_swaps) {
    for (std::uint64_t s = 0; s < schedule.burn_in; ++s) sweep_all(enable_swaps);

    const std::uint32_t thin = std::max<std::uint32_t>(1, schedule.thinning);
    std::vector<std::vector<double>> series(requests.size());
    for (auto& v : series) v.reserve(schedule.sweeps / thin + 1);

    for (std::uint64_t s = 0; s < schedule.sweeps; ++s) {
        sweep_all(enable_swaps);
        if (s % thin != 0) continue;
        for (std::size_t q = 0; q < requests.size(); ++q) {
            const auto& req = requests[q];
            const ChainState& a = lineage_a_[req.beta_index];
            const ChainState& b = lineage_b_[req.beta_index];
            if (req.observable.two_replica) {
                series[q].push_back(req.observable.eval(a.spins, b.spins, table_));
            } else {
                // Average the two independent lineages; halves the variance.
                double va = req.observable.eval(a.spins, b.spins, table_);
                double vb = req.observable.eval(b.spins, a.spins, table_);
                series[q].push_back(0.5 * (va + vb));
            }
        }
    }

    std::vector<McmcEstimate> out(requests.size());
    for (std::size_t q = 0; q < requests.size(); ++q) {
        const auto& xs = series[q];
        McmcEstimate est;
        est.n_samples = xs.size();
        auto ms = mean_stderr(xs);
        est.value = ms.mean;
        est.tau_int = integrated_autocorrelation_time(xs);
        // var(mean) = sigma^2 / n * 2 tau_int
        est.std_error = ms.stderr_ * std::sqrt(2.0 * est.tau_int);
        est.converged = est.tau_int <= static_cast<double>(schedule.sweeps) / 50.0;
        out[q] = est;
    }
    return out;
}

double TemperingSampler::swap_acceptance() const {
    return swap_attempts_ == 0
               ? 0.0
               : static_cast<double>(swap_accepts_) / static_cast<double>(swap_attempts_);
}

}  // namespace nishilab
