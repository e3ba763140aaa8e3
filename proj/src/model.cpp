#include "nishilab/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "nishilab/kernels.hpp"
#include "nishilab/rng.hpp"
#include "nishilab/stats.hpp"

namespace nishilab {

namespace {

bool ratio_matches(double beta, double delta, double mu, double rel_tol) {
    double lhs = beta * delta * delta;
    double diff = std::abs(lhs - mu);
    double scale = std::max(std::abs(lhs), std::abs(mu));
    return diff <= rel_tol * scale || diff == 0.0;
}

}  // namespace

bool ModelParameters::on_nishimori(double rel_tol) const {
    for (const auto& s : species) {
        if (s.delta <= 0.0) continue;
        if (!ratio_matches(beta, s.delta, s.mu, rel_tol)) return false;
    }
    return true;
}

double nishimori_beta(const ModelParameters& params, double rel_tol) {
    bool have = false;
    double ratio = 0.0;
    int first_p = 0;
    for (const auto& s : params.species) {
        if (s.delta <= 0.0) continue;
        double r = s.mu / (s.delta * s.delta);
        if (!have) {
            ratio = r;
            first_p = s.p;
            have = true;
            continue;
        }
        double diff = std::abs(r - ratio);
        double scale = std::max(std::abs(r), std::abs(ratio));
        if (diff > rel_tol * scale && diff != 0.0)
            throw std::invalid_argument(
                "nishimori_beta: inconsistent mu/delta^2 between species p=" +
                std::to_string(first_p) + " and p=" + std::to_string(s.p));
    }
    if (!have)
        throw std::invalid_argument("nishimori_beta: every species has delta = 0");
    return ratio;
}

double coupling_mean(const Species& s, LatticeKind kind, std::uint64_t n_sites) {
    if (kind == LatticeKind::mean_field)
        return std::pow(static_cast<double>(n_sites), 1.0 - s.p) * s.mu;
    return s.mu;
}

double coupling_stddev(const Species& s, LatticeKind kind, std::uint64_t n_sites) {
    if (kind == LatticeKind::mean_field)
        return std::pow(static_cast<double>(n_sites), (1.0 - s.p) / 2.0) * s.delta;
    return s.delta;
}

DisorderRealization sample_disorder(const ModelParameters& params,
                                    const std::vector<CouplingFamily>& families,
                                    std::uint64_t n_sites, std::uint64_t seed,
                                    std::uint64_t realization_index) {
    if (params.species.size() != families.size())
        throw std::invalid_argument("sample_disorder: species/family count mismatch");
    DisorderRealization d;
    d.seed = seed;
    d.index = realization_index;
    d.species.reserve(params.species.size());
    for (std::size_t k = 0; k < params.species.size(); ++k) {
        const Species& sp = params.species[k];
        const CouplingFamily& fam = families[k];
        if (sp.p != fam.p)
            throw std::invalid_argument("sample_disorder: species p does not match family p");
        double mean = coupling_mean(sp, params.lattice_kind, n_sites);
        double sd = coupling_stddev(sp, params.lattice_kind, n_sites);
        DisorderRealization::SpeciesCouplings out;
        out.p = sp.p;
        out.values.resize(fam.size());
        for (std::size_t r = 0; r < fam.size(); ++r) {
            double g = sd > 0.0 ? keyed_standard_normal(seed, realization_index,
                                                        static_cast<std::uint32_t>(sp.p),
                                                        static_cast<std::uint32_t>(r))
                                : 0.0;
            out.values[r] = sd * g + mean;
        }
        d.species.push_back(std::move(out));
    }
    return d;
}

double hamiltonian(std::span<const std::int8_t> spins, const DisorderRealization& disorder,
                   const std::vector<CouplingFamily>& families) {
    if (disorder.species.size() != families.size())
        throw std::invalid_argument("hamiltonian: disorder/family count mismatch");
    KahanSum h;
    for (std::size_t k = 0; k < families.size(); ++k) {
        const auto& fam = families[k];
        const auto& vals = disorder.species[k].values;
        if (vals.size() != fam.size())
            throw std::invalid_argument("hamiltonian: coupling vector length mismatch");
        for (std::size_t r = 0; r < fam.size(); ++r) {
            int sign = 1;
            for (std::uint32_t site : fam.ranges[r]) sign *= spins[site];
            h.add(-vals[r] * sign);
        }
    }
    return h.value();
}

DisorderRealization gauge_transform(const DisorderRealization& disorder,
                                    const GaugeConfiguration& tau,
                                    const std::vector<CouplingFamily>& families) {
    DisorderRealization out = disorder;
    for (std::size_t k = 0; k < families.size(); ++k) {
        const auto& fam = families[k];
        auto& vals = out.species[k].values;
        for (std::size_t r = 0; r < fam.size(); ++r) {
            int sign = 1;
            for (std::uint32_t site : fam.ranges[r]) sign *= tau.tau[site];
            vals[r] *= sign;
        }
    }
    return out;
}

double gauge_log_weight(const DisorderRealization& disorder, const GaugeConfiguration& tau,
                        const ModelParameters& params,
                        const std::vector<CouplingFamily>& families, std::uint64_t n_sites) {
    KahanSum w;
    for (std::size_t k = 0; k < families.size(); ++k) {
        const Species& sp = params.species[k];
        double mean = coupling_mean(sp, params.lattice_kind, n_sites);
        double sd = coupling_stddev(sp, params.lattice_kind, n_sites);
        if (sd == 0.0) {
            if (mean == 0.0) continue;  // inert species, no density
            throw std::invalid_argument(
                "gauge_log_weight: delta = 0 with mu > 0 has a degenerate density");
        }
        double ratio = mean / (sd * sd);
        const auto& fam = families[k];
        const auto& vals = disorder.species[k].values;
        for (std::size_t r = 0; r < fam.size(); ++r) {
            int sign = 1;
            for (std::uint32_t site : fam.ranges[r]) sign *= tau.tau[site];
            w.add(ratio * vals[r] * sign);
        }
    }
    return w.value();
}

nlohmann::json disorder_to_json(const DisorderRealization& d) {
    nlohmann::json j;
    j["seed"] = d.seed;
    j["index"] = d.index;
    j["species"] = nlohmann::json::array();
    for (const auto& s : d.species) j["species"].push_back({{"p", s.p}, {"J", s.values}});
    return j;
}

DisorderRealization disorder_from_json(const nlohmann::json& j) {
    DisorderRealization d;
    d.seed = j.at("seed").get<std::uint64_t>();
    d.index = j.at("index").get<std::uint64_t>();
    for (const auto& s : j.at("species")) {
        DisorderRealization::SpeciesCouplings sc;
        sc.p = s.at("p").get<int>();
        sc.values = s.at("J").get<std::vector<double>>();
        d.species.push_back(std::move(sc));
    }
    return d;
}

CouplingTable CouplingTable::build(const DisorderRealization& disorder,
                                   const std::vector<CouplingFamily>& families,
                                   std::uint64_t n_sites) {
    if (disorder.species.size() != families.size())
        throw std::invalid_argument("CouplingTable: disorder/family count mismatch");
    CouplingTable t;
    t.n_sites = static_cast<std::uint32_t>(n_sites);
    t.range_offsets.push_back(0);
    bool with_masks = n_sites <= 64;
    for (std::size_t k = 0; k < families.size(); ++k) {
        const auto& fam = families[k];
        const auto& vals = disorder.species[k].values;
        if (vals.size() != fam.size())
            throw std::invalid_argument("CouplingTable: coupling vector length mismatch");
        t.species_offsets.push_back(t.values.size());
        for (std::size_t r = 0; r < fam.size(); ++r) {
            t.values.push_back(vals[r]);
            std::uint64_t mask = 0;
            for (std::uint32_t site : fam.ranges[r]) {
                if (site >= n_sites)
                    throw std::invalid_argument("CouplingTable: site index out of range");
                t.range_sites.push_back(site);
                if (with_masks) mask |= std::uint64_t{1} << site;
            }
            t.masks.push_back(mask);
            t.range_offsets.push_back(static_cast<std::uint32_t>(t.range_sites.size()));
        }
    }
    t.species_offsets.push_back(t.values.size());

    std::vector<std::uint32_t> degree(n_sites, 0);
    for (std::uint32_t s : t.range_sites) ++degree[s];
    t.site_offsets.assign(n_sites + 1, 0);
    for (std::uint64_t s = 0; s < n_sites; ++s) t.site_offsets[s + 1] = t.site_offsets[s] + degree[s];
    t.site_couplings.resize(t.range_sites.size());
    std::vector<std::uint32_t> cursor(t.site_offsets.begin(), t.site_offsets.end() - 1);
    for (std::size_t c = 0; c < t.values.size(); ++c)
        for (std::uint32_t i = t.range_offsets[c]; i < t.range_offsets[c + 1]; ++i)
            t.site_couplings[cursor[t.range_sites[i]]++] = static_cast<std::uint32_t>(c);
    return t;
}

double CouplingTable::energy(std::span<const std::int8_t> spins) const {
    if (n_sites <= 64) {
        std::uint64_t bits = 0;
        for (std::uint32_t s = 0; s < n_sites; ++s)
            if (spins[s] < 0) bits |= std::uint64_t{1} << s;
        return -kernels::parity_signed_sum(values, masks, bits);
    }
    KahanSum h;
    for (std::size_t c = 0; c < values.size(); ++c) {
        int sign = 1;
        for (std::uint32_t i = range_offsets[c]; i < range_offsets[c + 1]; ++i)
            sign *= spins[range_sites[i]];
        h.add(-values[c] * sign);
    }
    return h.value();
}

double CouplingTable::flip_delta(std::span<const std::int8_t> spins, std::uint32_t site) const {
    // H = -sum J s_X; flipping one spin negates s_X on every touching range.
    double local = 0.0;
    for (std::uint32_t i = site_offsets[site]; i < site_offsets[site + 1]; ++i) {
        std::uint32_t c = site_couplings[i];
        int sign = 1;
        for (std::uint32_t k = range_offsets[c]; k < range_offsets[c + 1]; ++k)
            sign *= spins[range_sites[k]];
        local += values[c] * sign;
    }
    return 2.0 * local;
}

}  // namespace nishilab
