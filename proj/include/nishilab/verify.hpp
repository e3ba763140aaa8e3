#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nishilab/disorder_avg.hpp"
#include "nishilab/systems.hpp"

namespace nishilab {

struct CheckReport {
    enum class Verdict { pass, fail, inconclusive };

    std::string name;
    double value = 0.0;       // measured quantity (lhs / residual)
    double reference = 0.0;   // bound or target (0 for pure residual checks)
    double sigma = 0.0;       // combined standard error; 0 => absolute-tolerance mode
    double tolerance = 0.0;   // absolute tolerance when sigma == 0
    double margin_sigma = 0.0;  // slack in sigma units (positive = comfortable)
    Verdict verdict = Verdict::pass;
    nlohmann::json inputs;
    nlohmann::json details;

    bool passed() const { return verdict != Verdict::fail; }
};

std::string verdict_name(CheckReport::Verdict v);
nlohmann::json check_to_json(const CheckReport& report);
std::string check_table_header();
std::string check_table_row(const CheckReport& report);

struct CheckContext {
    Engine engine = Engine::exact;
    EngineSettings settings;
    std::uint64_t n = 10000;
    std::uint64_t seed = 1;
    unsigned workers = 0;
};

// E<H> = -sum_p |B_p| mu_p (per-coupling means) on the Nishimori manifold.
CheckReport check_internal_energy_nm(const ModelSystem& system, const CheckContext& ctx);

// The three NM correlation identities (one-point, mixed, two-point) as
// residuals on common random numbers; one report per residual.
std::vector<CheckReport> check_nm_identities(const ModelSystem& system,
                                             std::span<const std::uint32_t> x_sites,
                                             std::span<const std::uint32_t> y_sites,
                                             const CheckContext& ctx);

// E<(m^1)^2>_beta <= sqrt(E<(m^1)^2>_betaN).
CheckReport check_m2_bound(const ModelSystem& system, const CheckContext& ctx);

// |E<m^1>_beta| <= sqrt(E<m^1>_betaN) on the field ray delta1 = sqrt(mu1/betaN),
// plus a mu1 sweep table for trend reporting.
CheckReport check_spontaneous_magnetization(const ModelSystem& system, const CheckContext& ctx,
                                            std::span<const double> mu1_sweep = {});

// sum_Y [E(<sX sY> - <sX><sY>)]^2 <= (beta delta_p)^-2.
CheckReport check_truncated_k1(const ModelSystem& system, int family_index,
                               std::size_t x_range_index, const CheckContext& ctx);

// k=3 combination bound (3/2)(betaN delta_p)^-6 plus its NM reduction.
CheckReport check_k3_combination(const ModelSystem& system, int family_index,
                                 std::size_t x_range_index, const CheckContext& ctx);

// Factory for size-indexed systems in trend checks.
struct SystemFactory {
    std::string name;
    std::function<ModelSystem(int)> make;
};

// |E<R12 R13> - (E<R12>)^2/2 - E<R12^2>/2| along a size list; the residual
// magnitude must be non-increasing within 4 sigma per step.
std::vector<CheckReport> acgg_residual(const SystemFactory& factory, std::span<const int> sizes,
                                       int p, const CheckContext& ctx);

// |2 total_var(R) / (3 thermal_var(R)) - 1| along a size list.
std::vector<CheckReport> check_variance_ratio(const SystemFactory& factory,
                                              std::span<const int> sizes, int p,
                                              const CheckContext& ctx);

// Thermal variance of m^p against the bound 1/(beta delta_p sqrt(|B_p|)).
CheckReport check_m_variance_bound(const ModelSystem& system, int family_index,
                                   const CheckContext& ctx);

}  // namespace nishilab
