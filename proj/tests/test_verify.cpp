#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "nishilab/verify.hpp"

using namespace nishilab;

namespace {

CheckContext ctx_exact(std::uint64_t n, std::uint64_t seed = 1) {
    CheckContext ctx;
    ctx.engine = Engine::exact;
    ctx.n = n;
    ctx.seed = seed;
    return ctx;
}

CheckContext ctx_quadrature() {
    CheckContext ctx;
    ctx.engine = Engine::quadrature;
    return ctx;
}

}  // namespace

TEST_CASE("internal energy on the NM") {
    // 3x3 EA at the canonical NM point: E<H> = -12 * 0.5 = -6.
    auto ea = make_ea_system(2, 3, 0.5, Species{2, 1.0, 0.5});
    auto r = check_internal_energy_nm(ea, ctx_exact(2000));
    CHECK(r.verdict == CheckReport::Verdict::pass);
    CHECK(r.reference == doctest::Approx(-6.0).epsilon(1e-14));

    // 2-site chain by quadrature: residual within 1e-10.
    auto chain = make_ea_system(1, 2, 0.5, Species{2, 1.0, 0.5});
    auto rq = check_internal_energy_nm(chain, ctx_quadrature());
    CHECK(rq.verdict == CheckReport::Verdict::pass);
    CHECK(std::abs(rq.value) <= 1e-10);

    // SK N=8: target -C(8,2) mu2 / 8 = -3.5 mu2.
    auto sk = make_sk_system(8, 0.5, Species{2, 1.0, 0.5});
    auto rs = check_internal_energy_nm(sk, ctx_exact(2000));
    CHECK(rs.reference == doctest::Approx(-3.5 * 0.5).epsilon(1e-12));
    CHECK(rs.verdict == CheckReport::Verdict::pass);

    auto off = make_ea_system(2, 3, 0.7, Species{2, 1.0, 0.5});
    CHECK_THROWS_AS(check_internal_energy_nm(off, ctx_exact(10)), std::invalid_argument);
}

TEST_CASE("NM identities by quadrature on the 2-site chain") {
    std::uint32_t x[2] = {0, 1};
    for (double factor : {0.5, 1.0, 2.0}) {
        auto chain = make_ea_system(1, 2, factor * 0.5, Species{2, 1.0, 0.5});
        auto reports = check_nm_identities(chain, x, x, ctx_quadrature());
        REQUIRE(reports.size() == 3);
        for (const auto& r : reports) {
            CAPTURE(factor);
            CAPTURE(r.name);
            CHECK(r.verdict == CheckReport::Verdict::pass);
            CHECK(std::abs(r.value) <= 1e-8);
        }
    }
}

TEST_CASE("NM identities by quadrature on the 3-site chain (distinct X, Y)") {
    std::uint32_t x[2] = {0, 1}, y[2] = {1, 2};
    auto chain = make_ea_system(1, 3, 1.0, Species{2, 1.0, 0.5});  // beta = 2 betaN
    auto reports = check_nm_identities(chain, x, y, ctx_quadrature());
    for (const auto& r : reports) {
        CHECK(r.verdict == CheckReport::Verdict::pass);
        CHECK(std::abs(r.value) <= 1e-8);
    }
}

TEST_CASE("NM identities at beta = 0 are trivially zero") {
    std::uint32_t x[2] = {0, 1};
    auto chain = make_ea_system(1, 2, 0.0, Species{2, 1.0, 0.5});
    auto reports = check_nm_identities(chain, x, x, ctx_exact(50));
    CHECK(std::abs(reports[0].value) <= 1e-13);
    CHECK(reports[0].verdict == CheckReport::Verdict::pass);
}

TEST_CASE("NM identities by sampling on the 3x3 EA model") {
    auto ea = make_ea_system(2, 3, 0.7, Species{2, 1.0, 0.5});
    std::uint32_t x[2] = {0, 1}, y[2] = {1, 2};
    auto reports = check_nm_identities(ea, x, y, ctx_exact(2000));
    for (const auto& r : reports) {
        CAPTURE(r.name);
        CHECK(r.verdict == CheckReport::Verdict::pass);
    }
}

TEST_CASE("squared magnetization bound against its NM value") {
    // At beta = betaN the bound reduces to x <= sqrt(x) on [0,1].
    auto nm = make_ea_system(2, 3, 0.5, Species{2, 1.0, 0.5});
    auto r0 = check_m2_bound(nm, ctx_exact(500));
    CHECK(r0.verdict == CheckReport::Verdict::pass);
    CHECK(r0.value <= r0.reference + 4.0 * r0.sigma);

    auto above = make_ea_system(2, 3, 0.75, Species{2, 1.0, 0.5});  // 1.5 betaN
    auto r1 = check_m2_bound(above, ctx_exact(1000));
    CHECK(r1.verdict == CheckReport::Verdict::pass);
}

TEST_CASE("spontaneous magnetization bound on the NM field ray") {
    // Exact Z2 symmetry at mu1 = 0 with even couplings: E<m1> = 0.
    auto even = make_ea_system(2, 3, 0.6, Species{2, 1.0, 0.5});
    ObservableSpec m1;
    m1.kind = ObservableSpec::Kind::magnetization;
    m1.family_index = 0;
    EngineSettings settings;
    auto est = quenched_average(even, m1, 100, 2, Engine::exact, settings, 0);
    CHECK(std::abs(est.mean) <= 1e-12);

    // 2-site chain with the NM-ray field, by quadrature (3 couplings).
    double beta_n = 0.5, mu1 = 0.2;
    auto chain = make_ea_system(1, 2, 2.0 * beta_n, Species{2, 1.0, 0.5},
                                Species{1, std::sqrt(mu1 / beta_n), mu1});
    auto rq = check_spontaneous_magnetization(chain, ctx_quadrature());
    CHECK(rq.verdict == CheckReport::Verdict::pass);
    CHECK(rq.value <= rq.reference + 1e-8);

    // 3x3 EA with field mu1 = 0.2 at beta = 1.4 betaN.
    auto ea = make_ea_system(2, 3, 1.4 * beta_n, Species{2, 1.0, 0.5},
                             Species{1, std::sqrt(mu1 / beta_n), mu1});
    double sweep[2] = {0.2, 0.1};
    auto rs = check_spontaneous_magnetization(ea, ctx_exact(1000), sweep);
    CHECK(rs.verdict == CheckReport::Verdict::pass);
    CHECK(rs.details.at("mu1_sweep").size() == 2);

    // Off-ray field is rejected.
    auto bad = make_ea_system(2, 3, 0.6, Species{2, 1.0, 0.5}, Species{1, 1.0, 0.2});
    CHECK_THROWS_AS(check_spontaneous_magnetization(bad, ctx_exact(10)), std::invalid_argument);
}

TEST_CASE("truncated k=1 bound") {
    // Tiny beta: the left side is ~0 against a huge bound.
    auto cold = make_ea_system(2, 3, 0.01, Species{2, 1.0, 0.0});
    auto r0 = check_truncated_k1(cold, 1, 0, ctx_exact(200));
    CHECK(r0.verdict == CheckReport::Verdict::pass);

    auto ea = make_ea_system(2, 3, 0.5, Species{2, 1.0, 0.5});
    auto r1 = check_truncated_k1(ea, 1, 0, ctx_exact(1000));
    CHECK(r1.verdict == CheckReport::Verdict::pass);
    CHECK(r1.reference == doctest::Approx(4.0).epsilon(1e-12));  // (0.5*1)^-2

    auto chain = make_ea_system(1, 8, 1.0, Species{2, 0.5, 0.1});
    auto r2 = check_truncated_k1(chain, 1, 2, ctx_exact(1000));
    CHECK(r2.verdict == CheckReport::Verdict::pass);
    CHECK(r2.reference == doctest::Approx(4.0).epsilon(1e-12));  // (1*0.5)^-2

    auto degenerate = make_ea_system(2, 3, 0.5, Species{2, 0.0, 1.0});
    CHECK_THROWS_AS(check_truncated_k1(degenerate, 1, 0, ctx_exact(10)), std::invalid_argument);
}

TEST_CASE("k=3 combination bound and NM reduction") {
    // Small betaN: the bound (3/2)(betaN delta)^-6 is enormous.
    auto weak = make_ea_system(2, 3, 0.1, Species{2, 1.0, 0.1});
    auto r0 = check_k3_combination(weak, 1, 0, ctx_exact(500));
    CHECK(r0.verdict == CheckReport::Verdict::pass);

    auto ea = make_ea_system(2, 3, 0.5, Species{2, 1.0, 0.5});
    auto r1 = check_k3_combination(ea, 1, 0, ctx_exact(2000));
    CHECK(r1.verdict == CheckReport::Verdict::pass);
    CHECK(r1.reference == doctest::Approx(1.5 * std::pow(0.5, -6.0)).epsilon(1e-12));

    // 2-site quadrature version: bound slack and reduction both ~1e-8 tight.
    auto chain = make_ea_system(1, 2, 0.5, Species{2, 1.0, 0.5});
    auto rq = check_k3_combination(chain, 1, 0, ctx_quadrature());
    CHECK(rq.verdict == CheckReport::Verdict::pass);
    CHECK(rq.details.at("nm_reduction_worst_abs").get<double>() <= 1e-8);

    auto off = make_ea_system(2, 3, 0.7, Species{2, 1.0, 0.5});
    CHECK_THROWS_AS(check_k3_combination(off, 1, 0, ctx_exact(10)), std::invalid_argument);
}

TEST_CASE("ACGG residual: beta = 0 closed form and trend") {
    // At beta = 0 the residual is exactly -1/(2 |B_p|), decreasing with L.
    SystemFactory ea_beta0{"ea_beta0", [](int size) {
                               return make_ea_system(2, size, 0.0, Species{2, 1.0, 0.0});
                           }};
    int sizes[3] = {2, 3, 4};
    auto reports = acgg_residual(ea_beta0, sizes, 2, ctx_exact(10));
    REQUIRE(reports.size() == 3);
    double expected[3] = {-1.0 / (2.0 * 4), -1.0 / (2.0 * 12), -1.0 / (2.0 * 24)};
    for (int k = 0; k < 3; ++k) {
        CHECK(reports[k].value == doctest::Approx(expected[k]).epsilon(1e-12));
        CHECK(reports[k].verdict == CheckReport::Verdict::pass);
    }

    // Degenerate disorder: residual matches the single-realization formula.
    SystemFactory ferro{"ferro", [](int size) {
                            return make_ea_system(2, size, 0.3, Species{2, 0.0, 1.0});
                        }};
    int two[1] = {2};
    auto fr = acgg_residual(ferro, two, 2, ctx_exact(5));
    auto system = ferro.make(2);
    auto d = sample_disorder(system.params, system.families, 4, 1, 0);
    ExactGibbs g(d, system.families, 0.3, 4);
    auto om = g.overlap_moments(system.families[1]);
    CHECK(fr[0].value == doctest::Approx(om.r12r13 - 0.5 * om.r * om.r - 0.5 * om.r2)
                             .epsilon(1e-12));
}

TEST_CASE("ACGG residual trend on the NM") {
    SystemFactory ea{"ea", [](int size) {
                         return make_ea_system(2, size, 0.5, Species{2, 1.0, 0.5});
                     }};
    int sizes[2] = {2, 3};
    auto reports = acgg_residual(ea, sizes, 2, ctx_exact(2000));
    for (const auto& r : reports) CHECK(r.verdict != CheckReport::Verdict::fail);
}

TEST_CASE("variance relation: frozen degenerate disorder is inconclusive") {
    // delta = 0 at large beta mu: the overlap is pinned at 1 and both
    // variances are exactly at noise level.
    SystemFactory ferro{"ferro", [](int size) {
                            return make_ea_system(2, size, 20.0, Species{2, 0.0, 1.0});
                        }};
    int sizes[2] = {2, 3};
    auto reports = check_variance_ratio(ferro, sizes, 2, ctx_exact(50));
    for (const auto& r : reports) CHECK(r.verdict == CheckReport::Verdict::inconclusive);
}

TEST_CASE("variance relation trend on the EA NM point") {
    SystemFactory ea{"ea", [](int size) {
                         return make_ea_system(2, size, 0.5, Species{2, 1.0, 0.5});
                     }};
    int sizes[2] = {2, 3};
    auto reports = check_variance_ratio(ea, sizes, 2, ctx_exact(2000));
    REQUIRE(reports.size() == 2);
    for (const auto& r : reports) {
        CHECK(r.verdict != CheckReport::Verdict::fail);
        CHECK(r.details.contains("ratio"));
    }
}

TEST_CASE("thermal variance bound report") {
    auto ea = make_ea_system(2, 3, 0.5, Species{2, 1.0, 0.5});
    auto r = check_m_variance_bound(ea, 1, ctx_exact(1000));
    CHECK(r.verdict == CheckReport::Verdict::pass);
    CHECK(r.reference == doctest::Approx(1.0 / (0.5 * std::sqrt(12.0))).epsilon(1e-12));
}

TEST_CASE("reports are reproducible bit for bit from their inputs") {
    auto ea = make_ea_system(2, 3, 0.5, Species{2, 1.0, 0.5});
    auto a = check_internal_energy_nm(ea, ctx_exact(500, 42));
    auto b = check_internal_energy_nm(ea, ctx_exact(500, 42));
    CHECK(check_to_json(a).dump() == check_to_json(b).dump());
    auto c = check_internal_energy_nm(ea, ctx_exact(500, 43));
    CHECK(check_to_json(a).dump() != check_to_json(c).dump());
}

TEST_CASE("report serialization carries the table fields") {
    auto ea = make_ea_system(2, 3, 0.5, Species{2, 1.0, 0.5});
    auto r = check_internal_energy_nm(ea, ctx_exact(200));
    auto j = check_to_json(r);
    for (const char* key : {"check", "value", "reference", "margin_sigma", "verdict", "inputs"})
        CHECK(j.contains(key));
    CHECK(j.at("inputs").contains("seed"));
    auto row = check_table_row(r);
    CHECK(row.find("pass") != std::string::npos);
}
