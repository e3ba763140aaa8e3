#include "nishilab/studies.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "nishilab/stats.hpp"

namespace nishilab {

namespace {

std::string csv_num(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

CheckContext make_context(const ExperimentConfig& config) {
    CheckContext ctx;
    ctx.engine = config.engine;
    ctx.settings = config.settings;
    ctx.n = config.n_realizations;
    ctx.seed = config.seed;
    ctx.workers = config.workers;
    return ctx;
}

double study_beta(const ExperimentConfig& config, const CheckSpec& spec) {
    if (spec.beta_factor) return *spec.beta_factor * config.beta_nishimori_of_bond();
    return config.beta;
}

void run_one_check(const ExperimentConfig& config, const CheckSpec& spec,
                   std::vector<CheckReport>& reports) {
    CheckContext ctx = make_context(config);

    if (spec.check == "internal_energy_nm") {
        ModelSystem system = config.make_system(config.beta_nishimori_of_bond());
        reports.push_back(check_internal_energy_nm(system, ctx));
        return;
    }
    if (spec.check == "nm_identities") {
        ModelSystem system = config.make_system(study_beta(config, spec));
        auto rs = check_nm_identities(system, spec.x_sites, spec.y_sites, ctx);
        double factor = spec.beta_factor.value_or(0.0);
        for (auto& r : rs) {
            if (spec.beta_factor)
                r.name += "[beta=" + csv_num(factor) + "beta_N]";
            reports.push_back(std::move(r));
        }
        return;
    }
    if (spec.check == "m2_bound") {
        ModelSystem system = config.make_system(study_beta(config, spec));
        auto r = check_m2_bound(system, ctx);
        if (spec.beta_factor) r.name += "[beta=" + csv_num(*spec.beta_factor) + "beta_N]";
        reports.push_back(std::move(r));
        return;
    }
    if (spec.check == "spontaneous_magnetization") {
        ModelSystem system = config.make_system(study_beta(config, spec));
        auto r = check_spontaneous_magnetization(system, ctx, config.mu1_sweep);
        if (spec.beta_factor) r.name += "[beta=" + csv_num(*spec.beta_factor) + "beta_N]";
        reports.push_back(std::move(r));
        return;
    }
    if (spec.check == "truncated_k1") {
        ModelSystem system = config.make_system(study_beta(config, spec));
        reports.push_back(check_truncated_k1(
            system, static_cast<int>(system.family_index_for_p(2)), spec.x_index, ctx));
        return;
    }
    if (spec.check == "k3_combination") {
        ModelSystem system = config.make_system(config.beta_nishimori_of_bond());
        reports.push_back(check_k3_combination(
            system, static_cast<int>(system.family_index_for_p(2)), spec.x_index, ctx));
        return;
    }
    if (spec.check == "acgg" || spec.check == "variance_ratio") {
        SystemFactory factory;
        factory.name = config.model_type;
        double beta = config.beta_nishimori_of_bond();
        factory.make = [&config, beta](int size) {
            return config.make_system_sized(size, beta);
        };
        auto sizes = spec.sizes.empty() ? std::vector<int>{2, 3, 4} : spec.sizes;
        auto rs = spec.check == "acgg" ? acgg_residual(factory, sizes, 2, make_context(config))
                                       : check_variance_ratio(factory, sizes, 2,
                                                                    make_context(config));
        for (auto& r : rs) reports.push_back(std::move(r));
        return;
    }
    if (spec.check == "m_variance_bound") {
        auto sizes = spec.sizes.empty() ? std::vector<int>{config.side} : spec.sizes;
        for (int size : sizes) {
            ModelSystem system = config.make_system_sized(size, study_beta(config, spec));
            auto r = check_m_variance_bound(
                system, static_cast<int>(system.family_index_for_p(2)), ctx);
            r.name += "[" + std::to_string(size) + "]";
            reports.push_back(std::move(r));
        }
        return;
    }
    throw config_error("unknown check: " + spec.check);
}

void run_scaling(const ExperimentConfig& config, RunOutcome& out) {
    const ScalingSpec& spec = *config.scaling;
    CheckContext ctx = make_context(config);
    double beta_n = config.beta_nishimori_of_bond();

    std::vector<double> log_nb, log_thermal_m;
    nlohmann::json sizes_json = nlohmann::json::array();
    out.csv_lines.push_back(
        "study,size,family_size,thermal_var_m,thermal_var_m_stderr,total_var_m,"
        "thermal_var_R,thermal_var_R_stderr,total_var_R,bound");
    for (int size : spec.sizes) {
        ModelSystem system = config.make_system_sized(size, beta_n);
        int family_index = static_cast<int>(system.family_index_for_p(spec.p));
        VariancePair vm = variance_pair(system, VarianceObservable::magnetization, family_index,
                                        ctx.n, ctx.seed, ctx.engine, ctx.settings, ctx.workers);
        VariancePair vr = variance_pair(system, VarianceObservable::overlap, family_index, ctx.n,
                                        ctx.seed, ctx.engine, ctx.settings, ctx.workers);
        const auto& family = system.families[family_index];
        double sd = coupling_stddev(system.params.species[family_index],
                                    system.params.lattice_kind, system.n_sites());
        double bound = 1.0 / (beta_n * sd * std::sqrt(static_cast<double>(family.size())));

        nlohmann::json row = {{"size", size},
                              {"family_size", family.size()},
                              {"thermal_var_m", vm.thermal.mean},
                              {"thermal_var_m_stderr", vm.thermal.std_error},
                              {"total_var_m", vm.total.mean},
                              {"thermal_var_R", vr.thermal.mean},
                              {"thermal_var_R_stderr", vr.thermal.std_error},
                              {"total_var_R", vr.total.mean},
                              {"variance_bound", bound}};
        sizes_json.push_back(row);
        out.csv_lines.push_back("scaling," + std::to_string(size) + "," +
                                std::to_string(family.size()) + "," + csv_num(vm.thermal.mean) +
                                "," + csv_num(vm.thermal.std_error) + "," +
                                csv_num(vm.total.mean) + "," + csv_num(vr.thermal.mean) + "," +
                                csv_num(vr.thermal.std_error) + "," + csv_num(vr.total.mean) +
                                "," + csv_num(bound));
        if (vm.thermal.mean > 0.0) {
            log_nb.push_back(std::log(static_cast<double>(family.size())));
            log_thermal_m.push_back(std::log(vm.thermal.mean));
        }
    }

    nlohmann::json record = {{"study", "scaling"},
                             {"p", spec.p},
                             {"beta_nishimori", beta_n},
                             {"rows", sizes_json},
                             {"seed", config.seed},
                             {"engine", engine_name(config.engine)}};
    if (log_nb.size() >= 3) {
        LineFit fit = fit_line(log_nb, log_thermal_m);
        record["decay_exponent"] = {{"slope", fit.slope},
                                    {"slope_stderr", fit.slope_stderr},
                                    {"points", log_nb.size()}};
    }

    // Finite-(L, mu1) proxies for the two order parameters, at the largest
    // size and the smallest mu1 of the sweep, field on the NM ray.
    if (!spec.mu1_list.empty()) {
        double mu1 = *std::min_element(spec.mu1_list.begin(), spec.mu1_list.end());
        int size = spec.sizes.back();
        ModelSystem system = config.make_system_sized(size, beta_n);
        for (auto& s : system.params.species)
            if (s.p == 1) s = Species{1, std::sqrt(mu1 / beta_n), mu1};
        int site_family = static_cast<int>(system.family_index_for_p(1));
        ObservableSpec m1{ObservableSpec::Kind::magnetization, {}, site_family};
        ObservableSpec q{ObservableSpec::Kind::overlap, {}, site_family};
        EstimatorResult m = quenched_average(system, m1, ctx.n, ctx.seed, ctx.engine,
                                             ctx.settings, ctx.workers);
        EstimatorResult r = quenched_average(system, q, ctx.n, ctx.seed, ctx.engine, ctx.settings,
                                             ctx.workers);
        record["order_parameter_proxies"] = {{"mu1", mu1},
                                             {"size", size},
                                             {"m_plus", m.mean},
                                             {"m_plus_stderr", m.std_error},
                                             {"q_plus", r.mean},
                                             {"q_plus_stderr", r.std_error}};
        out.records.push_back(estimator_to_json("m1", system, m));
        out.records.push_back(estimator_to_json("R1", system, r));
    }
    out.records.push_back(record);
}

void run_phase_proxy(const ExperimentConfig& config, RunOutcome& out) {
    const PhaseProxySpec& spec = *config.phase_proxy;
    CheckContext ctx = make_context(config);
    out.csv_lines.push_back("study,beta,mu2,m1,m1_stderr,q,q_stderr,beta_nm,on_nm");
    nlohmann::json rows = nlohmann::json::array();
    for (double beta : spec.beta_list) {
        for (double mu2 : spec.mu2_list) {
            ExperimentConfig grid = config;
            grid.bond.mu = mu2;
            grid.field = Species{1, 0.0, spec.mu1};  // deterministic proxy field
            ModelSystem system = grid.make_system(beta);
            int site_family = static_cast<int>(system.family_index_for_p(1));
            ObservableSpec m1{ObservableSpec::Kind::magnetization, {}, site_family};
            ObservableSpec q{ObservableSpec::Kind::overlap, {}, site_family};
            EstimatorResult m = quenched_average(system, m1, ctx.n, ctx.seed, ctx.engine,
                                                 ctx.settings, ctx.workers);
            EstimatorResult r = quenched_average(system, q, ctx.n, ctx.seed, ctx.engine,
                                                 ctx.settings, ctx.workers);
            double beta_nm = config.bond.delta > 0.0
                                 ? mu2 / (config.bond.delta * config.bond.delta)
                                 : std::numeric_limits<double>::quiet_NaN();
            bool on_nm = std::isfinite(beta_nm) && std::abs(beta - beta_nm) <= 1e-12;
            rows.push_back({{"beta", beta},
                            {"mu2", mu2},
                            {"m1", m.mean},
                            {"m1_stderr", m.std_error},
                            {"q", r.mean},
                            {"q_stderr", r.std_error},
                            {"beta_nm", beta_nm},
                            {"on_nm", on_nm}});
            out.csv_lines.push_back("phase_proxy," + csv_num(beta) + "," + csv_num(mu2) + "," +
                                    csv_num(m.mean) + "," + csv_num(m.std_error) + "," +
                                    csv_num(r.mean) + "," + csv_num(r.std_error) + "," +
                                    csv_num(beta_nm) + "," + (on_nm ? "1" : "0"));
        }
    }
    out.records.push_back({{"study", "phase_proxy"},
                           {"mu1", spec.mu1},
                           {"rows", rows},
                           {"seed", config.seed},
                           {"engine", engine_name(config.engine)}});
}

}  // namespace

RunOutcome run_study(const ExperimentConfig& config, StudySelect select) {
    RunOutcome out;
    bool checks = select == StudySelect::all || select == StudySelect::checks;
    bool scaling = (select == StudySelect::all || select == StudySelect::scaling) &&
                   config.scaling.has_value();
    bool phase = (select == StudySelect::all || select == StudySelect::phase_proxy) &&
                 config.phase_proxy.has_value();
    if (select == StudySelect::scaling && !config.scaling)
        throw config_error("study.scaling: missing from config");
    if (select == StudySelect::phase_proxy && !config.phase_proxy)
        throw config_error("study.phase_proxy: missing from config");

    if (checks)
        for (const auto& spec : config.checks) run_one_check(config, spec, out.reports);
    if (scaling) run_scaling(config, out);
    if (phase) run_phase_proxy(config, out);

    for (const auto& r : out.reports) {
        out.records.push_back(check_to_json(r));
        if (r.verdict == CheckReport::Verdict::fail) out.exit_code = 1;
    }
    return out;
}

void write_outputs(const ExperimentConfig& config, const RunOutcome& outcome,
                   const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);

    {
        std::ofstream jsonl(out_dir / "results.jsonl");
        for (const auto& record : outcome.records) jsonl << record.dump() << "\n";
    }
    {
        std::ofstream csv(out_dir / "summary.csv");
        csv << "check,value,reference,sigma,margin_sigma,verdict\n";
        for (const auto& r : outcome.reports)
            csv << r.name << "," << csv_num(r.value) << "," << csv_num(r.reference) << ","
                << csv_num(r.sigma) << "," << csv_num(r.margin_sigma) << ","
                << verdict_name(r.verdict) << "\n";
        for (const auto& line : outcome.csv_lines) csv << line << "\n";
    }
    {
        nlohmann::json manifest;
        manifest["config_hash"] = manifest_hash(config);
        manifest["seed"] = config.seed;
        manifest["engine"] = engine_name(config.engine);
        manifest["code_version"] = "nishilab 0.1.0";
        manifest["timestamp"] = static_cast<std::uint64_t>(
            std::chrono::duration_cast<std::chrono::seconds>(
                std::chrono::system_clock::now().time_since_epoch())
                .count());
        std::ofstream mf(out_dir / "manifest.json");
        mf << manifest.dump(2) << "\n";
    }
}

}  // namespace nishilab
