#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "nishilab/kernels.hpp"
#include "nishilab/studies.hpp"

namespace {

struct CliOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> workers;
    std::optional<std::string> engine;
    std::optional<std::string> out_dir;
};

void add_common(CLI::App* cmd, CliOptions& opt) {
    cmd->add_option("--config", opt.config_path, "experiment config (JSON)")->required();
    cmd->add_option("--seed", opt.seed, "override compute.seed");
    cmd->add_option("--workers", opt.workers, "override worker count");
    cmd->add_option("--engine", opt.engine, "override engine: exact|mcmc|quadrature");
    cmd->add_option("--out", opt.out_dir, "override output directory");
}

int run_selected(const CliOptions& opt, nishilab::StudySelect select) {
    using namespace nishilab;
    ExperimentConfig config = load_config(opt.config_path);
    if (opt.seed) config.seed = *opt.seed;
    if (const char* env = std::getenv("NISHILAB_WORKERS")) config.workers = std::stoul(env);
    if (opt.workers) config.workers = *opt.workers;
    if (opt.engine) config.engine = engine_from_name(*opt.engine);
    if (opt.out_dir) config.output_directory = *opt.out_dir;

    RunOutcome outcome = run_study(config, select);
    write_outputs(config, outcome, config.output_directory);

    std::cout << check_table_header() << "\n";
    for (const auto& r : outcome.reports) std::cout << check_table_row(r) << "\n";
    std::size_t failed = 0, inconclusive = 0;
    for (const auto& r : outcome.reports) {
        failed += r.verdict == CheckReport::Verdict::fail;
        inconclusive += r.verdict == CheckReport::Verdict::inconclusive;
    }
    std::cout << outcome.reports.size() << " checks: " << outcome.reports.size() - failed - inconclusive
              << " pass, " << failed << " fail, " << inconclusive << " inconclusive; kernels="
              << kernels::impl_name(kernels::active()) << "\n";
    std::cout << "results: " << (config.output_directory / "results.jsonl").string() << "\n";
    return outcome.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"nishilab: finite-size numerical checks for mixed p-spin glasses"};
    app.require_subcommand(1);

    CliOptions run_opt, verify_opt, scaling_opt, phase_opt;
    auto* run_cmd = app.add_subcommand("run", "run every study in the config");
    add_common(run_cmd, run_opt);
    auto* verify_cmd = app.add_subcommand("verify", "run only the identity/inequality checks");
    add_common(verify_cmd, verify_opt);
    auto* scaling_cmd = app.add_subcommand("scaling", "run the scaling study");
    add_common(scaling_cmd, scaling_opt);
    auto* phase_cmd = app.add_subcommand("phase-proxy", "run the phase-proxy sweep");
    add_common(phase_cmd, phase_opt);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (run_cmd->parsed()) return run_selected(run_opt, nishilab::StudySelect::all);
        if (verify_cmd->parsed()) return run_selected(verify_opt, nishilab::StudySelect::checks);
        if (scaling_cmd->parsed()) return run_selected(scaling_opt, nishilab::StudySelect::scaling);
        if (phase_cmd->parsed())
            return run_selected(phase_opt, nishilab::StudySelect::phase_proxy);
    } catch (const nishilab::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
