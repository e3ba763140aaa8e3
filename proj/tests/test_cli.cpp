#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nishilab/config.hpp"
#include "nishilab/studies.hpp"

using namespace nishilab;
namespace fs = std::filesystem;

namespace {

nlohmann::json minimal_config() {
    return nlohmann::json::parse(R"({
      "model": {"type": "ea", "dimension": 1, "side": 2, "beta": 0.5,
                "field": {"delta": 0.0, "mu": 0.0}, "bond": {"delta": 1.0, "mu": 0.5}},
      "study": {"checks": [{"check": "internal_energy_nm"}]},
      "compute": {"engine": "quadrature", "seed": 1},
      "output": {"directory": "out"}
    })");
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& tag) {
    fs::path dir = fs::temp_directory_path() / ("nishilab_test_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int run_cli(const std::string& args, const fs::path& log) {
    std::string cmd = std::string(NISHILAB_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

// Result records with the per-run seed stripped, for verdict comparison.
std::vector<std::string> verdicts_of(const fs::path& jsonl) {
    std::vector<std::string> out;
    std::ifstream in(jsonl);
    std::string line;
    while (std::getline(in, line)) {
        auto j = nlohmann::json::parse(line);
        if (j.contains("verdict")) out.push_back(j.at("verdict").get<std::string>());
    }
    return out;
}

}  // namespace

TEST_CASE("config: strict schema") {
    CHECK_NOTHROW(parse_config(minimal_config()));

    auto unknown = minimal_config();
    unknown["model"]["extra_knob"] = 1;
    CHECK_THROWS_WITH_AS(parse_config(unknown), "model: unknown key \"extra_knob\"",
                         config_error);

    auto missing = minimal_config();
    missing["model"].erase("beta");
    try {
        parse_config(missing);
        FAIL("expected config_error");
    } catch (const config_error& e) {
        CHECK(std::string(e.what()).find("beta") != std::string::npos);
    }

    auto bad_engine = minimal_config();
    bad_engine["compute"]["engine"] = "psychic";
    CHECK_THROWS_AS(parse_config(bad_engine), config_error);

    auto bad_check = minimal_config();
    bad_check["study"]["checks"][0]["check"] = "nope";
    CHECK_THROWS_AS(parse_config(bad_check), config_error);
}

TEST_CASE("config: round trip preserves the canonical form") {
    auto j = minimal_config();
    auto config = parse_config(j);
    CHECK(config.raw.dump() == j.dump());
    CHECK(parse_config(config.raw).raw.dump() == config.raw.dump());
    auto system = config.make_system(config.beta);
    CHECK(system.n_sites() == 2);
    CHECK(config.beta_nishimori_of_bond() == doctest::Approx(0.5));
}

TEST_CASE("manifest hash flips on any field change") {
    auto base = parse_config(minimal_config());
    auto h0 = manifest_hash(base);

    auto j = minimal_config();
    j["model"]["bond"]["mu"] = 0.51;
    CHECK(manifest_hash(parse_config(j)) != h0);

    j = minimal_config();
    j["compute"]["seed"] = 2;
    CHECK(manifest_hash(parse_config(j)) != h0);

    j = minimal_config();
    j["model"]["side"] = 3;  // changes the family serialization too
    CHECK(manifest_hash(parse_config(j)) != h0);

    CHECK(manifest_hash(parse_config(minimal_config())) == h0);
}

TEST_CASE("run_study executes checks and reports exit codes") {
    auto config = parse_config(minimal_config());
    auto outcome = run_study(config, StudySelect::all);
    REQUIRE(outcome.reports.size() == 1);
    CHECK(outcome.reports[0].verdict == CheckReport::Verdict::pass);
    CHECK(outcome.exit_code == 0);
    CHECK(outcome.records.size() == 1);
}

TEST_CASE("CLI: bundled quadrature config exits 0 with 12 passing checks") {
    fs::path dir = fresh_dir("run2site");
    fs::path config = fs::path(NISHILAB_CONFIG_DIR) / "nm-identities-2site.json";
    int code = run_cli("run --config " + config.string() + " --out " + (dir / "a").string(),
                       dir / "log.txt");
    CHECK(code == 0);
    auto verdicts = verdicts_of(dir / "a" / "results.jsonl");
    CHECK(verdicts.size() == 12);
    for (const auto& v : verdicts) CHECK(v == "pass");
    CHECK(fs::exists(dir / "a" / "summary.csv"));
    CHECK(fs::exists(dir / "a" / "manifest.json"));
}

TEST_CASE("CLI: malformed config exits 2 and names the field") {
    fs::path dir = fresh_dir("badcfg");
    auto j = minimal_config();
    j["model"].erase("beta");
    std::ofstream(dir / "bad.json") << j.dump();
    int code = run_cli("run --config " + (dir / "bad.json").string() + " --out " +
                           (dir / "out").string(),
                       dir / "log.txt");
    CHECK(code == 2);
    CHECK(slurp(dir / "log.txt").find("beta") != std::string::npos);

    int usage = run_cli("frobnicate", dir / "log2.txt");
    CHECK(usage == 2);
}

TEST_CASE("CLI: reruns are byte-identical; seed changes records but not verdicts") {
    fs::path dir = fresh_dir("repro");
    fs::path config = fs::path(NISHILAB_CONFIG_DIR) / "ea-3x3-field.json";

    CHECK(run_cli("run --config " + config.string() + " --out " + (dir / "a").string(),
                  dir / "a.log") == 0);
    CHECK(run_cli("run --config " + config.string() + " --out " + (dir / "b").string(),
                  dir / "b.log") == 0);
    CHECK(slurp(dir / "a" / "results.jsonl") == slurp(dir / "b" / "results.jsonl"));
    CHECK(slurp(dir / "a" / "summary.csv") == slurp(dir / "b" / "summary.csv"));

    CHECK(run_cli("run --config " + config.string() + " --seed 2 --out " + (dir / "c").string(),
                  dir / "c.log") == 0);
    CHECK(slurp(dir / "a" / "results.jsonl") != slurp(dir / "c" / "results.jsonl"));
    CHECK(verdicts_of(dir / "a" / "results.jsonl") == verdicts_of(dir / "c" / "results.jsonl"));
}

TEST_CASE("CLI: results do not depend on the worker count") {
    fs::path dir = fresh_dir("workers");
    fs::path config = fs::path(NISHILAB_CONFIG_DIR) / "ea-3x3-field.json";
    CHECK(run_cli("run --config " + config.string() + " --workers 1 --out " +
                      (dir / "w1").string(),
                  dir / "w1.log") == 0);
    CHECK(run_cli("run --config " + config.string() + " --workers 2 --out " +
                      (dir / "w2").string(),
                  dir / "w2.log") == 0);
    CHECK(slurp(dir / "w1" / "results.jsonl") == slurp(dir / "w2" / "results.jsonl"));

    // Environment override path: NISHILAB_WORKERS.
    std::string cmd = "NISHILAB_WORKERS=1 " + std::string(NISHILAB_CLI_PATH) + " run --config " +
                      config.string() + " --out " + (dir / "we").string() + " > " +
                      (dir / "we.log").string() + " 2>&1";
    CHECK(WEXITSTATUS(std::system(cmd.c_str())) == 0);
    CHECK(slurp(dir / "we" / "results.jsonl") == slurp(dir / "w1" / "results.jsonl"));
}

TEST_CASE("CLI: verify subcommand runs checks only") {
    fs::path dir = fresh_dir("verifycmd");
    fs::path config = fs::path(NISHILAB_CONFIG_DIR) / "nm-identities-2site.json";
    CHECK(run_cli("verify --config " + config.string() + " --out " + (dir / "v").string(),
                  dir / "v.log") == 0);
    CHECK(verdicts_of(dir / "v" / "results.jsonl").size() == 12);
}

TEST_CASE("CLI: scaling subcommand and kernel override") {
    fs::path dir = fresh_dir("scalingcmd");
    auto j = minimal_config();
    j["model"]["dimension"] = 2;
    j["study"].erase("checks");
    j["study"]["scaling"] = {{"sizes", {2, 3}}, {"p", 2}};
    j["compute"]["engine"] = "exact";
    j["compute"]["n_realizations"] = 100;
    std::ofstream(dir / "scaling.json") << j.dump();
    CHECK(run_cli("scaling --config " + (dir / "scaling.json").string() + " --out " +
                      (dir / "s").string(),
                  dir / "s.log") == 0);
    CHECK(slurp(dir / "s" / "results.jsonl").find("\"study\":\"scaling\"") != std::string::npos);
    CHECK(slurp(dir / "s" / "summary.csv").find("scaling,2,") != std::string::npos);

    // Forcing the scalar kernels must not change the results.
    std::string cmd = "NISHILAB_SIMD=scalar " + std::string(NISHILAB_CLI_PATH) +
                      " scaling --config " + (dir / "scaling.json").string() + " --out " +
                      (dir / "sc").string() + " > " + (dir / "sc.log").string() + " 2>&1";
    CHECK(WEXITSTATUS(std::system(cmd.c_str())) == 0);
    CHECK(slurp(dir / "sc.log").find("kernels=scalar") != std::string::npos);
    CHECK(slurp(dir / "sc" / "results.jsonl") == slurp(dir / "s" / "results.jsonl"));
}

TEST_CASE("phase proxy: Z2-symmetric column vanishes identically") {
    auto j = minimal_config();
    j["model"]["dimension"] = 2;
    j["model"]["side"] = 3;
    j["study"].erase("checks");
    j["study"]["phase_proxy"] = {{"beta_list", {0.0, 0.5}}, {"mu2_list", {0.0}}, {"mu1", 0.0}};
    j["compute"]["engine"] = "exact";
    j["compute"]["n_realizations"] = 20;
    auto config = parse_config(j);
    auto outcome = run_study(config, StudySelect::phase_proxy);
    REQUIRE(outcome.records.size() == 1);
    for (const auto& row : outcome.records[0].at("rows")) {
        CHECK(std::abs(row.at("m1").get<double>()) <= 1e-12);
        if (row.at("beta").get<double>() == 0.0)
            CHECK(std::abs(row.at("q").get<double>()) <= 1e-12);
    }
}

TEST_CASE("phase proxy: near-pure ferromagnet saturates the magnetization") {
    // beta mu2 = 5 with delta2 = 0.1 and a small proxy field mu1 = 0.05 at
    // L = 4: E<m1> >= 0.9 by near-deterministic enumeration.
    fs::path config_path = fs::path(NISHILAB_CONFIG_DIR) / "phase-proxy.json";
    auto config = load_config(config_path);
    auto outcome = run_study(config, StudySelect::phase_proxy);
    REQUIRE(outcome.records.size() == 1);
    bool found = false;
    for (const auto& row : outcome.records[0].at("rows")) {
        double beta = row.at("beta").get<double>();
        double mu2 = row.at("mu2").get<double>();
        if (beta == 0.0) CHECK(std::abs(row.at("q").get<double>()) <= 1e-12);
        if (beta == 5.0 && mu2 == 1.0) {
            CHECK(row.at("m1").get<double>() >= 0.9);
            found = true;
        }
    }
    CHECK(found);
}

TEST_CASE("scaling study record shape") {
    auto j = minimal_config();
    j["model"]["dimension"] = 2;
    j["model"]["side"] = 2;
    j["study"].erase("checks");
    j["study"]["scaling"] = {{"sizes", {2, 3, 4}}, {"p", 2}, {"mu1_list", {0.1}}};
    j["compute"]["engine"] = "exact";
    j["compute"]["n_realizations"] = 100;
    auto config = parse_config(j);
    auto outcome = run_study(config, StudySelect::scaling);
    // Two order-parameter estimator records plus the study record.
    REQUIRE(outcome.records.size() == 3);
    CHECK(outcome.records[0].at("observable") == "m1");
    CHECK(outcome.records[1].at("observable") == "R1");
    const auto& record = outcome.records[2];
    CHECK(record.at("rows").size() == 3);
    CHECK(record.contains("decay_exponent"));
    CHECK(record.contains("order_parameter_proxies"));
    // Variance must shrink with the family size.
    double first = record.at("rows")[0].at("thermal_var_m").get<double>();
    double last = record.at("rows")[2].at("thermal_var_m").get<double>();
    CHECK(last < first);
}
