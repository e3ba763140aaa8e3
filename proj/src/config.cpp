#include "nishilab/config.hpp"

#include <fstream>
#include <set>

#include "nishilab/systems.hpp"

namespace nishilab {

namespace {

void require_keys(const nlohmann::json& j, const std::string& where,
                  const std::set<std::string>& allowed) {
    if (!j.is_object()) throw config_error(where + ": expected an object");
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key)) throw config_error(where + ": unknown key \"" + key + "\"");
}

template <typename T>
T get_required(const nlohmann::json& j, const std::string& where, const std::string& key) {
    if (!j.contains(key)) throw config_error(where + ": missing field \"" + key + "\"");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw config_error(where + "." + key + ": wrong type");
    }
}

template <typename T>
T get_optional(const nlohmann::json& j, const std::string& where, const std::string& key,
               T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw config_error(where + "." + key + ": wrong type");
    }
}

Species parse_species(const nlohmann::json& j, const std::string& where, int p) {
    require_keys(j, where, {"delta", "mu"});
    Species s;
    s.p = p;
    s.delta = get_required<double>(j, where, "delta");
    s.mu = get_required<double>(j, where, "mu");
    if (s.delta < 0.0) throw config_error(where + ".delta: must be >= 0");
    if (s.mu < 0.0) throw config_error(where + ".mu: must be >= 0");
    return s;
}

CheckSpec parse_check(const nlohmann::json& j, const std::string& where) {
    require_keys(j, where, {"check", "beta_factor", "X", "Y", "X_index", "sizes"});
    CheckSpec spec;
    spec.check = get_required<std::string>(j, where, "check");
    if (j.contains("beta_factor")) spec.beta_factor = j.at("beta_factor").get<double>();
    spec.x_sites = get_optional<std::vector<std::uint32_t>>(j, where, "X", {});
    spec.y_sites = get_optional<std::vector<std::uint32_t>>(j, where, "Y", {});
    spec.x_index = get_optional<std::size_t>(j, where, "X_index", 0);
    spec.sizes = get_optional<std::vector<int>>(j, where, "sizes", {});
    static const std::set<std::string> known = {
        "internal_energy_nm", "nm_identities",        "m2_bound",       "spontaneous_magnetization",
        "truncated_k1",       "k3_combination", "acgg",             "variance_ratio",
        "m_variance_bound"};
    if (!known.count(spec.check)) throw config_error(where + ".check: unknown check \"" + spec.check + "\"");
    return spec;
}

}  // namespace

ExperimentConfig parse_config(const nlohmann::json& j) {
    require_keys(j, "config", {"model", "study", "compute", "output"});
    ExperimentConfig c;
    c.raw = j;

    const auto& model = j.contains("model") ? j.at("model") : nlohmann::json::object();
    if (!j.contains("model")) throw config_error("config: missing field \"model\"");
    require_keys(model, "model", {"type", "dimension", "side", "beta", "field", "bond"});
    c.model_type = get_required<std::string>(model, "model", "type");
    if (c.model_type != "ea" && c.model_type != "sk")
        throw config_error("model.type: expected \"ea\" or \"sk\"");
    c.dimension = get_optional<int>(model, "model", "dimension", c.model_type == "sk" ? 1 : 2);
    c.side = get_required<int>(model, "model", "side");
    c.beta = get_required<double>(model, "model", "beta");
    if (c.beta < 0.0) throw config_error("model.beta: must be >= 0");
    if (model.contains("field")) c.field = parse_species(model.at("field"), "model.field", 1);
    if (!model.contains("bond")) throw config_error("model: missing field \"bond\"");
    c.bond = parse_species(model.at("bond"), "model.bond", 2);

    if (!j.contains("study")) throw config_error("config: missing field \"study\"");
    const auto& study = j.at("study");
    require_keys(study, "study", {"checks", "mu1_sweep", "scaling", "phase_proxy"});
    if (study.contains("checks")) {
        if (!study.at("checks").is_array()) throw config_error("study.checks: expected an array");
        std::size_t idx = 0;
        for (const auto& cj : study.at("checks"))
            c.checks.push_back(parse_check(cj, "study.checks[" + std::to_string(idx++) + "]"));
    }
    c.mu1_sweep = get_optional<std::vector<double>>(study, "study", "mu1_sweep", {});
    if (study.contains("scaling")) {
        const auto& s = study.at("scaling");
        require_keys(s, "study.scaling", {"sizes", "p", "mu1_list"});
        ScalingSpec spec;
        spec.sizes = get_required<std::vector<int>>(s, "study.scaling", "sizes");
        spec.p = get_optional<int>(s, "study.scaling", "p", 2);
        spec.mu1_list = get_optional<std::vector<double>>(s, "study.scaling", "mu1_list", {});
        for (std::size_t i = 1; i < spec.sizes.size(); ++i)
            if (spec.sizes[i] <= spec.sizes[i - 1])
                throw config_error("study.scaling.sizes: must be strictly increasing");
        c.scaling = std::move(spec);
    }
    if (study.contains("phase_proxy")) {
        const auto& s = study.at("phase_proxy");
        require_keys(s, "study.phase_proxy", {"beta_list", "mu2_list", "mu1"});
        PhaseProxySpec spec;
        spec.beta_list = get_required<std::vector<double>>(s, "study.phase_proxy", "beta_list");
        spec.mu2_list = get_required<std::vector<double>>(s, "study.phase_proxy", "mu2_list");
        spec.mu1 = get_optional<double>(s, "study.phase_proxy", "mu1", 0.0);
        c.phase_proxy = std::move(spec);
    }

    if (!j.contains("compute")) throw config_error("config: missing field \"compute\"");
    const auto& compute = j.at("compute");
    require_keys(compute, "compute",
                 {"engine", "n_realizations", "seed", "workers", "n_max", "quadrature_nodes",
                  "mcmc"});
    try {
        c.engine = engine_from_name(get_optional<std::string>(compute, "compute", "engine", "exact"));
    } catch (const std::invalid_argument& e) {
        throw config_error(std::string("compute.engine: ") + e.what());
    }
    // Engine-dependent default: 1e4 realizations for exact studies, 1e2 for
    // MCMC studies.
    c.n_realizations = get_optional<std::uint64_t>(compute, "compute", "n_realizations",
                                                   c.engine == Engine::mcmc ? 100 : 10000);
    c.seed = get_optional<std::uint64_t>(compute, "compute", "seed", 1);
    c.workers = get_optional<unsigned>(compute, "compute", "workers", 0);
    c.settings.n_max = get_optional<std::uint32_t>(compute, "compute", "n_max",
                                                   ExactGibbs::default_n_max);
    c.settings.quadrature_nodes = get_optional<int>(compute, "compute", "quadrature_nodes", 64);
    if (compute.contains("mcmc")) {
        const auto& m = compute.at("mcmc");
        require_keys(m, "compute.mcmc",
                     {"burn_in", "sweeps", "thinning", "rungs", "ladder_min_factor",
                      "ladder_max_factor", "swaps"});
        c.settings.schedule.burn_in = get_optional<std::uint64_t>(m, "compute.mcmc", "burn_in", 1000);
        c.settings.schedule.sweeps = get_optional<std::uint64_t>(m, "compute.mcmc", "sweeps", 10000);
        c.settings.schedule.thinning = get_optional<std::uint32_t>(m, "compute.mcmc", "thinning", 1);
        c.settings.ladder.rungs = get_optional<int>(m, "compute.mcmc", "rungs", 8);
        c.settings.ladder.min_factor =
            get_optional<double>(m, "compute.mcmc", "ladder_min_factor", 0.2);
        c.settings.ladder.max_factor =
            get_optional<double>(m, "compute.mcmc", "ladder_max_factor", 1.2);
        c.settings.swaps = get_optional<bool>(m, "compute.mcmc", "swaps", true);
    }

    if (!j.contains("output")) throw config_error("config: missing field \"output\"");
    const auto& output = j.at("output");
    require_keys(output, "output", {"directory"});
    c.output_directory = get_optional<std::string>(output, "output", "directory", "out");

    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file: " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw config_error("config parse error: " + std::string(e.what()));
    }
    return parse_config(j);
}

ModelSystem ExperimentConfig::make_system(double beta_override) const {
    return make_system_sized(side, beta_override);
}

ModelSystem ExperimentConfig::make_system_sized(int size, double beta_override) const {
    if (model_type == "sk") return make_sk_system(size, beta_override, bond, field);
    return make_ea_system(dimension, size, beta_override, bond, field);
}

double ExperimentConfig::beta_nishimori_of_bond() const {
    if (bond.delta <= 0.0) throw config_error("model.bond: beta_N undefined with delta = 0");
    return bond.mu / (bond.delta * bond.delta);
}

namespace {

void fnv1a(std::uint64_t& h, const std::string& bytes) {
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001B3ull;
    }
}

}  // namespace

std::uint64_t manifest_hash(const ExperimentConfig& config) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    fnv1a(h, config.raw.dump());
    fnv1a(h, std::to_string(config.seed));
    ModelSystem system = config.make_system(config.beta);
    for (const auto& family : system.families) fnv1a(h, family_to_json(family).dump());
    return h;
}

}  // namespace nishilab
