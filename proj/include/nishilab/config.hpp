#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nishilab/disorder_avg.hpp"

namespace nishilab {

// Invalid or malformed experiment configuration; maps to exit code 2.
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

struct CheckSpec {
    std::string check;                  // internal_energy_nm, nm_identities, ...
    std::optional<double> beta_factor;  // study beta as a multiple of beta_N
    std::vector<std::uint32_t> x_sites;
    std::vector<std::uint32_t> y_sites;
    std::size_t x_index = 0;            // X range index for truncated checks
    std::vector<int> sizes;             // trend checks
};

struct ScalingSpec {
    std::vector<int> sizes;
    int p = 2;
    std::vector<double> mu1_list;
};

struct PhaseProxySpec {
    std::vector<double> beta_list;
    std::vector<double> mu2_list;
    double mu1 = 0.0;
};

struct ExperimentConfig {
    // model
    std::string model_type;  // "ea" | "sk"
    int dimension = 2;
    int side = 3;
    double beta = 1.0;
    Species field{1, 0.0, 0.0};
    Species bond{2, 1.0, 0.0};

    // study
    std::vector<CheckSpec> checks;
    std::vector<double> mu1_sweep;
    std::optional<ScalingSpec> scaling;
    std::optional<PhaseProxySpec> phase_proxy;

    // compute
    Engine engine = Engine::exact;
    std::uint64_t n_realizations = 10000;
    std::uint64_t seed = 1;
    unsigned workers = 0;
    EngineSettings settings;

    // output
    std::filesystem::path output_directory = "out";

    nlohmann::json raw;  // canonical parsed form, for hashing and manifests

    ModelSystem make_system(double beta_override) const;
    ModelSystem make_system_sized(int size, double beta_override) const;
    double beta_nishimori_of_bond() const;
};

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

// FNV-1a over the canonical serialization; covers config, seed and the
// family serializations of the base system.
std::uint64_t manifest_hash(const ExperimentConfig& config);

}  // namespace nishilab
