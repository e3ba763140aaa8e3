#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "nishilab/config.hpp"
#include "nishilab/verify.hpp"

namespace nishilab {

enum class StudySelect { all, checks, scaling, phase_proxy };

struct RunOutcome {
    std::vector<CheckReport> reports;
    std::vector<nlohmann::json> records;  // one JSON-lines record each
    std::vector<std::string> csv_lines;   // summary rows (with header)
    int exit_code = 0;                    // 0 pass, 1 some check failed
};

// Executes the selected studies of a parsed config. Deterministic for a
// fixed (config, seed): records are produced in config order and all
// randomness is keyed.
RunOutcome run_study(const ExperimentConfig& config, StudySelect select);

// Writes results.jsonl, summary.csv and manifest.json under out_dir.
void write_outputs(const ExperimentConfig& config, const RunOutcome& outcome,
                   const std::filesystem::path& out_dir);

}  // namespace nishilab
