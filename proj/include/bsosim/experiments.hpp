#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "bsosim/errors.hpp"

namespace bsosim {

inline constexpr const char* BSOSIM_VERSION = "0.1.0";

enum class Experiment {
    BsoScan,
    SolverCompare,
    Reversal,
    Teleport,
    PhaseRecover,
    LockScan,
    LockLoop,
};

const char* experiment_name(Experiment e);
Experiment experiment_from_name(const std::string& name);

struct ExperimentConfig {
    Experiment experiment = Experiment::BsoScan;
    std::map<std::string, std::string> parameters;
    std::uint64_t seed = 1;
    std::string output_path = "out.csv";

    double get_double(const std::string& key) const;
    long get_long(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    const std::string& get_string(const std::string& key) const;
};

// Known keys and defaults per experiment; unknown keys are rejected.
const std::map<std::string, std::string>& default_parameters(Experiment e);

// Build a config from an optional key=value file (or a JSON manifest from a
// previous run) plus command-line overrides. Flags win over file values.
ExperimentConfig parse_config(Experiment experiment, const std::string& config_file,
                              const std::vector<std::string>& overrides,
                              std::uint64_t seed, const std::string& output_path);

// Run and write the CSV plus a .manifest.json sidecar; returns the exit code.
int run_experiment(const ExperimentConfig& config);

std::string manifest_json(const ExperimentConfig& config);
ExperimentConfig config_from_manifest(const std::string& manifest_text);

} // namespace bsosim
