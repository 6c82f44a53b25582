#pragma once

#include "featrisk_tools/config.hpp"

#include "json.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace featrisk::tools {

struct RunOptions {
    std::filesystem::path out;
    int threads = 1;
    std::string command;  // subcommand, echoed in the manifest
};

struct RunReport {
    nlohmann::json summary;
    std::size_t rows = 0;
    std::size_t failed_rows = 0;  // rows whose status is not "ok"
    std::vector<std::string> files;
};

// Covariance, B* and the task prior from the config; every random piece
// comes from its own stream of `seed`.
ProblemInstance build_instance(const InstanceConfig& ic, std::uint64_t seed);

struct FittedPredictor {
    Penalty penalty;
    Matrix b;  // representation; empty for the ridgeless predictor
    RegularizationParams lambda;
    std::optional<OptimizeResult> result;
};

FittedPredictor fit_predictor(const PredictorConfig& pc, const ProblemInstance& inst, int n,
                              const OptimizerSettings& os, std::uint64_t seed);

// Runs the experiment and writes results.csv, summary.json, manifest.json and
// the kind-specific extras into opt.out (created if missing). Grid points that
// hit a regime or numeric error keep their row with NaN values and a status.
RunReport run_experiment(const ExperimentConfig& cfg, const RunOptions& opt);

// Which config kinds a CLI subcommand accepts.
std::vector<ExperimentKind> kinds_for_command(const std::string& command);

}  // namespace featrisk::tools
