#pragma once

#include "featrisk/featrisk.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace featrisk::tools {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ExperimentKind { risk_curve, ablation, spectrum, full_opt, heatmap, upstream, concentration };

const char* to_string(ExperimentKind k);
ExperimentKind parse_kind(const std::string& s);

struct CovarianceConfig {
    std::string type = "ar1";  // ar1 | identity | wishart_jitter
    double rho = 0.5;
    int m = 0;  // wishart width, 0 means p
    double jitter = 0.005;
};

// column covariance of B*, multiplied by scale
struct GroundTruthConfig {
    std::string type = "ar1";  // ar1 | identity
    double rho = 0.5;
    double scale = 1.0;
};

struct TaskConfig {
    double sigma2 = 1.0;
    std::optional<double> snr = 10.0;  // overrides scale when set
    double scale = 1.0;
};

struct InstanceConfig {
    int p = 0;
    int q = 0;
    CovarianceConfig covariance;
    GroundTruthConfig ground_truth;
    TaskConfig task;
};

enum class PredictorType { ridgeless, fixed, ofp, eep };

const char* to_string(PredictorType t);

struct PredictorConfig {
    std::string name;
    PredictorType type = PredictorType::ridgeless;
    RegularizationParams lambda{1.0, 0.0, 1.0};  // fixed only
    std::string representation = "truth";       // fixed only: truth | random | zero
    int k = 0;                                   // width for random/zero/eep, 0 means q
};

struct OptimizerSettings {
    double step = 1e-3;
    int max_episodes = 200;
    int episode_length = 50;
    double improve_tol = 1e-3;
    int patience = 7;
    int max_restarts = 3;
    ObjectiveMode mode = ObjectiveMode::avg;
};

struct GridConfig {
    std::string param = "n";
    std::vector<double> values;
};

struct UpstreamSettings {
    std::vector<int> n_pre;
    double sigma2_pre = 0.01;
    int seeds = 10;
    bool shared_design = true;
};

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::risk_curve;
    std::uint64_t seed = 0;
    int n = 0;  // downstream samples for heatmap, upstream
    int replicates = 50;
    int task_draws = 0;
    double spectrum_c = 1.0;
    InstanceConfig instance;
    GridConfig grid;
    std::vector<PredictorConfig> predictors;
    OptimizerSettings optimizer;
    UpstreamSettings upstream;
};

// YAML (any extension but .json) or JSON; both map onto the same tree.
nlohmann::json load_document(const std::filesystem::path& path);

// Validates the tree. Unknown keys and out-of-range values raise ConfigError.
ExperimentConfig parse_config(const nlohmann::json& doc);

// Canonical echo of a parsed config, used in manifest.json.
nlohmann::json to_json(const ExperimentConfig& cfg);

}  // namespace featrisk::tools
