#pragma once

#include "featrisk/asymptotics.hpp"
#include "featrisk/linalg.hpp"
#include "featrisk/model.hpp"
#include "featrisk/penalty.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace featrisk {

enum class ObjectiveMode { avg, worst };

const char* to_string(ObjectiveMode m);

// Everything the pretraining objective depends on besides (B_hat, lambda).
struct ObjectiveSetup {
    Matrix sigma;        // p x p covariance
    Matrix b_star;       // p x q
    Matrix sigma_alpha;  // q x q prior covariance (avg mode)
    double sigma2 = 1.0;
    int n = 1;
    double scale = 1.0;  // squared radius of the task ball (worst mode)
    ObjectiveMode mode = ObjectiveMode::avg;

    static ObjectiveSetup from_instance(const ProblemInstance& inst, int n, ObjectiveMode mode);
};

// lambda packed as (lambda_alpha, lambda_beta, lambda)
std::array<double, 3> pack(const RegularizationParams& lam);
RegularizationParams unpack(const std::array<double, 3>& v);

// R_avg or R_worst at (B_hat, lambda), computed through penalty + asymptotics.
AsymptoticReport objective_report(const ObjectiveSetup& setup, const Matrix& b_hat,
                                  const RegularizationParams& lam);
double objective_forward(const ObjectiveSetup& setup, const Matrix& b_hat,
                         const RegularizationParams& lam);

struct GradientBundle {
    double value = 0.0;
    Matrix d_b;                       // dL/dB_hat
    std::array<double, 3> d_lambda{}; // dL/d(lambda_alpha, lambda_beta, lambda)
    double b0 = 0.0;
    double d_b0 = 0.0;  // partial dL/db0 at fixed t
    Vector d_t;         // total dL/dt_i on the support (through V and b0)
    Vector db0_dt;      // -(b0/(1+t_i b0)^2) / sum_j t_j/(1+t_j b0)^2
    Vector t;           // support eigenvalues
};

// Analytic gradient: implicit differentiation through the fixed point,
// matrix-function derivatives (divided differences) through the
// eigendecompositions of S = Gamma^{-1/2} Sigma Gamma^{-1/2} and B B^T.
GradientBundle objective_gradient(const ObjectiveSetup& setup, const Matrix& b_hat,
                                  const RegularizationParams& lam);

// Central differences on every entry of B_hat and every lambda.
GradientBundle fd_gradient(const ObjectiveSetup& setup, const Matrix& b_hat,
                           const RegularizationParams& lam, double step = 1e-5);

struct OptimizerConfig {
    ObjectiveMode mode = ObjectiveMode::avg;
    bool learn_b = true;  // false freezes B_hat (oracle-featurization tuning)
    int k = 0;            // representation width; 0 means q
    double step = 1e-3;
    int max_episodes = 200;
    int episode_length = 50;
    double improve_tol = 1e-3;  // relative improvement per episode
    int patience = 7;
    int max_restarts = 3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;
};

struct TraceRow {
    int step = 0;
    int episode = 0;
    double value = 0.0;
    double grad_norm = 0.0;
};

struct OptimizeResult {
    Matrix b;
    RegularizationParams lam;
    double value = 0.0;
    double initial_value = 0.0;
    AsymptoticReport report;
    std::vector<TraceRow> trace;
    int episodes = 0;
    int restarts = 0;
    bool stopped_by_patience = false;
};

// Random initialization: B_hat entries U[-k^{-1/2}, k^{-1/2}], lambda
// magnitudes |U[-sqrt 3, sqrt 3]| floored at 1e-3.
Matrix init_representation(int p, int k, std::uint64_t seed);
RegularizationParams init_lambda(std::uint64_t seed);

// Adam on (B_hat, log lambda) with the episode/patience stopping rule.
// Returns the best iterate seen.
OptimizeResult optimize(const OptimizerConfig& config, const ObjectiveSetup& setup,
                        const Matrix& b_init, const RegularizationParams& lam_init);

// Convenience: random initialization from config.seed.
OptimizeResult optimize(const OptimizerConfig& config, const ObjectiveSetup& setup);

// B_hat frozen to B*, lambda tuned.
OptimizeResult optimize_ofp(const OptimizerConfig& config, const ObjectiveSetup& setup);

// Best of several starts: random, B* zero-padded to width k with the OFP
// lambda, and a near-zero B_hat (close to the plain ridgeless penalty).
OptimizeResult optimize_eep(const OptimizerConfig& config, const ObjectiveSetup& setup,
                            const std::optional<OptimizeResult>& ofp = std::nullopt);

struct AlignmentHeatmap {
    Matrix m;         // M_ij = qhat_i^T qstar_j
    Matrix n;         // N_ij = qhat_i^T u_j
    Vector spectrum;  // eigenvalues of B_hat B_hat^T, descending
};

AlignmentHeatmap heatmap_alignment(const Matrix& b_hat, const Matrix& b_star, const Matrix& sigma);

}  // namespace featrisk
