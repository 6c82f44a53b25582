#pragma once

#include "featrisk/asymptotics.hpp"
#include "featrisk/linalg.hpp"
#include "featrisk/model.hpp"
#include "featrisk/penalty.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace featrisk {

// Conditional-on-X bias and variance, with the noise integrated exactly.
struct ScDecomposition {
    double bias = 0.0;      // (beta - m)^T Sigma (beta - m), m = E_eps beta_hat
    double variance = 0.0;  // sigma^2 tr(A^T Sigma A)
};

ScDecomposition sc_decomposition(const Matrix& x, const Penalty& pen, const Vector& beta_star,
                                 const Matrix& sigma, double sigma2);

struct Estimate {
    double value = 0.0;
    double se = 0.0;  // replicate jackknife
};

struct DecompositionEstimate {
    int replicates = 0;
    Estimate risk;         // mean over X of B_SC + V_SC
    double sc_bias_mean = 0.0;
    double sc_variance_mean = 0.0;
    Estimate bias;         // (beta - m_bar)^T Sigma (beta - m_bar)
    Estimate var_x;        // spread of m_j around m_bar
    Estimate var_noise;    // sigma^2 |E A|_Sigma^2, off-diagonal (unbiased) form
    Estimate var_x_noise;  // sigma^2 mean tr(A_j^T Sigma A_j) - var_noise
};

struct McOptions {
    int replicates = 50;
    std::uint64_t seed = 0;
    int threads = 1;
    // stream index offset so different grid points use disjoint designs
    std::uint64_t stream_offset = 0;
};

// Samples N designs X_j ~ N(0, Sigma) and combines the per-replicate closed
// forms into the fine-grained decomposition. Components telescope exactly:
// bias + var_x + var_noise + var_x_noise = risk.
DecompositionEstimate fg_estimates(const ProblemInstance& inst, const Penalty& pen,
                                   const Vector& beta_star, int n, const McOptions& opt);

DecompositionEstimate fg_estimates(const ProblemInstance& inst, const Representation& rep,
                                   const RegularizationParams& lam, const Vector& beta_star, int n,
                                   const McOptions& opt);

struct RiskCurveRow {
    int n = 0;
    DecompositionEstimate mc;
    std::optional<AsymptoticReport> asy;
    std::string status = "ok";
};

std::vector<RiskCurveRow> risk_curve(const ProblemInstance& inst, const Penalty& pen,
                                     const Vector& beta_star, const std::vector<int>& n_grid,
                                     const McOptions& opt);

}  // namespace featrisk
