#pragma once

#include "featrisk/errors.hpp"
#include "featrisk/linalg.hpp"
#include "featrisk/model.hpp"
#include "featrisk/penalty.hpp"

#include <optional>

namespace featrisk {

// Eigensystem of S = Gamma^{-1/2} Sigma Gamma^{-1/2}. Eigenvalues are sorted
// descending, so the nonzero set H is the leading block of size h.
struct WhitenedSpectrum {
    static constexpr double kSupportTol = 1e-10;

    Vector t;  // length p
    Matrix w;  // p x p
    int h = 0;
    // Sigma Gamma^{-1/2} W_H (p x h). Column i equals t_i Gamma^{1/2} w_i when
    // Gamma is finite; this form stays valid when some weights are infinite.
    Matrix sigma_w;
    // Sigma - sigma_w diag(1/t) sigma_w^T: the part of Sigma living in
    // directions removed by infinite weights. Empty when all weights are finite.
    Matrix removed;

    double t_max() const { return h > 0 ? t(0) : 0.0; }
    double t_min_pos() const { return h > 0 ? t(h - 1) : 0.0; }
    Vector t_support() const { return t.head(h); }
};

WhitenedSpectrum whiten(const CovarianceModel& sigma, const Penalty& pen);

Regime classify_regime(int n, int h);

// Unique root of sum_i 1/(1 + t_i b) = h - n over the positive entries t
// (the support), found by safeguarded Newton on the bracket
// [n / ((h-n) t_max), n / ((h-n) t_min)]. Throws RegimeError when n >= h.
double solve_b0(const Vector& t_support, int n);
double solve_b0(const WhitenedSpectrum& spec, int n);

// Fixed-point residual sum_i 1/(1 + t_i b) - (h - n).
double fixed_point_residual(const Vector& t_support, int n, double b0);

// Variance functional: sum (t b)^2/(1+t b)^2 / sum t b/(1+t b)^2.
double variance_functional(const Vector& t_support, double b0);

// db0/dt_i = -(b0 / (1 + t_i b0)^2) / sum_j t_j / (1 + t_j b0)^2
Vector fixed_point_sensitivity(const Vector& t_support, double b0);

struct FineGrainedLimits {
    double bias = 0.0;          // B
    double var_x = 0.0;         // V_X
    double var_x_noise = 0.0;   // V_{X,eps}
    double var_noise = 0.0;     // V_eps (always 0 in the limit)
};

struct AsymptoticReport {
    Regime regime = Regime::sample_deficient;
    int n = 0;
    int h = 0;
    double b0 = 0.0;  // NaN in the sample-rich regime
    double variance = 0.0;  // V
    double bias = 0.0;      // B
    double risk = 0.0;      // R = B + V B + sigma^2 V, or U when sample-rich
    double rich_risk = 0.0; // U = sigma^2 h / (n - h) (sample-rich only)
    FineGrainedLimits fg;
    std::optional<double> bias_avg;
    std::optional<double> risk_avg;
    std::optional<double> bias_worst;
    std::optional<double> risk_worst;
};

// Kernel K with B = beta^T K beta. In the finite case
// K = Gamma^{1/2} W_H diag(t / (1+t b0)^2) W_H^T Gamma^{1/2}.
Matrix bias_kernel(const WhitenedSpectrum& spec, double b0);

// Risk for a fixed beta*. Throws RegimeError at n = h.
AsymptoticReport risk_components(const WhitenedSpectrum& spec, const Vector& beta_star,
                                 double sigma2, int n);

// Risk averaged over the task prior with E beta beta^T = B* sigma_alpha B*^T / q.
AsymptoticReport averaged_objective(const WhitenedSpectrum& spec, const Matrix& b_star,
                                    const Matrix& sigma_alpha, double sigma2, int n);

// Worst case over alpha* in the ball of radius sqrt(scale):
// B_worst = scale * sigma_max(B*^T K B*), R_worst = sigma^2 V + (V + 1) B_worst.
AsymptoticReport worst_case_objective(const WhitenedSpectrum& spec, const Matrix& b_star,
                                      double sigma2, int n, double scale);

}  // namespace featrisk
