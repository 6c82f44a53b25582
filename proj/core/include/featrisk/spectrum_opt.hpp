#pragma once

#include "featrisk/linalg.hpp"
#include "featrisk/model.hpp"
#include "featrisk/penalty.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace featrisk {

enum class SelectionRegime { hard, soft };
enum class SpectrumObjective { avg, worst };

const char* to_string(SelectionRegime r);

struct SpectrumSettings {
    int n = 1;
    double sigma2 = 1.0;
    double scale = 1.0;  // prior radius^2 used by the worst-case objective
};

// Representation design restricted to the eigenbasis of Sigma. Entries are
// stored in solver order: the h1 directions with nonzero phi_i = eta_i theta_i
// sorted by phi descending (ties by eigen index), then the remaining
// directions of positive eta in eigen order.
struct SpectrumProblem {
    static constexpr double kPhiTol = 1e-12;  // phi_i <= kPhiTol * phi_max counts as zero

    Vector eta;
    Vector theta;  // u_i^T B* Sigma_alpha B*^T u_i
    Vector phi;
    std::vector<int> order;  // order[i] = column of the Sigma eigenbasis
    Matrix basis;            // eigenvectors of Sigma (p x p, descending eta)
    Matrix g;                // q x h, column i = sqrt(eta_i) B*^T u_i
    int n = 0;
    int h = 0;
    int h1 = 0;
    int q = 0;
    double sigma2 = 1.0;
    double scale = 1.0;

    int p() const { return static_cast<int>(basis.rows()); }
};

SpectrumProblem alignment_coefficients(const CovarianceModel& sigma, const Matrix& b_star,
                                       const Matrix& sigma_alpha, const SpectrumSettings& settings);

struct SpectrumSolution {
    Vector r;  // weights over the h support directions, kInfinity allowed
    Vector x;  // x_i = 1/(1 + eta_i b0 / r_i)
    std::optional<SelectionRegime> regime;  // set by the bias minimizer only
    int h0 = -1;
    int h1 = 0;
    double objective = 0.0;
    double c = 1.0;   // free scale
    double b0 = 1.0;  // fixed point induced by r (b0 = c for x-space constructions)
    bool converged = true;
    int iterations = 0;
};

// Largest h~ in {n..h1} with sum_{i<=h~} phi_h~/phi_i >= h~ - n, for phi
// positive and nonincreasing. Empty when n >= h1 (hard selection).
std::optional<int> compute_h0(const Vector& phi_positive, int n);

// r_i = c eta_i; V* = n / (h - n).
SpectrumSolution minimize_variance_spectrum(const Vector& eta, int n, double c = 1.0);

// Soft (h1 > n): water-filling weights on the top h0 directions, infinite
// weight beyond. Hard (h1 <= n): r_i = c eta_i on the h1 informative
// directions, infinite beyond, objective 0.
SpectrumSolution minimize_bias_spectrum(const SpectrumProblem& prob, double c = 1.0);

// Finite weights approaching the hard-selection optimum as c -> 0:
// eta_i on informative directions, eta_i / c elsewhere.
Vector hard_selection_path(const SpectrumProblem& prob, double c);

Vector to_x_space(const Vector& r, const Vector& eta, double b0);
Vector from_x_space(const Vector& x, const Vector& eta, double b0);
bool is_feasible(const Vector& x, int n, double tol = 1e-9);

// Euclidean projection onto {x in [0,1]^h : sum x = h - n}.
Vector project_feasible(const Vector& y, int n);

struct XValue {
    double value = 0.0;
    Vector grad;
};

// (2n - h + |x|^2) / (h - n - |x|^2); infinite at the vertices.
XValue variance_x(const Vector& x, int n);
XValue bias_avg_x(const SpectrumProblem& prob, const Vector& x);
XValue bias_worst_x(const SpectrumProblem& prob, const Vector& x);

// B + ((V + B)/2)^2 + sigma^2 V
XValue relaxed_objective_x(const SpectrumProblem& prob, SpectrumObjective obj, const Vector& x);
// B + (B + sigma^2) V, the exact risk in x coordinates
XValue direct_objective_x(const SpectrumProblem& prob, SpectrumObjective obj, const Vector& x);

struct SpectrumSolverOptions {
    int max_iter = 20000;
    double tol = 1e-13;
    int starts = 10;
    std::uint64_t seed = 0;
    double c = 1.0;
};

SpectrumSolution solve_relaxed(const SpectrumProblem& prob, SpectrumObjective obj,
                               const SpectrumSolverOptions& opt = {});
SpectrumSolution solve_direct(const SpectrumProblem& prob, SpectrumObjective obj,
                              const SpectrumSolverOptions& opt = {});

// Penalty in the Sigma eigenbasis carrying the solution weights; directions
// outside the support of Sigma get `fill`.
Penalty solution_penalty(const SpectrumProblem& prob, const Vector& r, double fill = 1.0);

}  // namespace featrisk
