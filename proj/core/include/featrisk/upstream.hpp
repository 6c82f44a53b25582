#pragma once

#include "featrisk/asymptotics.hpp"
#include "featrisk/linalg.hpp"
#include "featrisk/model.hpp"
#include "featrisk/penalty.hpp"
#include "featrisk/rng.hpp"

#include <cstdint>
#include <vector>

namespace featrisk {

struct UpstreamConfig {
    int n_pre = 0;             // samples per source task, must exceed p
    double sigma2_pre = 0.0;   // upstream label-noise variance
    bool shared_design = true; // one X_pre for all tasks, else one per task
};

struct UpstreamData {
    UpstreamConfig config;
    std::vector<Matrix> x;  // one n_pre x p design, or q of them
    Matrix y;               // n_pre x q, column i is task i

    const Matrix& design(int task) const { return x.size() == 1 ? x.front() : x[static_cast<std::size_t>(task)]; }
};

struct RepresentationEstimate {
    Matrix b_tilde;         // p x q OLS estimates
    Vector residual_norms;  // ||X b~_i - y_i|| per task
    UpstreamConfig config;
};

UpstreamData generate_upstream(const ProblemInstance& inst, const UpstreamConfig& config, Rng& rng);

// Per-task OLS through a QR of the design. Throws NumericError if X^T X is singular.
RepresentationEstimate estimate_representation(const UpstreamData& data, int threads = 1);

struct ScalingRow {
    int n_pre = 0;
    double error = 0.0;   // mean over seeds of |R~_avg - R_avg|
    double se = 0.0;
    double median = 0.0;
    std::vector<double> per_seed;
};

struct ScalingResult {
    std::vector<ScalingRow> rows;
    double slope = 0.0;  // least-squares slope of log(error) against log(n_pre)
    double intercept = 0.0;
    double reference = 0.0;  // R_avg with the true B*
};

struct ScalingOptions {
    double sigma2_pre = 0.01;
    int seeds = 10;
    std::uint64_t seed = 0;
    int n = 1;  // downstream sample size
    bool shared_design = true;
    int threads = 1;
};

// For each n_pre and seed: estimate B~ upstream, then compare R_avg with B~
// in place of B* against R_avg with B*, keeping the penalty fixed. Every
// (seed, n_pre) cell uses its own upstream draw.
ScalingResult scaling_experiment(const ProblemInstance& inst, const Penalty& pen,
                                 const std::vector<int>& n_pre_grid, const ScalingOptions& opt);

// n_pre values log-spaced over [lo, hi], rounded and deduplicated.
std::vector<int> log_grid(int lo, int hi, int points);

}  // namespace featrisk
