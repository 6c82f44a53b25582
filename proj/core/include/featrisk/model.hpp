#pragma once

#include "featrisk/linalg.hpp"
#include "featrisk/rng.hpp"

#include <cstdint>
#include <optional>
#include <variant>

namespace featrisk {

struct Ar1Spec {
    int p = 0;
    double rho = 0.0;  // Sigma_ij = rho^|i-j|
};

struct WishartJitterSpec {
    int p = 0;
    int m = 0;  // (1/m) W W^T with W p x m standard normal
    double jitter = 0.0;
};

struct IdentitySpec {
    int p = 0;
};

struct ExplicitSpec {
    Matrix sigma;
};

using CovarianceSpec = std::variant<Ar1Spec, WishartJitterSpec, IdentitySpec, ExplicitSpec>;

// Eigendecomposed PSD covariance. Eigenvalues are sorted descending, small
// negative eigenvalues (round-off) are clamped to zero, and the rank counts
// eigenvalues above kRankTol * eta_1.
class CovarianceModel {
public:
    static constexpr double kSymmetryTol = 1e-12;
    static constexpr double kNegativeTol = 1e-12;
    static constexpr double kRankTol = 1e-10;

    explicit CovarianceModel(const Matrix& sigma);

    int p() const { return static_cast<int>(sigma_.rows()); }
    const Matrix& sigma() const { return sigma_; }
    const Vector& eigenvalues() const { return eta_; }
    const Matrix& eigenvectors() const { return u_; }
    int rank() const { return rank_; }
    // smallest eigenvalue counted in the rank (0 if the rank is 0)
    double eta_min_pos() const { return rank_ > 0 ? eta_(rank_ - 1) : 0.0; }
    // symmetric square root from the eigendecomposition (works for singular Sigma)
    const Matrix& sqrt() const { return sqrt_; }

private:
    Matrix sigma_;
    Vector eta_;
    Matrix u_;
    Matrix sqrt_;
    int rank_ = 0;
};

// rng is required only for the wishart_jitter kind.
CovarianceModel make_covariance(const CovarianceSpec& spec, Rng* rng = nullptr);

struct GroundTruthRepresentation {
    Matrix b;      // p x q, column i is source task i
    SymEig gram;   // eigenpairs of B B^T, descending

    int p() const { return static_cast<int>(b.rows()); }
    int q() const { return static_cast<int>(b.cols()); }
};

GroundTruthRepresentation make_ground_truth(const Matrix& b);

// q i.i.d. columns drawn from N(0, column_cov).
GroundTruthRepresentation sample_ground_truth(int p, int q, const CovarianceModel& column_cov,
                                              Rng& rng);

// Prior alpha = q^{-1/2} (c * shape)^{1/2} xi, so E beta beta^T = (c/q) B shape B^T.
struct TaskModel {
    Matrix shape;          // q x q PSD
    double scale = 1.0;    // prior scale c
    double sigma2 = 1.0;   // label-noise variance
    std::optional<double> snr;

    Matrix sigma_alpha() const { return scale * shape; }
};

// Analytic prior scale with E||beta||^2 = snr^2 * sigma2.
double calibrate_snr(const Matrix& b, const Matrix& shape, double sigma2, double snr);

struct ProblemInstance {
    CovarianceModel sigma;
    GroundTruthRepresentation truth;
    TaskModel task;
    std::uint64_t seed = 0;

    int p() const { return sigma.p(); }
    int q() const { return truth.q(); }
};

// Builds an instance; when task.snr is set the scale is recalibrated.
ProblemInstance make_instance(CovarianceModel sigma, GroundTruthRepresentation truth,
                              TaskModel task, std::uint64_t seed);

struct TaskDraw {
    Vector alpha;
    Vector beta;
};

struct Dataset {
    Matrix x;    // n x p
    Vector y;
    Vector eps;

    int n() const { return static_cast<int>(x.rows()); }
};

TaskDraw sample_task(const ProblemInstance& inst, Rng& rng);

// Rows i.i.d. N(0, Sigma) via Z Sigma^{1/2}.
Matrix sample_design(const CovarianceModel& sigma, int n, Rng& rng);

Dataset sample_data(const ProblemInstance& inst, const Vector& beta, int n, Rng& rng);

Matrix psd_sqrt(const Matrix& a);

}  // namespace featrisk
