#pragma once

#include "featrisk/linalg.hpp"
#include "featrisk/model.hpp"

namespace featrisk {

// lambda_alpha and lambda must be > 0. lambda_beta >= 0; zero is accepted
// as long as every squared singular value is finite, which keeps all
// penalty weights strictly positive.
struct RegularizationParams {
    double lambda_alpha = 1.0;
    double lambda_beta = 1.0;
    double lambda = 1.0;

    void validate() const;
    // 2 lambda_alpha / lambda
    double kappa() const { return 2.0 * lambda_alpha / lambda; }
};

// Limits that cannot be written as finite parameter values.
enum class PenaltyLimit {
    none,
    lambda_to_zero,        // Gamma -> lambda_beta I
    lambda_alpha_to_zero,  // Gamma -> lambda_beta I
    strong_featurization,  // lambda -> inf with lambda_beta -> 0; see fit_strong_featurization
};

// r(d^2) = lambda_beta + lambda_alpha (d^2 + 4 la/l) / (d^2 + 2 la/l)^2.
// d2 may be kInfinity, giving lambda_beta.
double shrink_profile(double d2, const RegularizationParams& lam);
// derivative with respect to d^2 (0 at infinity)
double shrink_profile_d2(double d2, const RegularizationParams& lam);

// Full SVD B = left * diag(d) * right^T, with left p x p and d padded by
// zeros to length p.
class Representation {
public:
    explicit Representation(const Matrix& b_hat);

    int p() const { return static_cast<int>(b_.rows()); }
    int k() const { return static_cast<int>(b_.cols()); }
    const Matrix& b() const { return b_; }
    const Matrix& left() const { return left_; }
    const Vector& d() const { return d_; }
    const Matrix& right() const { return right_; }
    Vector d2() const { return d_.cwiseAbs2(); }

private:
    Matrix b_;
    Matrix left_;
    Vector d_;
    Matrix right_;
};

// Gamma = basis diag(r) basis^T. Weights may be kInfinity: such directions
// are removed from the problem and get 0 in Gamma^{-1} and Gamma^{-1/2}.
// gamma() and gamma_sqrt() are only available when every weight is finite.
class Penalty {
public:
    Penalty(Matrix basis, Vector r);

    int p() const { return static_cast<int>(r_.size()); }
    const Vector& r() const { return r_; }
    const Matrix& basis() const { return basis_; }
    bool has_infinite() const { return has_infinite_; }
    const Matrix& gamma() const;
    const Matrix& gamma_sqrt() const;
    const Matrix& gamma_inv() const { return gamma_inv_; }
    const Matrix& gamma_inv_sqrt() const { return gamma_inv_sqrt_; }

private:
    Matrix basis_;
    Vector r_;
    bool has_infinite_ = false;
    Matrix gamma_;
    Matrix gamma_sqrt_;
    Matrix gamma_inv_;
    Matrix gamma_inv_sqrt_;
};

Penalty build_penalty(const Representation& rep, const RegularizationParams& lam,
                      PenaltyLimit limit = PenaltyLimit::none);

// Penalty with prescribed eigenbasis and weights (aligned constructions).
Penalty penalty_from_weights(const Matrix& basis, const Vector& r);

// lambda (I - B (B^T B + kappa I)^{-1} B^T)^2 + la B (B^T B + kappa I)^{-2} B^T + lb I
Matrix gamma_direct(const Matrix& b_hat, const RegularizationParams& lam);

// The four quantities bounded by the regularity constant of the asymptotic
// theory. They are reported, never used as a gate.
struct AssumptionNorms {
    double inv_eta_min = 0.0;
    double sigma_norm = 0.0;
    double gamma_norm = 0.0;
    double gamma_inv_norm = 0.0;

    double largest() const;
    bool exceeds(double threshold) const { return largest() > threshold; }
};

AssumptionNorms assumption_norms(const CovarianceModel& sigma, const Penalty& pen);

}  // namespace featrisk
