#include "featrisk/penalty.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace featrisk {

void RegularizationParams::validate() const {
    if (!(lambda_alpha > 0.0) || !(lambda > 0.0) || !(lambda_beta >= 0.0) ||
        !std::isfinite(lambda_alpha) || !std::isfinite(lambda) || !std::isfinite(lambda_beta)) {
        throw std::invalid_argument(
            "regularization: lambda_alpha and lambda must be positive, lambda_beta nonnegative");
    }
}

double shrink_profile(double d2, const RegularizationParams& lam) {
    if (std::isinf(d2)) {
        return lam.lambda_beta;
    }
    const double kappa = lam.kappa();
    const double den = d2 + kappa;
    return lam.lambda_beta + lam.lambda_alpha * (d2 + 2.0 * kappa) / (den * den);
}

double shrink_profile_d2(double d2, const RegularizationParams& lam) {
    if (std::isinf(d2)) {
        return 0.0;
    }
    const double kappa = lam.kappa();
    const double den = d2 + kappa;
    return -lam.lambda_alpha * (d2 + 3.0 * kappa) / (den * den * den);
}

Representation::Representation(const Matrix& b_hat) : b_(b_hat) {
    if (b_.rows() == 0 || b_.cols() == 0) {
        throw std::invalid_argument("representation must be nonempty");
    }
    if (!b_.allFinite()) {
        throw std::invalid_argument("representation has non-finite entries");
    }
    Eigen::BDCSVD<Matrix> svd(b_, Eigen::ComputeFullU | Eigen::ComputeFullV);
    left_ = svd.matrixU();
    right_ = svd.matrixV();
    d_ = Vector::Zero(b_.rows());
    const Vector& s = svd.singularValues();
    d_.head(s.size()) = s;
}

Penalty::Penalty(Matrix basis, Vector r) : basis_(std::move(basis)), r_(std::move(r)) {
    const Eigen::Index p = r_.size();
    if (basis_.rows() != p || basis_.cols() != p) {
        throw std::invalid_argument("penalty: basis must be p x p");
    }
    if (max_abs(basis_.transpose() * basis_ - Matrix::Identity(p, p)) > 1e-8) {
        throw std::invalid_argument("penalty: basis is not orthonormal");
    }
    Vector inv(p);
    Vector inv_sqrt(p);
    for (Eigen::Index i = 0; i < p; ++i) {
        const double ri = r_(i);
        if (std::isnan(ri) || !(ri > 0.0)) {
            throw std::invalid_argument("penalty: weights must be positive (Gamma not invertible)");
        }
        if (std::isinf(ri)) {
            has_infinite_ = true;
            inv(i) = 0.0;
            inv_sqrt(i) = 0.0;
        } else {
            inv(i) = 1.0 / ri;
            inv_sqrt(i) = 1.0 / std::sqrt(ri);
        }
    }
    gamma_inv_ = spectral_compose(basis_, inv);
    gamma_inv_sqrt_ = spectral_compose(basis_, inv_sqrt);
    if (!has_infinite_) {
        gamma_ = spectral_compose(basis_, r_);
        gamma_sqrt_ = spectral_compose(basis_, r_.cwiseSqrt());
    }
}

const Matrix& Penalty::gamma() const {
    if (has_infinite_) {
        throw std::logic_error("penalty: Gamma has infinite weights");
    }
    return gamma_;
}

const Matrix& Penalty::gamma_sqrt() const {
    if (has_infinite_) {
        throw std::logic_error("penalty: Gamma has infinite weights");
    }
    return gamma_sqrt_;
}

Penalty build_penalty(const Representation& rep, const RegularizationParams& lam,
                      PenaltyLimit limit) {
    lam.validate();
    const int p = rep.p();
    switch (limit) {
        case PenaltyLimit::lambda_to_zero:
        case PenaltyLimit::lambda_alpha_to_zero:
            if (!(lam.lambda_beta > 0.0)) {
                throw std::invalid_argument(
                    "penalty limit Gamma -> lambda_beta I requires lambda_beta > 0");
            }
            return Penalty(Matrix::Identity(p, p), Vector::Constant(p, lam.lambda_beta));
        case PenaltyLimit::strong_featurization:
            throw std::invalid_argument(
                "strong featurization has no finite penalty; use fit_strong_featurization");
        case PenaltyLimit::none:
            break;
    }
    const Vector d2 = rep.d2();
    Vector r(p);
    for (int i = 0; i < p; ++i) {
        r(i) = shrink_profile(d2(i), lam);
    }
    return Penalty(rep.left(), r);
}

Penalty penalty_from_weights(const Matrix& basis, const Vector& r) {
    return Penalty(basis, r);
}

Matrix gamma_direct(const Matrix& b_hat, const RegularizationParams& lam) {
    lam.validate();
    const Eigen::Index p = b_hat.rows();
    const Eigen::Index k = b_hat.cols();
    const Matrix m = b_hat.transpose() * b_hat + lam.kappa() * Matrix::Identity(k, k);
    const Eigen::LDLT<Matrix> solver(m);
    const Matrix inv_bt = solver.solve(b_hat.transpose());  // M^{-1} B^T
    const Matrix proj = Matrix::Identity(p, p) - b_hat * inv_bt;
    const Matrix second = inv_bt.transpose() * inv_bt;      // B M^{-2} B^T
    Matrix g = lam.lambda * proj * proj + lam.lambda_alpha * second;
    g.diagonal().array() += lam.lambda_beta;
    return symmetrize(g);
}

double AssumptionNorms::largest() const {
    return std::max({inv_eta_min, sigma_norm, gamma_norm, gamma_inv_norm});
}

AssumptionNorms assumption_norms(const CovarianceModel& sigma, const Penalty& pen) {
    AssumptionNorms out;
    const double eta_min = sigma.eta_min_pos();
    out.inv_eta_min = eta_min > 0.0 ? 1.0 / eta_min : kInfinity;
    out.sigma_norm = sigma.p() > 0 ? sigma.eigenvalues()(0) : 0.0;
    out.gamma_norm = pen.r().maxCoeff();
    out.gamma_inv_norm = 1.0 / pen.r().minCoeff();
    return out;
}

}  // namespace featrisk
