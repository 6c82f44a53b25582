#include "featrisk/predictor.hpp"

#include <stdexcept>

namespace featrisk {

namespace {

void check_data(const Dataset& data, int p) {
    if (data.x.cols() != p) {
        throw std::invalid_argument("fit: X has wrong number of columns");
    }
    if (data.y.size() != data.x.rows()) {
        throw std::invalid_argument("fit: y length does not match X");
    }
}

}  // namespace

FittedPredictor fit_with_penalty(const Dataset& data, const Penalty& pen) {
    check_data(data, pen.p());
    const Matrix gx = pen.gamma_inv() * data.x.transpose();  // Gamma^{-1} X^T
    const Matrix gram = symmetrize(data.x * gx);
    FittedPredictor out;
    out.n = data.n();
    const Matrix gram_pinv = pinv_psd(gram, kPinvCutoff, &out.rank);
    out.truncated = out.n - out.rank;
    out.beta = gx * (gram_pinv * data.y);
    return out;
}

FittedPredictor fit(const Dataset& data, const Representation& rep,
                    const RegularizationParams& lam, PenaltyLimit limit) {
    if (limit == PenaltyLimit::strong_featurization) {
        return fit_strong_featurization(data, rep);
    }
    const Penalty pen = build_penalty(rep, lam, limit);
    FittedPredictor out = fit_with_penalty(data, pen);
    const Matrix& b = rep.b();
    const Eigen::Index k = b.cols();
    if (limit == PenaltyLimit::lambda_to_zero) {
        out.alpha = Vector::Zero(k);
    } else if (limit == PenaltyLimit::lambda_alpha_to_zero) {
        out.alpha = b.completeOrthogonalDecomposition().solve(out.beta);
    } else {
        const Matrix m = b.transpose() * b + lam.kappa() * Matrix::Identity(k, k);
        out.alpha = m.ldlt().solve(b.transpose() * out.beta);
    }
    return out;
}

FittedPredictor fit_strong_featurization(const Dataset& data, const Representation& rep) {
    check_data(data, rep.p());
    const Matrix xb = data.x * rep.b();
    Eigen::BDCSVD<Matrix> svd(xb, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();
    FittedPredictor out;
    out.n = data.n();
    Vector coef = Vector::Zero(s.size());
    const Vector uty = svd.matrixU().transpose() * data.y;
    const double cutoff = s.size() > 0 ? kPinvCutoff * s(0) : 0.0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s(i) > cutoff && s(i) > 0.0) {
            coef(i) = uty(i) / s(i);
            ++out.rank;
        }
    }
    out.truncated = out.n - out.rank;
    out.alpha = svd.matrixV() * coef;
    out.beta = rep.b() * out.alpha;
    return out;
}

double predict_whitened(const Dataset& data, const Penalty& pen, const Vector& x_new) {
    check_data(data, pen.p());
    const Matrix xt = data.x * pen.gamma_inv_sqrt();
    const Vector xt_new = pen.gamma_inv_sqrt() * x_new;
    const Matrix gram_pinv = pinv_psd(symmetrize(xt.transpose() * xt), kPinvCutoff);
    return xt_new.dot(gram_pinv * (xt.transpose() * data.y));
}

Vector generalized_ridge(const Dataset& data, const Penalty& pen, double lambda0) {
    check_data(data, pen.p());
    const Matrix a = data.x.transpose() * data.x + lambda0 * pen.gamma();
    return a.ldlt().solve(data.x.transpose() * data.y);
}

double empirical_risk(const Vector& beta_hat, const Vector& beta_star, const Matrix& sigma) {
    if (beta_hat.size() != beta_star.size() || sigma.rows() != beta_hat.size()) {
        throw std::invalid_argument("empirical_risk: dimension mismatch");
    }
    const Vector d = beta_hat - beta_star;
    return d.dot(sigma * d);
}

}  // namespace featrisk
