#pragma once

#include "featrisk/linalg.hpp"
#include "featrisk/model.hpp"
#include "featrisk/penalty.hpp"

#include <optional>

namespace featrisk {

// Eigenvalues of X Gamma^{-1} X^T at or below this fraction of the largest
// are treated as zero in the pseudo-inverse.
inline constexpr double kPinvCutoff = 1e-12;

struct FittedPredictor {
    Vector beta;   // p
    Vector alpha;  // k (empty when fitted from a bare penalty)
    int n = 0;
    int rank = 0;       // kept directions of X Gamma^{-1} X^T
    int truncated = 0;  // n - rank

    double predict(const Vector& x) const { return x.dot(beta); }
};

// Minimum Gamma-norm interpolator beta = Gamma^{-1} X^T (X Gamma^{-1} X^T)^+ y.
FittedPredictor fit_with_penalty(const Dataset& data, const Penalty& pen);

// Full fit: beta as above, alpha = (B^T B + 2 la/l I)^{-1} B^T beta. In the
// lambda -> 0 limit alpha -> 0; in the lambda_alpha -> 0 limit alpha is the
// minimum-norm solution B^+ beta.
FittedPredictor fit(const Dataset& data, const Representation& rep,
                    const RegularizationParams& lam, PenaltyLimit limit = PenaltyLimit::none);

// alpha0 = (X B)^+ y, beta = B alpha0.
FittedPredictor fit_strong_featurization(const Dataset& data, const Representation& rep);

// Prediction through the whitened problem: x~ = Gamma^{-1/2} x,
// y^ = x~^T (X~^T X~)^+ X~^T y with X~ = X Gamma^{-1/2}.
double predict_whitened(const Dataset& data, const Penalty& pen, const Vector& x_new);

// (X^T X + lambda0 Gamma)^{-1} X^T y, used to check the ridgeless limit.
Vector generalized_ridge(const Dataset& data, const Penalty& pen, double lambda0);

// (beta - beta*)^T Sigma (beta - beta*)
double empirical_risk(const Vector& beta_hat, const Vector& beta_star, const Matrix& sigma);

}  // namespace featrisk
