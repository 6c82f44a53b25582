#include "featrisk/penalty.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <stdexcept>

using namespace featrisk;

namespace {

// Closed form of Gamma written from the joint loss after eliminating alpha.
Matrix gamma_reference(const Matrix& b, double la, double lb, double l) {
    const auto p = b.rows();
    const auto k = b.cols();
    const Matrix inner = (b.transpose() * b + (2.0 * la / l) * Matrix::Identity(k, k)).inverse();
    const Matrix proj = Matrix::Identity(p, p) - b * inner * b.transpose();
    return l * proj * proj + la * b * inner * inner * b.transpose() + lb * Matrix::Identity(p, p);
}

}  // namespace

TEST(ShrinkProfile, Endpoints) {
    const RegularizationParams lam{0.7, 0.2, 1.3};
    EXPECT_NEAR(shrink_profile(0.0, lam), 0.2 + 1.3, 1e-14);
    EXPECT_DOUBLE_EQ(shrink_profile(kInfinity, lam), 0.2);
}

TEST(ShrinkProfile, HandValue) {
    EXPECT_NEAR(shrink_profile(2.0, {1.0, 0.0, 1.0}), 0.375, 1e-15);
}

TEST(ShrinkProfile, StrictlyDecreasingAndBounded) {
    const RegularizationParams lam{0.3, 0.1, 2.0};
    double prev = shrink_profile(0.0, lam);
    for (int i = 1; i <= 1000; ++i) {
        const double d2 = 0.02 * i;
        const double r = shrink_profile(d2, lam);
        ASSERT_LT(r, prev);
        ASSERT_GE(r, lam.lambda_beta);
        ASSERT_LE(r, lam.lambda_beta + lam.lambda);
        prev = r;
    }
}

TEST(ShrinkProfile, DerivativeMatchesCentralDifference) {
    const RegularizationParams lam{0.3, 0.1, 2.0};
    for (double d2 : {0.0 + 1e-3, 0.5, 3.0, 40.0}) {
        const double fd = (shrink_profile(d2 + 1e-6, lam) - shrink_profile(d2 - 1e-6, lam)) / 2e-6;
        EXPECT_NEAR(shrink_profile_d2(d2, lam), fd, 1e-7);
    }
}

TEST(Params, Validation) {
    EXPECT_THROW((RegularizationParams{0.0, 1.0, 1.0}.validate()), std::invalid_argument);
    EXPECT_THROW((RegularizationParams{1.0, -1.0, 1.0}.validate()), std::invalid_argument);
    EXPECT_THROW((RegularizationParams{1.0, 1.0, 0.0}.validate()), std::invalid_argument);
    EXPECT_NO_THROW((RegularizationParams{1.0, 0.0, 1.0}.validate()));
}

TEST(Representation, SvdFactorsReconstruct) {
    Rng rng = make_stream(1, StreamDomain::test);
    const Matrix b = standard_normal(8, 3, rng);
    const Representation rep(b);
    const Matrix& u = rep.left();
    const Matrix& o = rep.right();
    EXPECT_LT(max_abs(u.transpose() * u - Matrix::Identity(8, 8)), 1e-10);
    EXPECT_LT(max_abs(o.transpose() * o - Matrix::Identity(3, 3)), 1e-10);
    Matrix d = Matrix::Zero(8, 3);
    for (int i = 0; i < 3; ++i) d(i, i) = rep.d()(i);
    EXPECT_LT(max_abs(u * d * o.transpose() - b), 1e-9 * max_abs(b));
    EXPECT_EQ(rep.d().size(), 8);
    EXPECT_EQ(rep.d().tail(5).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_GE(rep.d().minCoeff(), 0.0);
}

TEST(BuildPenalty, IdentityRepresentationIsScaledIdentity) {
    const RegularizationParams lam{0.4, 0.3, 1.7};
    const Penalty pen = build_penalty(Representation(Matrix::Identity(5, 5)), lam);
    EXPECT_LT(max_abs(pen.gamma() - shrink_profile(1.0, lam) * Matrix::Identity(5, 5)), 1e-12);
}

TEST(BuildPenalty, LimitsGiveRidge) {
    Rng rng = make_stream(2, StreamDomain::test);
    const Representation rep(standard_normal(6, 2, rng));
    const RegularizationParams lam{0.4, 0.3, 1.7};
    for (PenaltyLimit lim : {PenaltyLimit::lambda_to_zero, PenaltyLimit::lambda_alpha_to_zero}) {
        const Penalty pen = build_penalty(rep, lam, lim);
        EXPECT_LT(max_abs(pen.gamma() - 0.3 * Matrix::Identity(6, 6)), 1e-14);
    }
    EXPECT_THROW(build_penalty(rep, lam, PenaltyLimit::strong_featurization), std::invalid_argument);
    EXPECT_THROW(build_penalty(rep, {0.4, 0.0, 1.7}, PenaltyLimit::lambda_to_zero), std::invalid_argument);
}

TEST(BuildPenalty, SvdRouteMatchesClosedForm) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng = make_stream(seed, StreamDomain::test);
        const Matrix b = standard_normal(8, 3, rng);
        const RegularizationParams lam{rng.uniform(0.1, 2), rng.uniform(0.1, 2), rng.uniform(0.1, 2)};
        const Penalty pen = build_penalty(Representation(b), lam);
        const Matrix ref = gamma_reference(b, lam.lambda_alpha, lam.lambda_beta, lam.lambda);
        EXPECT_LT(max_abs(pen.gamma() - ref), 1e-9 * max_abs(ref));
        EXPECT_LT(max_abs(gamma_direct(b, lam) - ref), 1e-9 * max_abs(ref));
        EXPECT_LT(max_abs(pen.gamma_sqrt() * pen.gamma_inv_sqrt() - Matrix::Identity(8, 8)), 1e-9);
        EXPECT_LT(max_abs(pen.gamma_inv() * pen.gamma() - Matrix::Identity(8, 8)), 1e-9);
        EXPECT_GE(pen.r().minCoeff(), lam.lambda_beta - 1e-15);
        EXPECT_LE(pen.r().maxCoeff(), lam.lambda_beta + lam.lambda + 1e-15);
    }
}

TEST(BuildPenalty, LargerSingularValueGetsSmallerWeight) {
    Rng rng = make_stream(3, StreamDomain::test);
    const Representation rep(standard_normal(7, 4, rng));
    const Penalty pen = build_penalty(rep, {0.5, 0.1, 1.0});
    for (int i = 1; i < 7; ++i) {
        if (rep.d()(i - 1) > rep.d()(i)) {
            EXPECT_LT(pen.r()(i - 1), pen.r()(i));
        }
    }
}

TEST(Penalty, InfiniteWeightsZeroTheInverse) {
    Vector r(3);
    r << 2.0, kInfinity, 0.5;
    const Penalty pen = penalty_from_weights(Matrix::Identity(3, 3), r);
    EXPECT_TRUE(pen.has_infinite());
    EXPECT_EQ(pen.gamma_inv_sqrt()(1, 1), 0.0);
    EXPECT_NEAR(pen.gamma_inv()(2, 2), 2.0, 1e-15);
    EXPECT_THROW(pen.gamma(), std::logic_error);
    r(0) = 0.0;
    EXPECT_THROW(penalty_from_weights(Matrix::Identity(3, 3), r), std::invalid_argument);
    Matrix bad = Matrix::Identity(3, 3);
    bad(0, 1) = 0.1;
    EXPECT_THROW(Penalty(bad, Vector::Ones(3)), std::invalid_argument);
}

TEST(AssumptionNormsReport, FourQuantities) {
    const CovarianceModel sigma = make_covariance(Ar1Spec{2, 0.5});
    Vector r(2);
    r << 4.0, 0.25;
    const AssumptionNorms a = assumption_norms(sigma, penalty_from_weights(Matrix::Identity(2, 2), r));
    EXPECT_NEAR(a.inv_eta_min, 2.0, 1e-12);
    EXPECT_NEAR(a.sigma_norm, 1.5, 1e-12);
    EXPECT_NEAR(a.gamma_norm, 4.0, 1e-12);
    EXPECT_NEAR(a.gamma_inv_norm, 4.0, 1e-12);
    EXPECT_NEAR(a.largest(), 4.0, 1e-12);
    EXPECT_TRUE(a.exceeds(3.0));
}
