#include "featrisk/errors.hpp"
#include "featrisk/upstream.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace featrisk;

namespace {

ProblemInstance instance(int p, int q, std::uint64_t seed) {
    CovarianceModel sigma = make_covariance(Ar1Spec{p, 0.5});
    Rng rng = make_stream(seed, StreamDomain::ground_truth);
    GroundTruthRepresentation truth = sample_ground_truth(p, q, make_covariance(IdentitySpec{p}), rng);
    return make_instance(std::move(sigma), std::move(truth), {Matrix::Identity(q, q), 1.0, 1.0, {}}, seed);
}

Penalty isotropic(int p) {
    return penalty_from_weights(Matrix::Identity(p, p), Vector::Ones(p));
}

}  // namespace

TEST(Upstream, NoiselessRecoveryIsExact) {
    const ProblemInstance inst = instance(8, 3, 1);
    Rng rng = make_stream(1, StreamDomain::test);
    for (bool shared : {true, false}) {
        const UpstreamData d = generate_upstream(inst, {20, 0.0, shared}, rng);
        EXPECT_EQ(d.x.size(), shared ? 1u : 3u);
        const RepresentationEstimate e = estimate_representation(d);
        EXPECT_LT((e.b_tilde - inst.truth.b).cwiseAbs().maxCoeff(), 1e-10);
        EXPECT_LT(e.residual_norms.maxCoeff(), 1e-10);
    }
    ScalingOptions opt;
    opt.sigma2_pre = 0.0;
    opt.seeds = 3;
    opt.n = 4;
    const ScalingResult r = scaling_experiment(inst, isotropic(8), {20, 40}, opt);
    for (const ScalingRow& row : r.rows) EXPECT_LE(row.error, 1e-8);
}

TEST(Upstream, NormalEquationsHold) {
    const ProblemInstance inst = instance(10, 4, 2);
    Rng rng = make_stream(2, StreamDomain::test);
    const UpstreamData d = generate_upstream(inst, {30, 0.3, false}, rng);
    const RepresentationEstimate e = estimate_representation(d, 2);
    for (int i = 0; i < 4; ++i) {
        const Matrix& x = d.design(i);
        const Vector g = x.transpose() * (x * e.b_tilde.col(i) - d.y.col(i));
        EXPECT_LT(g.norm(), 1e-8 * x.norm() * d.y.col(i).norm());
    }
}

TEST(Upstream, UnbiasedWithExpectedSpread) {
    const int p = 6, q = 3, n_pre = 20, draws = 2000;
    const double s2 = 0.5;
    const ProblemInstance inst = instance(p, q, 3);
    const Vector alpha = Eigen::Vector3d(1.0, -0.5, 2.0);
    Matrix mean = Matrix::Zero(p, q);
    double sq = 0.0;
    Rng rng = make_stream(3, StreamDomain::test);
    for (int k = 0; k < draws; ++k) {
        const Matrix diff = estimate_representation(generate_upstream(inst, {n_pre, s2, true}, rng)).b_tilde -
                            inst.truth.b;
        mean += diff / draws;
        sq += (diff * alpha).squaredNorm() / draws;
    }
    // E (X^T X)^{-1} = Sigma^{-1} / (n_pre - p - 1) for Gaussian rows
    const double expected = s2 * alpha.squaredNorm() * inst.sigma.sigma().inverse().trace() / (n_pre - p - 1);
    EXPECT_NEAR(sq, expected, 0.1 * expected);
    const double per_entry_sd = std::sqrt(expected / alpha.squaredNorm() / p);
    EXPECT_LT(mean.cwiseAbs().maxCoeff(), 5.0 * per_entry_sd / std::sqrt(static_cast<double>(draws)));
}

TEST(Upstream, ErrorScalesWithNoiseLevel) {
    const ProblemInstance inst = instance(8, 3, 4);
    ScalingOptions opt;
    opt.seeds = 4;
    opt.n = 4;
    opt.sigma2_pre = 1e-4;
    const ScalingResult a = scaling_experiment(inst, isotropic(8), {50, 200}, opt);
    opt.sigma2_pre = 2e-4;
    const ScalingResult b = scaling_experiment(inst, isotropic(8), {50, 200}, opt);
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        EXPECT_NEAR(b.rows[i].error / a.rows[i].error, std::sqrt(2.0), 0.2 * std::sqrt(2.0));
    }
    EXPECT_NEAR(a.reference, b.reference, 0.0);
}

TEST(Upstream, MedianErrorDecreasesWithSamples) {
    const ProblemInstance inst = instance(8, 3, 5);
    ScalingOptions opt;
    opt.seeds = 15;
    opt.n = 4;
    const ScalingResult r = scaling_experiment(inst, isotropic(8), {40, 400, 4000}, opt);
    ASSERT_EQ(r.rows.size(), 3u);
    EXPECT_GT(r.rows[0].median, r.rows[1].median);
    EXPECT_GT(r.rows[1].median, r.rows[2].median);
    EXPECT_LT(r.slope, 0.0);
}

TEST(Upstream, DeterministicAcrossThreadCounts) {
    const ProblemInstance inst = instance(8, 3, 6);
    ScalingOptions opt;
    opt.seeds = 4;
    opt.n = 4;
    opt.threads = 1;
    const ScalingResult a = scaling_experiment(inst, isotropic(8), {20, 60}, opt);
    opt.threads = 3;
    const ScalingResult b = scaling_experiment(inst, isotropic(8), {20, 60}, opt);
    for (std::size_t i = 0; i < a.rows.size(); ++i) EXPECT_EQ(a.rows[i].per_seed, b.rows[i].per_seed);
    EXPECT_EQ(a.slope, b.slope);
}

TEST(Upstream, RejectsBadInputs) {
    const ProblemInstance inst = instance(8, 2, 7);
    Rng rng = make_stream(7, StreamDomain::test);
    EXPECT_THROW(generate_upstream(inst, {8, 0.1, true}, rng), std::invalid_argument);
    EXPECT_THROW(generate_upstream(inst, {20, -1.0, true}, rng), std::invalid_argument);

    UpstreamData d = generate_upstream(inst, {20, 0.1, true}, rng);
    d.x.front().col(3) = d.x.front().col(2);
    EXPECT_THROW(estimate_representation(d), NumericError);
    EXPECT_THROW(scaling_experiment(inst, isotropic(8), {}, {}), std::invalid_argument);
}

TEST(LogGrid, EndpointsAndDeduplication) {
    const std::vector<int> g = log_grid(200, 2000, 60);
    EXPECT_EQ(g.front(), 200);
    EXPECT_EQ(g.back(), 2000);
    EXPECT_EQ(g.size(), 60u);
    for (std::size_t i = 1; i < g.size(); ++i) EXPECT_LT(g[i - 1], g[i]);
    EXPECT_EQ(log_grid(1, 3, 10), (std::vector<int>{1, 2, 3}));
    EXPECT_THROW(log_grid(0, 3, 2), std::invalid_argument);
}
