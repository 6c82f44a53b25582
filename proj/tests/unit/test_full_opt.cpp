#include "featrisk/full_opt.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace featrisk;

namespace {

ObjectiveSetup random_setup(int p, int q, int n, std::uint64_t seed, ObjectiveMode mode) {
    Rng rng = make_stream(seed, StreamDomain::test);
    const Matrix w = standard_normal(p, 2 * p, rng);
    ObjectiveSetup s;
    s.sigma = w * w.transpose() / (2.0 * p) + 0.1 * Matrix::Identity(p, p);
    s.b_star = standard_normal(p, q, rng) / std::sqrt(static_cast<double>(p));
    s.sigma_alpha = Matrix::Identity(q, q);
    s.sigma2 = 0.5;
    s.n = n;
    s.scale = 1.0;
    s.mode = mode;
    return s;
}

double rel_err(const Matrix& a, const Matrix& b) {
    return (a - b).norm() / std::max(b.norm(), 1e-300);
}

OptimizerConfig small_config(ObjectiveMode mode, std::uint64_t seed) {
    OptimizerConfig c;
    c.mode = mode;
    c.step = 1e-2;
    c.max_episodes = 20;
    c.episode_length = 20;
    c.patience = 3;
    c.seed = seed;
    return c;
}

}  // namespace

TEST(Gradient, MatchesCentralDifferences) {
    for (ObjectiveMode mode : {ObjectiveMode::avg, ObjectiveMode::worst}) {
        for (int inst = 0; inst < 20; ++inst) {
            const ObjectiveSetup s = random_setup(12, 4, 6, 100 + inst, mode);
            const Matrix b = init_representation(12, 4, inst);
            const RegularizationParams lam = init_lambda(inst);
            const GradientBundle g = objective_gradient(s, b, lam);
            const GradientBundle fd = fd_gradient(s, b, lam);
            EXPECT_NEAR(g.value, objective_forward(s, b, lam), 1e-12 * std::abs(g.value));
            EXPECT_LT(rel_err(g.d_b, fd.d_b), 1e-5) << to_string(mode) << " instance " << inst;
            const Eigen::Vector3d gl(g.d_lambda[0], g.d_lambda[1], g.d_lambda[2]);
            const Eigen::Vector3d fl(fd.d_lambda[0], fd.d_lambda[1], fd.d_lambda[2]);
            EXPECT_LT(rel_err(gl, fl), 1e-5) << to_string(mode) << " instance " << inst;
        }
    }
}

TEST(Gradient, FixedPointSensitivity) {
    const ObjectiveSetup s = random_setup(10, 3, 4, 7, ObjectiveMode::avg);
    const GradientBundle g = objective_gradient(s, init_representation(10, 3, 1), init_lambda(1));
    const Vector t = g.t;
    const auto b0_of = [&](const Vector& tt) { return solve_b0(tt, s.n); };
    EXPECT_NEAR(b0_of(t), g.b0, 1e-12 * g.b0);
    const Vector fd = oracle::central_diff(b0_of, t, 1e-6 * t.minCoeff());
    EXPECT_LT(rel_err(g.db0_dt, fd), 1e-5);
}

TEST(Objective, ZeroRepresentationIsIsotropic) {
    const ObjectiveSetup s = random_setup(8, 2, 3, 8, ObjectiveMode::avg);
    const CovarianceModel sigma(s.sigma);
    const WhitenedSpectrum w = whiten(sigma, penalty_from_weights(Matrix::Identity(8, 8), Vector::Ones(8)));
    const double plain = *averaged_objective(w, s.b_star, s.sigma_alpha, s.sigma2, s.n).risk_avg;
    EXPECT_NEAR(objective_forward(s, Matrix::Zero(8, 2), {0.7, 0.2, 1.9}), plain, 1e-10 * plain);
}

TEST(Objective, InvariantToCommonLambdaScale) {
    const ObjectiveSetup s = random_setup(8, 2, 3, 9, ObjectiveMode::worst);
    const Matrix b = init_representation(8, 2, 3);
    const RegularizationParams lam{0.4, 0.3, 2.0};
    const double base = objective_forward(s, b, lam);
    for (double c : {1e-3, 0.5, 17.0}) {
        EXPECT_NEAR(objective_forward(s, b, {c * 0.4, c * 0.3, c * 2.0}), base, 1e-10 * base);
    }
}

TEST(Objective, InvariantToRightRotation) {
    Rng rng = make_stream(10, StreamDomain::test);
    const ObjectiveSetup s = random_setup(8, 3, 3, 10, ObjectiveMode::avg);
    const Matrix b = init_representation(8, 3, 4);
    const Matrix o = standard_normal(3, 3, rng).householderQr().householderQ();
    const RegularizationParams lam{0.4, 0.3, 2.0};
    EXPECT_NEAR(objective_forward(s, b * o, lam), objective_forward(s, b, lam), 1e-10);
}

TEST(Objective, WorstEqualsAverageForOneTask) {
    ObjectiveSetup s = random_setup(8, 1, 3, 11, ObjectiveMode::worst);
    s.scale = 2.5;
    s.sigma_alpha = Matrix::Constant(1, 1, 2.5);
    ObjectiveSetup a = s;
    a.mode = ObjectiveMode::avg;
    const Matrix b = init_representation(8, 2, 5);
    const RegularizationParams lam{0.4, 0.3, 2.0};
    EXPECT_NEAR(objective_forward(s, b, lam), objective_forward(a, b, lam), 1e-12);
}

TEST(Optimizer, ImprovesAndIsReproducible) {
    const ObjectiveSetup s = random_setup(10, 2, 4, 12, ObjectiveMode::avg);
    const OptimizerConfig c = small_config(ObjectiveMode::avg, 3);
    const OptimizeResult a = optimize(c, s);
    const OptimizeResult b = optimize(c, s);
    ASSERT_FALSE(a.trace.empty());
    EXPECT_LE(a.value, a.initial_value);
    EXPECT_LT(a.value, a.trace.front().value);
    EXPECT_EQ(a.value, b.value);
    EXPECT_EQ(a.b, b.b);
    EXPECT_NEAR(objective_forward(s, a.b, a.lam), a.value, 1e-12 * a.value);
}

TEST(Optimizer, OracleFeaturizationKeepsRepresentation) {
    const ObjectiveSetup s = random_setup(10, 2, 4, 13, ObjectiveMode::worst);
    const OptimizeResult r = optimize_ofp(small_config(ObjectiveMode::worst, 4), s);
    EXPECT_EQ(r.b, s.b_star);
    EXPECT_LE(r.value, r.initial_value);
}

TEST(Optimizer, LearnedNoWorseThanOracleFeaturization) {
    const ObjectiveSetup s = random_setup(10, 2, 4, 14, ObjectiveMode::avg);
    const OptimizerConfig c = small_config(ObjectiveMode::avg, 5);
    const OptimizeResult ofp = optimize_ofp(c, s);
    const OptimizeResult eep = optimize_eep(c, s, ofp);
    EXPECT_LE(eep.value, ofp.value + 1e-12);
}

TEST(Optimizer, RejectsBadConfiguration) {
    const ObjectiveSetup s = random_setup(6, 1, 2, 15, ObjectiveMode::avg);
    OptimizerConfig c;
    c.step = 0.0;
    EXPECT_THROW(optimize(c, s), std::invalid_argument);
}

TEST(Heatmap, SelfAlignmentAndOrthogonality) {
    const ObjectiveSetup s = random_setup(7, 3, 2, 16, ObjectiveMode::avg);
    const AlignmentHeatmap hm = heatmap_alignment(s.b_star, s.b_star, s.sigma);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(std::abs(hm.m(i, i)), 1.0, 1e-10);
    EXPECT_LT((hm.n * hm.n.transpose() - Matrix::Identity(7, 7)).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_EQ(hm.spectrum.size(), 7);
    EXPECT_LT(hm.spectrum.tail(4).maxCoeff(), 1e-10);
    EXPECT_THROW(heatmap_alignment(Matrix::Zero(6, 2), s.b_star, s.sigma), std::invalid_argument);
}
