#include "featrisk/full_opt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace featrisk {

const char* to_string(ObjectiveMode m) {
    return m == ObjectiveMode::avg ? "avg" : "worst";
}

ObjectiveSetup ObjectiveSetup::from_instance(const ProblemInstance& inst, int n,
                                             ObjectiveMode mode) {
    ObjectiveSetup s;
    s.sigma = inst.sigma.sigma();
    s.b_star = inst.truth.b;
    s.sigma_alpha = inst.task.sigma_alpha();
    s.sigma2 = inst.task.sigma2;
    s.n = n;
    s.scale = inst.task.scale;
    s.mode = mode;
    return s;
}

std::array<double, 3> pack(const RegularizationParams& lam) {
    return {lam.lambda_alpha, lam.lambda_beta, lam.lambda};
}

RegularizationParams unpack(const std::array<double, 3>& v) {
    return {v[0], v[1], v[2]};
}

AsymptoticReport objective_report(const ObjectiveSetup& setup, const Matrix& b_hat,
                                  const RegularizationParams& lam) {
    const Penalty pen = build_penalty(Representation(b_hat), lam);
    const CovarianceModel sigma(setup.sigma);
    const WhitenedSpectrum spec = whiten(sigma, pen);
    if (setup.mode == ObjectiveMode::avg) {
        return averaged_objective(spec, setup.b_star, setup.sigma_alpha, setup.sigma2, setup.n);
    }
    return worst_case_objective(spec, setup.b_star, setup.sigma2, setup.n, setup.scale);
}

double objective_forward(const ObjectiveSetup& setup, const Matrix& b_hat,
                         const RegularizationParams& lam) {
    const AsymptoticReport rep = objective_report(setup, b_hat, lam);
    return setup.mode == ObjectiveMode::avg ? *rep.risk_avg : *rep.risk_worst;
}

GradientBundle objective_gradient(const ObjectiveSetup& setup, const Matrix& b_hat,
                                  const RegularizationParams& lam) {
    lam.validate();
    const Eigen::Index p = b_hat.rows();
    if (setup.sigma.rows() != p || setup.b_star.rows() != p) {
        throw std::invalid_argument("objective_gradient: dimension mismatch");
    }

    // Gamma = Q diag(r(a)) Q^T with B B^T = Q diag(a) Q^T
    const SymEig ea = sym_eig_desc(b_hat * b_hat.transpose());
    const Matrix& q_mat = ea.vectors;
    const Vector a = ea.values.cwiseMax(0.0);
    Vector r(p), sr(p), isr(p), dr(p);
    for (Eigen::Index i = 0; i < p; ++i) {
        r(i) = shrink_profile(a(i), lam);
        if (!(r(i) > 0.0)) {
            throw NumericError("objective_gradient: penalty weight is not positive");
        }
        sr(i) = std::sqrt(r(i));
        isr(i) = 1.0 / sr(i);
        dr(i) = shrink_profile_d2(a(i), lam);
    }
    const Matrix pm = spectral_compose(q_mat, sr);   // Gamma^{1/2}
    const Matrix nm = spectral_compose(q_mat, isr);  // Gamma^{-1/2}

    // S = N Sigma N = W diag(t) W^T
    const Matrix nsig = nm * setup.sigma;
    const SymEig es = sym_eig_desc(nsig * nm);
    const Matrix& w = es.vectors;
    const Vector t = es.values.cwiseMax(0.0);
    const double tol = WhitenedSpectrum::kSupportTol * (p > 0 ? t(0) : 0.0);
    int h = 0;
    while (h < p && t(h) > tol) {
        ++h;
    }
    const int n = setup.n;
    if (n >= h) {
        std::ostringstream msg;
        msg << "objective needs the sample-deficient regime (n=" << n << ", h=" << h << ")";
        throw RegimeError(classify_regime(n, h), msg.str());
    }
    const Vector th = t.head(h);
    const double b0 = solve_b0(th, n);

    // variance functional and its partials in u = t b0
    double num = 0.0, den = 0.0;
    Vector dnum(h), dden(h);
    for (int i = 0; i < h; ++i) {
        const double u = th(i) * b0;
        const double o = 1.0 + u;
        num += u * u / (o * o);
        den += u / (o * o);
        dnum(i) = 2.0 * u / (o * o * o);
        dden(i) = (1.0 - u) / (o * o * o);
    }
    const double var = num / den;
    const Vector dv_du = (dnum - var * dden) / den;
    const Vector dv_dt = b0 * dv_du;
    const double dv_db0 = dv_du.dot(th);

    // F = W diag(f) W^T, f(t) = t / (1 + t b0)^2 on the support
    Vector f = Vector::Zero(p), df_dt = Vector::Zero(p), df_db0 = Vector::Zero(p);
    for (int i = 0; i < h; ++i) {
        const double o = 1.0 + th(i) * b0;
        f(i) = th(i) / (o * o);
        df_dt(i) = (1.0 - th(i) * b0) / (o * o * o);
        df_db0(i) = -2.0 * th(i) * th(i) / (o * o * o);
    }
    const Matrix fm = spectral_compose(w, f);
    const Matrix pf = pm * fm;
    const Matrix k = symmetrize(pf * pm);

    double bias = 0.0;
    Matrix gbar;  // dL/dK
    if (setup.mode == ObjectiveMode::avg) {
        const double q = static_cast<double>(setup.b_star.cols());
        const Matrix c = setup.b_star * setup.sigma_alpha * setup.b_star.transpose() / q;
        bias = k.cwiseProduct(c).sum();
        gbar = (1.0 + var) * c;
    } else {
        const SymEig em = sym_eig_desc(setup.b_star.transpose() * k * setup.b_star);
        const double top = std::max(em.values(0), 0.0);
        bias = setup.scale * top;
        const Vector bv = setup.b_star * em.vectors.col(0);
        gbar = (1.0 + var) * setup.scale * (bv * bv.transpose());
    }

    GradientBundle out;
    out.value = bias * (1.0 + var) + setup.sigma2 * var;
    out.b0 = b0;
    out.t = th;

    // K = P F P
    const Matrix xg = gbar * pf;
    const Matrix pbar = xg + xg.transpose();
    const Matrix fbar = pm * gbar * pm;
    const Matrix fw = w.transpose() * fbar * w;

    const double dl_dv = bias + setup.sigma2;
    double dl_db0 = dl_dv * dv_db0;
    for (int i = 0; i < h; ++i) {
        dl_db0 += fw(i, i) * df_db0(i);
    }
    out.d_b0 = dl_db0;
    out.db0_dt = fixed_point_sensitivity(th, b0);
    out.d_t = dl_dv * dv_dt + dl_db0 * out.db0_dt;

    Matrix sbar_w = divided_differences(t, f, df_dt).cwiseProduct(fw);
    for (int i = 0; i < h; ++i) {
        sbar_w(i, i) += out.d_t(i);
    }
    const Matrix sbar = w * sbar_w * w.transpose();
    const Matrix xn = sbar * nsig;  // S = N Sigma N
    const Matrix nbar = xn + xn.transpose();

    const Matrix pq = q_mat.transpose() * pbar * q_mat;
    const Matrix nq = q_mat.transpose() * nbar * q_mat;
    const Vector dsr = dr.cwiseQuotient(2.0 * sr);
    const Vector disr = -dr.cwiseQuotient(2.0 * r.cwiseProduct(sr));
    const Matrix abar_q = divided_differences(a, sr, dsr).cwiseProduct(pq) +
                          divided_differences(a, isr, disr).cwiseProduct(nq);
    const Matrix abar = symmetrize(q_mat * abar_q * q_mat.transpose());
    out.d_b = 2.0 * abar * b_hat;

    // lambda enters through r only
    const double kappa = lam.kappa();
    std::array<double, 3> dl{0.0, 0.0, 0.0};
    for (Eigen::Index i = 0; i < p; ++i) {
        const double dl_dr = pq(i, i) / (2.0 * sr(i)) - nq(i, i) / (2.0 * r(i) * sr(i));
        const double s = a(i) + kappa;
        const double s3 = s * s * s;
        dl[0] += dl_dr * a(i) * (a(i) + 3.0 * kappa) / s3;
        dl[1] += dl_dr;
        dl[2] += dl_dr * kappa * kappa * kappa / s3;
    }
    out.d_lambda = dl;
    return out;
}

GradientBundle fd_gradient(const ObjectiveSetup& setup, const Matrix& b_hat,
                           const RegularizationParams& lam, double step) {
    GradientBundle out;
    out.value = objective_forward(setup, b_hat, lam);
    out.d_b.resize(b_hat.rows(), b_hat.cols());
    Matrix bp = b_hat;
    for (Eigen::Index j = 0; j < b_hat.cols(); ++j) {
        for (Eigen::Index i = 0; i < b_hat.rows(); ++i) {
            const double orig = bp(i, j);
            bp(i, j) = orig + step;
            const double fp = objective_forward(setup, bp, lam);
            bp(i, j) = orig - step;
            const double fm = objective_forward(setup, bp, lam);
            bp(i, j) = orig;
            out.d_b(i, j) = (fp - fm) / (2.0 * step);
        }
    }
    const std::array<double, 3> base = pack(lam);
    for (int c = 0; c < 3; ++c) {
        const double hstep = step * std::max(1.0, std::abs(base[c]));
        std::array<double, 3> up = base, dn = base;
        up[c] += hstep;
        dn[c] -= hstep;
        const double fp = objective_forward(setup, b_hat, unpack(up));
        const double fm = objective_forward(setup, b_hat, unpack(dn));
        out.d_lambda[static_cast<std::size_t>(c)] = (fp - fm) / (2.0 * hstep);
    }
    return out;
}

Matrix init_representation(int p, int k, std::uint64_t seed) {
    Rng rng = make_stream(seed, StreamDomain::init, 0);
    const double bound = 1.0 / std::sqrt(static_cast<double>(k));
    return uniform_matrix(p, k, -bound, bound, rng);
}

RegularizationParams init_lambda(std::uint64_t seed) {
    Rng rng = make_stream(seed, StreamDomain::init, 1);
    const double bound = std::sqrt(3.0);
    std::array<double, 3> v{};
    for (auto& x : v) {
        x = std::max(std::abs(rng.uniform(-bound, bound)), 1e-3);
    }
    return unpack(v);
}

namespace {

constexpr double kLogLambdaClamp = 60.0;

struct AdamState {
    Matrix b;
    std::array<double, 3> theta{};  // log lambda
    Matrix mb, vb;
    std::array<double, 3> mt{}, vt{};
    long steps = 0;
};

RegularizationParams lambda_of(const std::array<double, 3>& theta) {
    return {std::exp(theta[0]), std::exp(theta[1]), std::exp(theta[2])};
}

bool finite_bundle(const GradientBundle& g) {
    return std::isfinite(g.value) && g.d_b.allFinite() && std::isfinite(g.d_lambda[0]) &&
           std::isfinite(g.d_lambda[1]) && std::isfinite(g.d_lambda[2]);
}

}  // namespace

OptimizeResult optimize(const OptimizerConfig& config, const ObjectiveSetup& setup,
                        const Matrix& b_init, const RegularizationParams& lam_init) {
    lam_init.validate();
    if (!(lam_init.lambda_beta > 0.0)) {
        throw std::invalid_argument("optimize: initial lambda_beta must be positive");
    }
    if (config.episode_length <= 0 || config.max_episodes <= 0 || !(config.step > 0.0)) {
        throw std::invalid_argument("optimize: invalid optimizer configuration");
    }
    AdamState st;
    st.b = b_init;
    const auto lam0 = pack(lam_init);
    for (int c = 0; c < 3; ++c) {
        st.theta[static_cast<std::size_t>(c)] = std::log(lam0[static_cast<std::size_t>(c)]);
    }
    st.mb = Matrix::Zero(b_init.rows(), b_init.cols());
    st.vb = st.mb;

    OptimizeResult res;
    res.initial_value = objective_forward(setup, st.b, lambda_of(st.theta));
    if (!std::isfinite(res.initial_value)) {
        throw NumericError("optimize: objective is not finite at the initial point");
    }
    res.value = res.initial_value;
    res.b = st.b;
    res.lam = lambda_of(st.theta);

    double lr = config.step;
    int stale = 0;
    int global_step = 0;
    for (int episode = 0; episode < config.max_episodes; ++episode) {
        const AdamState snapshot = st;
        const double best_before = res.value;
        const std::size_t trace_mark = res.trace.size();
        const int step_mark = global_step;
        bool failed = false;
        for (int s = 0; s < config.episode_length; ++s) {
            GradientBundle g;
            try {
                g = objective_gradient(setup, st.b, lambda_of(st.theta));
            } catch (const NumericError&) {
                failed = true;
            } catch (const RegimeError&) {
                failed = true;
            }
            if (failed || !finite_bundle(g)) {
                failed = true;
                break;
            }
            std::array<double, 3> gt{};
            const auto lam = pack(lambda_of(st.theta));
            for (int c = 0; c < 3; ++c) {
                gt[static_cast<std::size_t>(c)] =
                    g.d_lambda[static_cast<std::size_t>(c)] * lam[static_cast<std::size_t>(c)];
            }
            double gn2 = gt[0] * gt[0] + gt[1] * gt[1] + gt[2] * gt[2];
            if (config.learn_b) {
                gn2 += g.d_b.squaredNorm();
            }
            res.trace.push_back({global_step, episode, g.value, std::sqrt(gn2)});
            if (g.value < res.value) {
                res.value = g.value;
                res.b = st.b;
                res.lam = lambda_of(st.theta);
            }
            ++global_step;
            ++st.steps;
            const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(st.steps));
            const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(st.steps));
            if (config.learn_b) {
                st.mb = config.beta1 * st.mb + (1.0 - config.beta1) * g.d_b;
                st.vb = config.beta2 * st.vb + (1.0 - config.beta2) * g.d_b.cwiseAbs2();
                st.b.array() -= lr * (st.mb.array() / c1) /
                                ((st.vb.array() / c2).sqrt() + config.adam_eps);
            }
            for (std::size_t c = 0; c < 3; ++c) {
                st.mt[c] = config.beta1 * st.mt[c] + (1.0 - config.beta1) * gt[c];
                st.vt[c] = config.beta2 * st.vt[c] + (1.0 - config.beta2) * gt[c] * gt[c];
                st.theta[c] -= lr * (st.mt[c] / c1) / (std::sqrt(st.vt[c] / c2) + config.adam_eps);
                st.theta[c] = std::clamp(st.theta[c], -kLogLambdaClamp, kLogLambdaClamp);
            }
        }
        if (failed) {
            if (res.restarts >= config.max_restarts) {
                throw NumericError("optimize: objective diverged after repeated step halving");
            }
            ++res.restarts;
            lr *= 0.5;
            st = snapshot;
            res.trace.resize(trace_mark);
            global_step = step_mark;
            --episode;
            continue;
        }
        res.episodes = episode + 1;
        const double gain = (best_before - res.value) / std::max(std::abs(best_before), 1e-300);
        stale = gain > config.improve_tol ? 0 : stale + 1;
        if (stale >= config.patience) {
            res.stopped_by_patience = true;
            break;
        }
    }
    res.report = objective_report(setup, res.b, res.lam);
    return res;
}

OptimizeResult optimize(const OptimizerConfig& config, const ObjectiveSetup& setup) {
    const int p = static_cast<int>(setup.sigma.rows());
    const int k = config.k > 0 ? config.k : static_cast<int>(setup.b_star.cols());
    return optimize(config, setup, init_representation(p, k, config.seed),
                    init_lambda(config.seed));
}

OptimizeResult optimize_ofp(const OptimizerConfig& config, const ObjectiveSetup& setup) {
    OptimizerConfig c = config;
    c.learn_b = false;
    return optimize(c, setup, setup.b_star, init_lambda(config.seed));
}

OptimizeResult optimize_eep(const OptimizerConfig& config, const ObjectiveSetup& setup,
                            const std::optional<OptimizeResult>& ofp) {
    const int p = static_cast<int>(setup.sigma.rows());
    const int q = static_cast<int>(setup.b_star.cols());
    const int k = config.k > 0 ? config.k : q;
    OptimizerConfig c = config;
    c.learn_b = true;
    c.k = k;

    std::vector<OptimizeResult> runs;
    if (ofp) {
        Matrix warm = Matrix::Zero(p, k);
        const int cols = std::min(k, q);
        warm.leftCols(cols) = ofp->b.leftCols(cols);
        runs.push_back(optimize(c, setup, warm, ofp->lam));
    }
    runs.push_back(optimize(c, setup, init_representation(p, k, config.seed),
                            init_lambda(config.seed)));
    // near-zero features: Gamma is almost isotropic, i.e. the plain ridgeless start
    runs.push_back(optimize(c, setup, 1e-5 * init_representation(p, k, config.seed + 1),
                            init_lambda(config.seed + 1)));
    std::size_t best = 0;
    for (std::size_t i = 1; i < runs.size(); ++i) {
        if (runs[i].value < runs[best].value) {
            best = i;
        }
    }
    return std::move(runs[best]);
}

AlignmentHeatmap heatmap_alignment(const Matrix& b_hat, const Matrix& b_star, const Matrix& sigma) {
    if (b_hat.rows() != b_star.rows() || sigma.rows() != b_hat.rows()) {
        throw std::invalid_argument("heatmap_alignment: dimension mismatch");
    }
    const SymEig eh = sym_eig_desc(b_hat * b_hat.transpose());
    const SymEig es = sym_eig_desc(b_star * b_star.transpose());
    const SymEig eu = sym_eig_desc(sigma);
    AlignmentHeatmap out;
    out.m = eh.vectors.transpose() * es.vectors;
    out.n = eh.vectors.transpose() * eu.vectors;
    out.spectrum = eh.values.cwiseMax(0.0);
    return out;
}

}  // namespace featrisk
