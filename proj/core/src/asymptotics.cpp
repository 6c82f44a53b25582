#include "featrisk/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

namespace featrisk {

const char* to_string(Regime r) {
    switch (r) {
        case Regime::sample_deficient:
            return "sample_deficient";
        case Regime::sample_rich:
            return "sample_rich";
        case Regime::boundary:
            return "boundary";
    }
    return "unknown";
}

WhitenedSpectrum whiten(const CovarianceModel& sigma, const Penalty& pen) {
    if (sigma.p() != pen.p()) {
        throw std::invalid_argument("whiten: Sigma and Gamma dimensions differ");
    }
    const Matrix& g = pen.gamma_inv_sqrt();
    const SymEig eig = sym_eig_desc(g * sigma.sigma() * g);
    WhitenedSpectrum out;
    out.t = eig.values.cwiseMax(0.0);
    out.w = eig.vectors;
    const Eigen::Index p = out.t.size();
    const double tol = WhitenedSpectrum::kSupportTol * (p > 0 ? out.t(0) : 0.0);
    out.h = 0;
    for (Eigen::Index i = 0; i < p; ++i) {
        if (out.t(i) > tol) {
            ++out.h;
        }
    }
    out.sigma_w = sigma.sigma() * (g * out.w.leftCols(out.h));
    if (pen.has_infinite()) {
        const Vector inv_t = out.t.head(out.h).cwiseInverse();
        out.removed = symmetrize(sigma.sigma() - spectral_compose(out.sigma_w, inv_t));
    }
    return out;
}

Regime classify_regime(int n, int h) {
    if (n < h) {
        return Regime::sample_deficient;
    }
    if (n > h) {
        return Regime::sample_rich;
    }
    return Regime::boundary;
}

namespace {

void require_deficient(int n, int h) {
    const Regime r = classify_regime(n, h);
    if (r != Regime::sample_deficient) {
        std::ostringstream msg;
        msg << "fixed point needs n < h (n=" << n << ", h=" << h << ", regime " << to_string(r)
            << "); use the sample-rich risk sigma^2 h / (n - h) when n > h";
        throw RegimeError(r, msg.str());
    }
}

// sum 1/(1+t b) and its derivative in b
std::pair<double, double> fp_terms(const Vector& t, double b) {
    std::vector<double> f(static_cast<std::size_t>(t.size()));
    std::vector<double> df(f.size());
    for (Eigen::Index i = 0; i < t.size(); ++i) {
        const double x = 1.0 / (1.0 + t(i) * b);
        f[static_cast<std::size_t>(i)] = x;
        df[static_cast<std::size_t>(i)] = -t(i) * x * x;
    }
    return {pairwise_sum(f), pairwise_sum(df)};
}

}  // namespace

double fixed_point_residual(const Vector& t_support, int n, double b0) {
    const double h = static_cast<double>(t_support.size());
    return fp_terms(t_support, b0).first - (h - n);
}

double solve_b0(const Vector& t_support, int n) {
    const int h = static_cast<int>(t_support.size());
    require_deficient(n, h);
    if (n <= 0) {
        return 0.0;
    }
    if (!(t_support.minCoeff() > 0.0) || !t_support.allFinite()) {
        throw std::invalid_argument("solve_b0: support eigenvalues must be positive and finite");
    }
    const double target = static_cast<double>(h - n);
    const double tol = 1e-13 * h;
    double lo = n / (target * t_support.maxCoeff());
    double hi = n / (target * t_support.minCoeff());
    // f decreasing: f(lo) >= 0 >= f(hi)
    double b = std::sqrt(lo * hi);
    double best_b = b;
    double best_res = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 100; ++it) {
        const auto [s, ds] = fp_terms(t_support, b);
        const double res = s - target;
        if (std::abs(res) < best_res) {
            best_res = std::abs(res);
            best_b = b;
        }
        if (std::abs(res) <= tol) {
            return b;
        }
        if (res > 0.0) {
            lo = b;
        } else {
            hi = b;
        }
        double next = b - res / ds;
        if (!(next > lo && next < hi)) {
            next = std::sqrt(lo * hi);
        }
        if (next == b || hi <= lo) {
            break;
        }
        b = next;
    }
    if (best_res <= 1e-12 * h) {
        return best_b;
    }
    std::ostringstream msg;
    msg << "solve_b0: no convergence (residual " << best_res << ", h=" << h << ")";
    throw NumericError(msg.str());
}

double solve_b0(const WhitenedSpectrum& spec, int n) {
    require_deficient(n, spec.h);
    return solve_b0(spec.t_support(), n);
}

double variance_functional(const Vector& t_support, double b0) {
    std::vector<double> num(static_cast<std::size_t>(t_support.size()));
    std::vector<double> den(num.size());
    for (Eigen::Index i = 0; i < t_support.size(); ++i) {
        const double u = t_support(i) * b0;
        const double w = 1.0 / ((1.0 + u) * (1.0 + u));
        num[static_cast<std::size_t>(i)] = u * u * w;
        den[static_cast<std::size_t>(i)] = u * w;
    }
    const double d = pairwise_sum(den);
    if (!(d > 0.0)) {
        return 0.0;
    }
    return pairwise_sum(num) / d;
}

Vector fixed_point_sensitivity(const Vector& t_support, double b0) {
    const Eigen::Index h = t_support.size();
    Vector x(h);
    std::vector<double> terms(static_cast<std::size_t>(h));
    for (Eigen::Index i = 0; i < h; ++i) {
        x(i) = 1.0 / (1.0 + t_support(i) * b0);
        terms[static_cast<std::size_t>(i)] = t_support(i) * x(i) * x(i);
    }
    const double den = pairwise_sum(terms);
    return -(b0 / den) * x.cwiseAbs2();
}

Matrix bias_kernel(const WhitenedSpectrum& spec, double b0) {
    const int h = spec.h;
    Vector f(h);
    for (int i = 0; i < h; ++i) {
        const double t = spec.t(i);
        const double den = 1.0 + t * b0;
        // sigma_w column i is t_i Gamma^{1/2} w_i, hence the 1/t
        f(i) = 1.0 / (t * den * den);
    }
    Matrix k = spectral_compose(spec.sigma_w, f);
    if (spec.removed.size() > 0) {
        k += spec.removed;
    }
    return symmetrize(k);
}

namespace {

AsymptoticReport base_report(const WhitenedSpectrum& spec, double sigma2, int n) {
    AsymptoticReport rep;
    rep.n = n;
    rep.h = spec.h;
    rep.regime = classify_regime(n, spec.h);
    if (rep.regime == Regime::boundary) {
        std::ostringstream msg;
        msg << "risk diverges at the boundary n = h = " << n;
        throw RegimeError(Regime::boundary, msg.str());
    }
    if (rep.regime == Regime::sample_rich) {
        rep.b0 = std::numeric_limits<double>::quiet_NaN();
        rep.rich_risk = sigma2 * spec.h / static_cast<double>(n - spec.h);
        rep.risk = rep.rich_risk;
        rep.variance = std::numeric_limits<double>::quiet_NaN();
        rep.fg.var_x_noise = rep.rich_risk;
        return rep;
    }
    rep.b0 = solve_b0(spec, n);
    rep.variance = variance_functional(spec.t_support(), rep.b0);
    return rep;
}

void finish_deficient(AsymptoticReport& rep, double sigma2) {
    rep.risk = rep.bias + rep.variance * rep.bias + sigma2 * rep.variance;
    rep.fg.bias = rep.bias;
    rep.fg.var_x = rep.variance * rep.bias;
    rep.fg.var_x_noise = sigma2 * rep.variance;
    rep.fg.var_noise = 0.0;
}

// sum_i f_i (V^T C V)_ii without forming the p x p kernel
double kernel_trace(const WhitenedSpectrum& spec, double b0, const Matrix& c) {
    const Matrix cv = c * spec.sigma_w;
    std::vector<double> terms(static_cast<std::size_t>(spec.h));
    for (int i = 0; i < spec.h; ++i) {
        const double t = spec.t(i);
        const double den = 1.0 + t * b0;
        terms[static_cast<std::size_t>(i)] =
            spec.sigma_w.col(i).dot(cv.col(i)) / (t * den * den);
    }
    double acc = pairwise_sum(terms);
    if (spec.removed.size() > 0) {
        acc += spec.removed.cwiseProduct(c).sum();
    }
    return acc;
}

}  // namespace

AsymptoticReport risk_components(const WhitenedSpectrum& spec, const Vector& beta_star,
                                 double sigma2, int n) {
    if (beta_star.size() != spec.t.size()) {
        throw std::invalid_argument("risk_components: beta has wrong dimension");
    }
    AsymptoticReport rep = base_report(spec, sigma2, n);
    if (rep.regime == Regime::sample_rich) {
        return rep;
    }
    const Vector proj = spec.sigma_w.transpose() * beta_star;
    std::vector<double> terms(static_cast<std::size_t>(spec.h));
    for (int i = 0; i < spec.h; ++i) {
        const double t = spec.t(i);
        const double den = 1.0 + t * rep.b0;
        terms[static_cast<std::size_t>(i)] = proj(i) * proj(i) / (t * den * den);
    }
    rep.bias = pairwise_sum(terms);
    if (spec.removed.size() > 0) {
        rep.bias += beta_star.dot(spec.removed * beta_star);
    }
    finish_deficient(rep, sigma2);
    return rep;
}

AsymptoticReport averaged_objective(const WhitenedSpectrum& spec, const Matrix& b_star,
                                    const Matrix& sigma_alpha, double sigma2, int n) {
    if (b_star.rows() != spec.t.size() || sigma_alpha.rows() != b_star.cols() ||
        sigma_alpha.cols() != b_star.cols()) {
        throw std::invalid_argument("averaged_objective: dimension mismatch");
    }
    AsymptoticReport rep = base_report(spec, sigma2, n);
    if (rep.regime == Regime::sample_rich) {
        rep.bias_avg = 0.0;
        rep.risk_avg = rep.rich_risk;
        return rep;
    }
    const double q = static_cast<double>(b_star.cols());
    const Matrix c = b_star * sigma_alpha * b_star.transpose();
    rep.bias = kernel_trace(spec, rep.b0, c) / q;
    finish_deficient(rep, sigma2);
    rep.bias_avg = rep.bias;
    rep.risk_avg = rep.risk;
    return rep;
}

AsymptoticReport worst_case_objective(const WhitenedSpectrum& spec, const Matrix& b_star,
                                      double sigma2, int n, double scale) {
    if (b_star.rows() != spec.t.size()) {
        throw std::invalid_argument("worst_case_objective: dimension mismatch");
    }
    AsymptoticReport rep = base_report(spec, sigma2, n);
    if (rep.regime == Regime::sample_rich) {
        rep.bias_worst = 0.0;
        rep.risk_worst = rep.rich_risk;
        return rep;
    }
    Vector f(spec.h);
    for (int i = 0; i < spec.h; ++i) {
        const double t = spec.t(i);
        const double den = 1.0 + t * rep.b0;
        f(i) = 1.0 / (t * den * den);
    }
    const Matrix vb = spec.sigma_w.transpose() * b_star;  // h x q
    Matrix m = vb.transpose() * f.asDiagonal() * vb;
    if (spec.removed.size() > 0) {
        m += b_star.transpose() * spec.removed * b_star;
    }
    const SymEig eig = sym_eig_desc(m);
    const double top = eig.values.size() > 0 ? std::max(eig.values(0), 0.0) : 0.0;
    rep.bias_worst = scale * top;
    rep.risk_worst = sigma2 * rep.variance + (rep.variance + 1.0) * scale * top;
    // the fixed-beta fields describe the maximizing unit-scaled task
    rep.bias = *rep.bias_worst;
    finish_deficient(rep, sigma2);
    return rep;
}

}  // namespace featrisk
