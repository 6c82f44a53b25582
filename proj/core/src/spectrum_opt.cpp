#include "featrisk/spectrum_opt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace featrisk {

const char* to_string(SelectionRegime r) {
    return r == SelectionRegime::hard ? "hard" : "soft";
}

SpectrumProblem alignment_coefficients(const CovarianceModel& sigma, const Matrix& b_star,
                                       const Matrix& sigma_alpha, const SpectrumSettings& settings) {
    const int p = sigma.p();
    if (b_star.rows() != p || sigma_alpha.rows() != b_star.cols() ||
        sigma_alpha.cols() != b_star.cols()) {
        throw std::invalid_argument("alignment_coefficients: dimension mismatch");
    }
    const int h = sigma.rank();
    if (settings.n < 0) {
        throw std::invalid_argument("alignment_coefficients: n must be nonnegative");
    }
    const Matrix& u = sigma.eigenvectors();
    const Matrix bu = b_star.transpose() * u.leftCols(h);  // q x h
    const Matrix sbu = sigma_alpha * bu;
    Vector theta_all(h), phi_all(h);
    for (int i = 0; i < h; ++i) {
        theta_all(i) = std::max(bu.col(i).dot(sbu.col(i)), 0.0);
        phi_all(i) = sigma.eigenvalues()(i) * theta_all(i);
    }
    const double phi_max = h > 0 ? phi_all.maxCoeff() : 0.0;
    std::vector<int> informative, rest;
    for (int i = 0; i < h; ++i) {
        if (phi_all(i) > SpectrumProblem::kPhiTol * phi_max && phi_all(i) > 0.0) {
            informative.push_back(i);
        } else {
            rest.push_back(i);
        }
    }
    std::stable_sort(informative.begin(), informative.end(),
                     [&](int a, int b) { return phi_all(a) > phi_all(b); });

    SpectrumProblem prob;
    prob.order = informative;
    prob.order.insert(prob.order.end(), rest.begin(), rest.end());
    prob.h = h;
    prob.h1 = static_cast<int>(informative.size());
    prob.n = settings.n;
    prob.q = static_cast<int>(b_star.cols());
    prob.sigma2 = settings.sigma2;
    prob.scale = settings.scale;
    prob.basis = u;
    prob.eta.resize(h);
    prob.theta.resize(h);
    prob.phi.resize(h);
    prob.g.resize(prob.q, h);
    for (int i = 0; i < h; ++i) {
        const int j = prob.order[static_cast<std::size_t>(i)];
        prob.eta(i) = sigma.eigenvalues()(j);
        prob.theta(i) = theta_all(j);
        prob.phi(i) = i < prob.h1 ? phi_all(j) : 0.0;
        prob.g.col(i) = std::sqrt(prob.eta(i)) * bu.col(j);
    }
    return prob;
}

std::optional<int> compute_h0(const Vector& phi_positive, int n) {
    const int h1 = static_cast<int>(phi_positive.size());
    if (n >= h1) {
        return std::nullopt;
    }
    if (n < 0) {
        throw std::invalid_argument("compute_h0: n must be nonnegative");
    }
    int h0 = n;
    double inv_sum = 0.0;
    for (int i = 0; i < n; ++i) {
        inv_sum += 1.0 / phi_positive(i);
    }
    for (int ht = n + 1; ht <= h1; ++ht) {
        const double phi_h = phi_positive(ht - 1);
        // the i = ht term is exactly 1; keep it out of the rounding
        if (phi_h * inv_sum >= static_cast<double>(ht - n - 1)) {
            h0 = ht;
        }
        inv_sum += 1.0 / phi_h;
    }
    return h0;
}

SpectrumSolution minimize_variance_spectrum(const Vector& eta, int n, double c) {
    const int h = static_cast<int>(eta.size());
    if (n >= h || n < 0) {
        throw std::invalid_argument("minimize_variance_spectrum: need 0 <= n < h");
    }
    if (!(c > 0.0)) {
        throw std::invalid_argument("minimize_variance_spectrum: c must be positive");
    }
    SpectrumSolution sol;
    sol.c = c;
    sol.r = c * eta;
    sol.b0 = c * n / static_cast<double>(h - n);
    sol.x = Vector::Constant(h, 1.0 - static_cast<double>(n) / h);
    sol.objective = static_cast<double>(n) / (h - n);
    sol.h1 = h;
    return sol;
}

SpectrumSolution minimize_bias_spectrum(const SpectrumProblem& prob, double c) {
    const int h = prob.h;
    const int n = prob.n;
    if (n >= h) {
        throw std::invalid_argument("minimize_bias_spectrum: need n < h");
    }
    if (!(c > 0.0)) {
        throw std::invalid_argument("minimize_bias_spectrum: c must be positive");
    }
    SpectrumSolution sol;
    sol.c = c;
    sol.b0 = c;
    sol.h1 = prob.h1;
    sol.r.resize(h);
    sol.x.resize(h);
    const auto h0 = compute_h0(prob.phi.head(prob.h1), n);
    if (!h0) {
        sol.regime = SelectionRegime::hard;
        for (int i = 0; i < h; ++i) {
            if (i < prob.h1) {
                sol.r(i) = c * prob.eta(i);
                sol.x(i) = 0.0;  // limit of the c -> 0 path
            } else {
                sol.r(i) = kInfinity;
                sol.x(i) = static_cast<double>(h - n) / (h - prob.h1);
            }
        }
        sol.objective = 0.0;
        return sol;
    }
    sol.regime = SelectionRegime::soft;
    sol.h0 = *h0;
    double inv_sum = 0.0;
    for (int i = 0; i < sol.h0; ++i) {
        inv_sum += 1.0 / prob.phi(i);
    }
    const double m = static_cast<double>(sol.h0 - n);
    double tail = 0.0;
    for (int i = 0; i < h; ++i) {
        if (i < sol.h0) {
            sol.x(i) = std::min(m / (prob.phi(i) * inv_sum), 1.0);
        } else {
            sol.x(i) = 1.0;
            tail += prob.phi(i);
        }
    }
    sol.r = from_x_space(sol.x, prob.eta, c);
    sol.objective = (tail + m * m / inv_sum) / prob.q;
    return sol;
}

Vector hard_selection_path(const SpectrumProblem& prob, double c) {
    if (!(c > 0.0)) {
        throw std::invalid_argument("hard_selection_path: c must be positive");
    }
    Vector r(prob.h);
    for (int i = 0; i < prob.h; ++i) {
        r(i) = i < prob.h1 ? prob.eta(i) : prob.eta(i) / c;
    }
    return r;
}

Vector to_x_space(const Vector& r, const Vector& eta, double b0) {
    if (r.size() != eta.size()) {
        throw std::invalid_argument("to_x_space: size mismatch");
    }
    Vector x(r.size());
    for (Eigen::Index i = 0; i < r.size(); ++i) {
        if (std::isinf(r(i))) {
            x(i) = 1.0;
        } else if (r(i) == 0.0) {
            x(i) = 0.0;
        } else {
            x(i) = 1.0 / (1.0 + eta(i) * b0 / r(i));
        }
    }
    return x;
}

Vector from_x_space(const Vector& x, const Vector& eta, double b0) {
    if (x.size() != eta.size()) {
        throw std::invalid_argument("from_x_space: size mismatch");
    }
    Vector r(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        r(i) = x(i) >= 1.0 ? kInfinity : b0 * eta(i) * x(i) / (1.0 - x(i));
    }
    return r;
}

bool is_feasible(const Vector& x, int n, double tol) {
    const double h = static_cast<double>(x.size());
    if (x.size() == 0) {
        return false;
    }
    if (x.minCoeff() < -tol || x.maxCoeff() > 1.0 + tol) {
        return false;
    }
    return std::abs(x.sum() - (h - n)) <= tol * std::max(1.0, h);
}

Vector project_feasible(const Vector& y, int n) {
    const Eigen::Index h = y.size();
    if (n < 0 || n >= h) {
        throw std::invalid_argument("project_feasible: need 0 <= n < h");
    }
    const double target = static_cast<double>(h - n);
    auto mass = [&](double nu) { return (y.array() - nu).max(0.0).min(1.0).sum(); };
    double lo = y.minCoeff() - 1.0;  // mass = h
    double hi = y.maxCoeff();        // mass = 0
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mass(mid) > target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    double nu = 0.5 * (lo + hi);
    // exact shift on the linear piece containing nu
    double free_sum = 0.0;
    int free_count = 0;
    int upper = 0;
    for (Eigen::Index i = 0; i < h; ++i) {
        const double v = y(i) - nu;
        if (v >= 1.0) {
            ++upper;
        } else if (v > 0.0) {
            free_sum += y(i);
            ++free_count;
        }
    }
    if (free_count > 0) {
        nu = (free_sum + upper - target) / free_count;
    }
    return (y.array() - nu).max(0.0).min(1.0).matrix();
}

XValue variance_x(const Vector& x, int n) {
    const double h = static_cast<double>(x.size());
    const double s2 = x.squaredNorm();
    const double den = h - n - s2;
    XValue out;
    if (!(den > 0.0)) {
        out.value = kInfinity;
        out.grad = Vector::Zero(x.size());
        return out;
    }
    out.value = (2.0 * n - h + s2) / den;
    // d/ds2 of (a + s)/(b - s) = (a + b)/(b - s)^2 with a + b = n
    out.grad = (2.0 * n / (den * den)) * x;
    return out;
}

XValue bias_avg_x(const SpectrumProblem& prob, const Vector& x) {
    XValue out;
    out.value = prob.phi.dot(x.cwiseAbs2()) / prob.q;
    out.grad = (2.0 / prob.q) * prob.phi.cwiseProduct(x);
    return out;
}

XValue bias_worst_x(const SpectrumProblem& prob, const Vector& x) {
    const Matrix m = prob.g * x.cwiseAbs2().asDiagonal() * prob.g.transpose();
    const SymEig eig = sym_eig_desc(m);
    XValue out;
    out.grad = Vector::Zero(x.size());
    if (eig.values.size() == 0) {
        out.value = 0.0;
        return out;
    }
    out.value = prob.scale * std::max(eig.values(0), 0.0);
    const Vector proj = prob.g.transpose() * eig.vectors.col(0);
    out.grad = (2.0 * prob.scale) * x.cwiseProduct(proj.cwiseAbs2());
    return out;
}

namespace {

XValue bias_x(const SpectrumProblem& prob, SpectrumObjective obj, const Vector& x) {
    return obj == SpectrumObjective::avg ? bias_avg_x(prob, x) : bias_worst_x(prob, x);
}

}  // namespace

XValue relaxed_objective_x(const SpectrumProblem& prob, SpectrumObjective obj, const Vector& x) {
    const XValue v = variance_x(x, prob.n);
    const XValue b = bias_x(prob, obj, x);
    XValue out;
    if (std::isinf(v.value)) {
        out.value = kInfinity;
        out.grad = Vector::Zero(x.size());
        return out;
    }
    const double half = 0.5 * (v.value + b.value);
    out.value = b.value + half * half + prob.sigma2 * v.value;
    out.grad = b.grad + half * (v.grad + b.grad) + prob.sigma2 * v.grad;
    return out;
}

XValue direct_objective_x(const SpectrumProblem& prob, SpectrumObjective obj, const Vector& x) {
    const XValue v = variance_x(x, prob.n);
    const XValue b = bias_x(prob, obj, x);
    XValue out;
    if (std::isinf(v.value)) {
        out.value = kInfinity;
        out.grad = Vector::Zero(x.size());
        return out;
    }
    out.value = b.value + (b.value + prob.sigma2) * v.value;
    out.grad = (1.0 + v.value) * b.grad + (b.value + prob.sigma2) * v.grad;
    return out;
}

namespace {

template <class Objective>
SpectrumSolution projected_gradient(const SpectrumProblem& prob, Objective f, Vector x,
                                    const SpectrumSolverOptions& opt) {
    SpectrumSolution sol;
    XValue cur = f(x);
    double step = 1.0;
    sol.converged = false;
    int it = 0;
    for (; it < opt.max_iter; ++it) {
        bool accepted = false;
        Vector y;
        XValue next;
        while (step > 1e-30) {
            y = project_feasible(x - step * cur.grad, prob.n);
            next = f(y);
            const Vector d = y - x;
            if (std::isfinite(next.value) &&
                next.value <= cur.value + cur.grad.dot(d) + d.squaredNorm() / (2.0 * step)) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            sol.converged = true;  // no step can make progress at this precision
            break;
        }
        const double move = (y - x).cwiseAbs().maxCoeff();
        x = y;
        cur = next;
        step *= 2.0;
        if (move <= opt.tol) {
            sol.converged = true;
            break;
        }
    }
    sol.iterations = it;
    sol.x = x;
    sol.objective = cur.value;
    return sol;
}

SpectrumSolution finalize(const SpectrumProblem& prob, SpectrumSolution sol, double c) {
    sol.c = c;
    sol.b0 = c;
    sol.h1 = prob.h1;
    sol.r = from_x_space(sol.x, prob.eta, c);
    return sol;
}

void check_solvable(const SpectrumProblem& prob) {
    if (prob.n >= prob.h || prob.n < 0) {
        throw std::invalid_argument("spectrum solver: need 0 <= n < h");
    }
}

}  // namespace

SpectrumSolution solve_relaxed(const SpectrumProblem& prob, SpectrumObjective obj,
                               const SpectrumSolverOptions& opt) {
    check_solvable(prob);
    const Vector start = Vector::Constant(prob.h, 1.0 - static_cast<double>(prob.n) / prob.h);
    auto f = [&](const Vector& x) { return relaxed_objective_x(prob, obj, x); };
    return finalize(prob, projected_gradient(prob, f, start, opt), opt.c);
}

SpectrumSolution solve_direct(const SpectrumProblem& prob, SpectrumObjective obj,
                              const SpectrumSolverOptions& opt) {
    check_solvable(prob);
    const Vector center = Vector::Constant(prob.h, 1.0 - static_cast<double>(prob.n) / prob.h);
    auto f = [&](const Vector& x) { return direct_objective_x(prob, obj, x); };
    SpectrumSolution best;
    best.objective = kInfinity;
    for (int s = 0; s < std::max(opt.starts, 1); ++s) {
        Vector start = center;
        if (s > 0) {
            Rng rng = make_stream(opt.seed, StreamDomain::search, static_cast<std::uint64_t>(s));
            Vector u(prob.h);
            for (int i = 0; i < prob.h; ++i) {
                u(i) = rng.uniform(0.0, 1.0);
            }
            // midpoint with the center keeps the start away from the vertices
            start = 0.5 * (center + project_feasible(u, prob.n));
        }
        SpectrumSolution sol = projected_gradient(prob, f, start, opt);
        if (sol.objective < best.objective) {
            best = std::move(sol);
        }
    }
    return finalize(prob, std::move(best), opt.c);
}

Penalty solution_penalty(const SpectrumProblem& prob, const Vector& r, double fill) {
    if (r.size() != prob.h) {
        throw std::invalid_argument("solution_penalty: weight vector must have length h");
    }
    const int p = prob.p();
    Vector w = Vector::Constant(p, fill);
    for (int i = 0; i < prob.h; ++i) {
        w(prob.order[static_cast<std::size_t>(i)]) = r(i);
    }
    return penalty_from_weights(prob.basis, w);
}

}  // namespace featrisk
