#include "featrisk/upstream.hpp"

#include "featrisk/errors.hpp"
#include "featrisk/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace featrisk {

UpstreamData generate_upstream(const ProblemInstance& inst, const UpstreamConfig& config, Rng& rng) {
    const int p = inst.p();
    const int q = inst.q();
    if (config.n_pre <= p) {
        throw std::invalid_argument("generate_upstream: n_pre must exceed p (got n_pre=" +
                                    std::to_string(config.n_pre) + ", p=" + std::to_string(p) + ")");
    }
    if (!(config.sigma2_pre >= 0.0)) {
        throw std::invalid_argument("generate_upstream: sigma2_pre must be nonnegative");
    }
    UpstreamData out;
    out.config = config;
    out.y.resize(config.n_pre, q);
    const int designs = config.shared_design ? 1 : q;
    for (int i = 0; i < designs; ++i) {
        out.x.push_back(sample_design(inst.sigma, config.n_pre, rng));
    }
    const double s = std::sqrt(config.sigma2_pre);
    for (int i = 0; i < q; ++i) {
        const Vector eps = standard_normal(config.n_pre, rng) * s;
        out.y.col(i) = out.design(i) * inst.truth.b.col(i) + eps;
    }
    return out;
}

RepresentationEstimate estimate_representation(const UpstreamData& data, int threads) {
    if (data.x.empty()) {
        throw std::invalid_argument("estimate_representation: no design");
    }
    const int q = static_cast<int>(data.y.cols());
    const int p = static_cast<int>(data.x.front().cols());
    std::vector<Eigen::ColPivHouseholderQR<Matrix>> qrs;
    for (const Matrix& x : data.x) {
        Eigen::ColPivHouseholderQR<Matrix> qr(x);
        qr.setThreshold(1e-12);
        if (qr.rank() < p) {
            throw NumericError("estimate_representation: X^T X is singular (rank " +
                               std::to_string(qr.rank()) + " < p=" + std::to_string(p) + ")");
        }
        qrs.push_back(std::move(qr));
    }
    RepresentationEstimate out;
    out.config = data.config;
    out.b_tilde.resize(p, q);
    out.residual_norms.resize(q);
    parallel_for(static_cast<std::size_t>(q), threads, [&](std::size_t j) {
        const int i = static_cast<int>(j);
        const auto& qr = qrs[qrs.size() == 1 ? 0 : j];
        const Vector b = qr.solve(data.y.col(i));
        out.b_tilde.col(i) = b;
        out.residual_norms(i) = (data.design(i) * b - data.y.col(i)).norm();
    });
    return out;
}

std::vector<int> log_grid(int lo, int hi, int points) {
    if (lo <= 0 || hi < lo || points < 1) {
        throw std::invalid_argument("log_grid: need 0 < lo <= hi and points >= 1");
    }
    std::vector<int> out;
    for (int i = 0; i < points; ++i) {
        const double f = points == 1 ? 0.0 : static_cast<double>(i) / (points - 1);
        const double v = std::exp(std::log(lo) + f * (std::log(hi) - std::log(lo)));
        out.push_back(static_cast<int>(std::lround(v)));
    }
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

ScalingResult scaling_experiment(const ProblemInstance& inst, const Penalty& pen,
                                 const std::vector<int>& n_pre_grid, const ScalingOptions& opt) {
    if (n_pre_grid.empty()) {
        throw std::invalid_argument("scaling_experiment: empty grid");
    }
    if (opt.seeds < 1) {
        throw std::invalid_argument("scaling_experiment: need at least one seed");
    }
    const WhitenedSpectrum spec = whiten(inst.sigma, pen);
    const Matrix sa = inst.task.sigma_alpha();
    const double sigma2 = inst.task.sigma2;
    ScalingResult res;
    res.reference = *averaged_objective(spec, inst.truth.b, sa, sigma2, opt.n).risk_avg;

    const std::size_t g = n_pre_grid.size();
    const std::size_t s = static_cast<std::size_t>(opt.seeds);
    std::vector<double> err(g * s);
    parallel_for(g * s, opt.threads, [&](std::size_t cell) {
        const std::size_t gi = cell / s;
        const std::size_t si = cell % s;
        Rng rng = make_stream(opt.seed, StreamDomain::upstream, (si << 32) | gi);
        UpstreamConfig cfg{n_pre_grid[gi], opt.sigma2_pre, opt.shared_design};
        const RepresentationEstimate est = estimate_representation(generate_upstream(inst, cfg, rng));
        const double r = *averaged_objective(spec, est.b_tilde, sa, sigma2, opt.n).risk_avg;
        err[cell] = std::abs(r - res.reference);
    });

    std::vector<double> lx, ly;
    bool all_positive = true;
    for (std::size_t gi = 0; gi < g; ++gi) {
        ScalingRow row;
        row.n_pre = n_pre_grid[gi];
        row.per_seed.assign(err.begin() + static_cast<std::ptrdiff_t>(gi * s),
                            err.begin() + static_cast<std::ptrdiff_t>((gi + 1) * s));
        row.error = pairwise_sum(row.per_seed) / static_cast<double>(s);
        if (s > 1) {
            std::vector<double> sq(s);
            for (std::size_t i = 0; i < s; ++i) {
                sq[i] = (row.per_seed[i] - row.error) * (row.per_seed[i] - row.error);
            }
            row.se = std::sqrt(pairwise_sum(sq) / static_cast<double>(s - 1) / static_cast<double>(s));
        }
        std::vector<double> sorted = row.per_seed;
        std::sort(sorted.begin(), sorted.end());
        row.median = s % 2 == 1 ? sorted[s / 2] : 0.5 * (sorted[s / 2 - 1] + sorted[s / 2]);
        all_positive = all_positive && row.error > 0.0;
        lx.push_back(std::log(static_cast<double>(row.n_pre)));
        ly.push_back(std::log(row.error));
        res.rows.push_back(std::move(row));
    }

    if (!all_positive || g < 2) {
        res.slope = std::numeric_limits<double>::quiet_NaN();
        res.intercept = std::numeric_limits<double>::quiet_NaN();
        return res;
    }
    const double mx = pairwise_sum(lx) / static_cast<double>(g);
    const double my = pairwise_sum(ly) / static_cast<double>(g);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < g; ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    res.slope = sxx > 0.0 ? sxy / sxx : std::numeric_limits<double>::quiet_NaN();
    res.intercept = my - res.slope * mx;
    return res;
}

}  // namespace featrisk
