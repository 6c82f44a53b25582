#include "featrisk/montecarlo.hpp"

#include "featrisk/parallel.hpp"
#include "featrisk/predictor.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace featrisk {

namespace {

struct ReplicateTerms {
    Vector e;   // Sigma^{1/2} (beta - m)
    Matrix la;  // Sigma^{1/2} A, p x n
};

// A = Gamma^{-1/2} X~^+ with X~ = X Gamma^{-1/2}; this equals
// Gamma^{-1} X^T (X Gamma^{-1} X^T)^+, so beta_hat = A y and m = A X beta.
ReplicateTerms replicate_terms(const Matrix& x, const Penalty& pen, const Vector& beta,
                               const Matrix& sigma_sqrt) {
    const Matrix& g = pen.gamma_inv_sqrt();
    const Matrix xt = x * g;
    Eigen::BDCSVD<Matrix> svd(xt, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();
    const double cutoff = s.size() > 0 ? kPinvCutoff * s(0) : 0.0;
    Eigen::Index r = 0;
    while (r < s.size() && s(r) > cutoff && s(r) > 0.0) {
        ++r;
    }
    const Matrix vs = svd.matrixV().leftCols(r) * s.head(r).cwiseInverse().asDiagonal();
    const Matrix a = g * (vs * svd.matrixU().leftCols(r).transpose());
    ReplicateTerms out;
    const Vector m = a * (x * beta);
    out.e = sigma_sqrt * (beta - m);
    out.la = sigma_sqrt * a;
    return out;
}

double jackknife_se(const std::vector<double>& loo) {
    const std::size_t n = loo.size();
    if (n < 2) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    const double mean = pairwise_sum(loo) / static_cast<double>(n);
    std::vector<double> sq(n);
    for (std::size_t i = 0; i < n; ++i) {
        sq[i] = (loo[i] - mean) * (loo[i] - mean);
    }
    return std::sqrt(pairwise_sum(sq) * static_cast<double>(n - 1) / static_cast<double>(n));
}

double sum_all(const Matrix& m) {
    std::vector<double> cols(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        cols[static_cast<std::size_t>(j)] =
            pairwise_sum(std::span<const double>(m.col(j).data(), static_cast<std::size_t>(m.rows())));
    }
    return pairwise_sum(cols);
}

std::vector<double> to_std(const Vector& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace

ScDecomposition sc_decomposition(const Matrix& x, const Penalty& pen, const Vector& beta_star,
                                 const Matrix& sigma, double sigma2) {
    if (x.cols() != pen.p() || beta_star.size() != pen.p() || sigma.rows() != pen.p()) {
        throw std::invalid_argument("sc_decomposition: dimension mismatch");
    }
    const Matrix root = psd_sqrt(sigma);
    const ReplicateTerms t = replicate_terms(x, pen, beta_star, root);
    return {t.e.squaredNorm(), sigma2 * t.la.squaredNorm()};
}

DecompositionEstimate fg_estimates(const ProblemInstance& inst, const Penalty& pen,
                                   const Vector& beta_star, int n, const McOptions& opt) {
    const int big_n = opt.replicates;
    if (big_n < 2) {
        throw std::invalid_argument("fg_estimates: need at least 2 replicates");
    }
    if (n <= 0) {
        throw std::invalid_argument("fg_estimates: n must be positive");
    }
    const int p = inst.p();
    if (pen.p() != p || beta_star.size() != p) {
        throw std::invalid_argument("fg_estimates: dimension mismatch");
    }
    const double sigma2 = inst.task.sigma2;

    Matrix e(p, big_n);
    Matrix af(static_cast<Eigen::Index>(p) * n, big_n);
    parallel_for(static_cast<std::size_t>(big_n), opt.threads, [&](std::size_t j) {
        Rng rng = make_stream(opt.seed, StreamDomain::design, opt.stream_offset + j);
        const Matrix x = sample_design(inst.sigma, n, rng);
        ReplicateTerms t = replicate_terms(x, pen, beta_star, inst.sigma.sqrt());
        const auto col = static_cast<Eigen::Index>(j);
        e.col(col) = t.e;
        af.col(col) = Eigen::Map<const Vector>(t.la.data(), t.la.size());
    });

    const Matrix gm = e.transpose() * e;    // (beta - m_j)^T Sigma (beta - m_k)
    const Matrix ga = af.transpose() * af;  // tr(A_j^T Sigma A_k)
    const double nn = static_cast<double>(big_n);

    const Vector dm = gm.diagonal();
    const Vector da = ga.diagonal();
    const Vector rm = gm.rowwise().sum();
    const Vector ra = ga.rowwise().sum();
    const double sm = sum_all(gm);
    const double sa = sum_all(ga);
    const double sdm = pairwise_sum(to_std(dm));
    const double sda = pairwise_sum(to_std(da));

    DecompositionEstimate out;
    out.replicates = big_n;
    out.sc_bias_mean = sdm / nn;
    out.sc_variance_mean = sigma2 * sda / nn;
    out.bias.value = sm / (nn * nn);
    out.var_x.value = out.sc_bias_mean - out.bias.value;
    out.var_noise.value = sigma2 * (sa - sda) / (nn * (nn - 1.0));
    out.var_x_noise.value = out.sc_variance_mean - out.var_noise.value;
    out.risk.value = out.sc_bias_mean + out.sc_variance_mean;

    // leave-one-out replicas of every estimator
    const double n1 = nn - 1.0;
    std::vector<double> l_bias(big_n), l_vx(big_n), l_ve(big_n), l_vxe(big_n), l_risk(big_n);
    for (int i = 0; i < big_n; ++i) {
        const double bsc = (sdm - dm(i)) / n1;
        const double vsc = sigma2 * (sda - da(i)) / n1;
        const double b = (sm - 2.0 * rm(i) + dm(i)) / (n1 * n1);
        double ve = std::numeric_limits<double>::quiet_NaN();
        if (big_n >= 3) {
            const double off = (sa - 2.0 * ra(i) + da(i)) - (sda - da(i));
            ve = sigma2 * off / (n1 * (n1 - 1.0));
        }
        l_bias[i] = b;
        l_vx[i] = bsc - b;
        l_ve[i] = ve;
        l_vxe[i] = vsc - ve;
        l_risk[i] = bsc + vsc;
    }
    out.bias.se = jackknife_se(l_bias);
    out.var_x.se = jackknife_se(l_vx);
    out.var_noise.se = jackknife_se(l_ve);
    out.var_x_noise.se = jackknife_se(l_vxe);
    out.risk.se = jackknife_se(l_risk);
    return out;
}

DecompositionEstimate fg_estimates(const ProblemInstance& inst, const Representation& rep,
                                   const RegularizationParams& lam, const Vector& beta_star, int n,
                                   const McOptions& opt) {
    return fg_estimates(inst, build_penalty(rep, lam), beta_star, n, opt);
}

std::vector<RiskCurveRow> risk_curve(const ProblemInstance& inst, const Penalty& pen,
                                     const Vector& beta_star, const std::vector<int>& n_grid,
                                     const McOptions& opt) {
    const WhitenedSpectrum spec = whiten(inst.sigma, pen);
    std::vector<RiskCurveRow> rows;
    rows.reserve(n_grid.size());
    for (int n : n_grid) {
        RiskCurveRow row;
        row.n = n;
        McOptions o = opt;
        // designs for different n come from disjoint stream ranges
        o.stream_offset = opt.stream_offset + (static_cast<std::uint64_t>(n) << 32);
        row.mc = fg_estimates(inst, pen, beta_star, n, o);
        try {
            row.asy = risk_components(spec, beta_star, inst.task.sigma2, n);
        } catch (const RegimeError& err) {
            row.status = to_string(err.regime());
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace featrisk
