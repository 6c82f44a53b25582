#include "featrisk/model.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace featrisk {

Matrix psd_sqrt(const Matrix& a) {
    const SymEig eig = sym_eig_desc(a);
    return spectral_compose(eig.vectors, eig.values.cwiseMax(0.0).cwiseSqrt());
}

CovarianceModel::CovarianceModel(const Matrix& sigma) {
    if (sigma.rows() != sigma.cols()) {
        throw std::invalid_argument("covariance must be square");
    }
    if (!sigma.allFinite()) {
        throw std::invalid_argument("covariance has non-finite entries");
    }
    const double scale = max_abs(sigma);
    if (max_abs(sigma - sigma.transpose()) > kSymmetryTol * std::max(scale, 1e-300)) {
        throw std::invalid_argument("covariance is not symmetric");
    }
    sigma_ = symmetrize(sigma);
    SymEig eig = sym_eig_desc(sigma_);
    const Eigen::Index p = sigma_.rows();
    const double top = p > 0 ? std::max(eig.values(0), 0.0) : 0.0;
    if (p > 0) {
        const double lowest = eig.values(p - 1);
        if (lowest < -kNegativeTol * top || (top == 0.0 && lowest < 0.0)) {
            std::ostringstream msg;
            msg << "covariance is not positive semidefinite: most negative eigenvalue " << lowest
                << " (largest " << top << ")";
            throw std::invalid_argument(msg.str());
        }
    }
    eta_ = eig.values.cwiseMax(0.0);
    u_ = std::move(eig.vectors);
    rank_ = 0;
    for (Eigen::Index i = 0; i < p; ++i) {
        if (eta_(i) > kRankTol * top) {
            ++rank_;
        }
    }
    sqrt_ = spectral_compose(u_, eta_.cwiseSqrt());
}

namespace {

Matrix ar1_matrix(int p, double rho) {
    if (p <= 0) {
        throw std::invalid_argument("ar1: p must be positive");
    }
    if (!(std::abs(rho) < 1.0)) {
        throw std::invalid_argument("ar1: |rho| must be < 1");
    }
    Matrix s(p, p);
    for (int i = 0; i < p; ++i) {
        for (int j = 0; j < p; ++j) {
            s(i, j) = std::pow(rho, std::abs(i - j));
        }
    }
    return s;
}

}  // namespace

CovarianceModel make_covariance(const CovarianceSpec& spec, Rng* rng) {
    if (const auto* ar = std::get_if<Ar1Spec>(&spec)) {
        return CovarianceModel(ar1_matrix(ar->p, ar->rho));
    }
    if (const auto* wj = std::get_if<WishartJitterSpec>(&spec)) {
        if (wj->p <= 0 || wj->m <= 0) {
            throw std::invalid_argument("wishart_jitter: p and m must be positive");
        }
        if (wj->jitter < 0.0) {
            throw std::invalid_argument("wishart_jitter: jitter must be >= 0");
        }
        if (rng == nullptr) {
            throw std::invalid_argument("wishart_jitter needs a random stream");
        }
        const Matrix w = standard_normal(wj->p, wj->m, *rng);
        Matrix s = (w * w.transpose()) / static_cast<double>(wj->m);
        s.diagonal().array() += wj->jitter;
        return CovarianceModel(symmetrize(s));
    }
    if (const auto* id = std::get_if<IdentitySpec>(&spec)) {
        if (id->p <= 0) {
            throw std::invalid_argument("identity: p must be positive");
        }
        return CovarianceModel(Matrix::Identity(id->p, id->p));
    }
    return CovarianceModel(std::get<ExplicitSpec>(spec).sigma);
}

GroundTruthRepresentation make_ground_truth(const Matrix& b) {
    if (!b.allFinite()) {
        throw std::invalid_argument("ground-truth representation has non-finite entries");
    }
    GroundTruthRepresentation out;
    out.b = b;
    out.gram = sym_eig_desc(b * b.transpose());
    return out;
}

GroundTruthRepresentation sample_ground_truth(int p, int q, const CovarianceModel& column_cov,
                                              Rng& rng) {
    if (column_cov.p() != p) {
        throw std::invalid_argument("sample_ground_truth: column covariance has wrong dimension");
    }
    if (q <= 0) {
        throw std::invalid_argument("sample_ground_truth: q must be positive");
    }
    const Matrix z = standard_normal(p, q, rng);
    return make_ground_truth(column_cov.sqrt() * z);
}

double calibrate_snr(const Matrix& b, const Matrix& shape, double sigma2, double snr) {
    if (snr < 0.0 || sigma2 < 0.0) {
        throw std::invalid_argument("calibrate_snr: negative target or noise");
    }
    const double tr = (b * shape * b.transpose()).trace();
    if (!(tr > 0.0)) {
        throw std::invalid_argument("calibrate_snr: uninformative representation (zero trace)");
    }
    const double q = static_cast<double>(b.cols());
    return snr * snr * sigma2 * q / tr;
}

ProblemInstance make_instance(CovarianceModel sigma, GroundTruthRepresentation truth,
                              TaskModel task, std::uint64_t seed) {
    if (truth.p() != sigma.p()) {
        throw std::invalid_argument("instance: B* rows do not match Sigma");
    }
    if (task.shape.rows() != truth.q() || task.shape.cols() != truth.q()) {
        throw std::invalid_argument("instance: prior shape must be q x q");
    }
    // sigma2 = 0 is allowed: several noiseless checks need it
    if (!(task.sigma2 >= 0.0)) {
        throw std::invalid_argument("instance: sigma2 must be nonnegative");
    }
    const SymEig se = sym_eig_desc(task.shape);
    if (se.values.size() > 0 &&
        se.values(se.values.size() - 1) < -1e-12 * std::max(se.values(0), 0.0)) {
        throw std::invalid_argument("instance: prior shape is not PSD");
    }
    if (task.snr) {
        task.scale = calibrate_snr(truth.b, task.shape, task.sigma2, *task.snr);
    }
    return ProblemInstance{std::move(sigma), std::move(truth), std::move(task), seed};
}

TaskDraw sample_task(const ProblemInstance& inst, Rng& rng) {
    const int q = inst.q();
    const Matrix root = psd_sqrt(inst.task.sigma_alpha());
    TaskDraw out;
    out.alpha = root * standard_normal(q, rng) / std::sqrt(static_cast<double>(q));
    out.beta = inst.truth.b * out.alpha;
    return out;
}

Matrix sample_design(const CovarianceModel& sigma, int n, Rng& rng) {
    if (n <= 0) {
        throw std::invalid_argument("sample_design: n must be positive");
    }
    return standard_normal(n, sigma.p(), rng) * sigma.sqrt();
}

Dataset sample_data(const ProblemInstance& inst, const Vector& beta, int n, Rng& rng) {
    if (beta.size() != inst.p()) {
        throw std::invalid_argument("sample_data: beta has wrong dimension");
    }
    Dataset d;
    d.x = sample_design(inst.sigma, n, rng);
    d.eps = standard_normal(n, rng) * std::sqrt(inst.task.sigma2);
    d.y = d.x * beta + d.eps;
    return d;
}

}  // namespace featrisk
