#include "featrisk/linalg.hpp"

#include <algorithm>
#include <stdexcept>

namespace featrisk {

Matrix symmetrize(const Matrix& a) {
    return 0.5 * (a + a.transpose());
}

SymEig sym_eig_desc(const Matrix& a) {
    if (a.rows() != a.cols()) {
        throw std::invalid_argument("sym_eig_desc: matrix is not square");
    }
    SymEig out;
    const Eigen::Index m = a.rows();
    if (m == 0) {
        return out;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetrize(a));
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error("sym_eig_desc: eigensolver did not converge");
    }
    // Eigen returns ascending order; flip.
    out.values = solver.eigenvalues().reverse();
    out.vectors = solver.eigenvectors().rowwise().reverse();
    return out;
}

Matrix spectral_compose(const Matrix& v, const Vector& d) {
    return v * d.asDiagonal() * v.transpose();
}

Matrix pinv_psd(const Matrix& a, double rel_cutoff, int* rank) {
    const SymEig eig = sym_eig_desc(a);
    const Eigen::Index m = a.rows();
    Vector inv = Vector::Zero(m);
    int kept = 0;
    if (m > 0) {
        const double cutoff = rel_cutoff * std::max(eig.values(0), 0.0);
        for (Eigen::Index i = 0; i < m; ++i) {
            if (eig.values(i) > cutoff && eig.values(i) > 0.0) {
                inv(i) = 1.0 / eig.values(i);
                ++kept;
            }
        }
    }
    if (rank != nullptr) {
        *rank = kept;
    }
    return spectral_compose(eig.vectors, inv);
}

Matrix divided_differences(const Vector& x, const Vector& fx, const Vector& dfx,
                           double rel_tie) {
    const Eigen::Index m = x.size();
    const double scale = m > 0 ? x.cwiseAbs().maxCoeff() : 0.0;
    Matrix out(m, m);
    for (Eigen::Index j = 0; j < m; ++j) {
        for (Eigen::Index i = 0; i < m; ++i) {
            const double gap = x(i) - x(j);
            if (i == j || std::abs(gap) <= rel_tie * scale) {
                out(i, j) = 0.5 * (dfx(i) + dfx(j));
            } else {
                out(i, j) = (fx(i) - fx(j)) / gap;
            }
        }
    }
    return out;
}

double pairwise_sum(std::span<const double> values) {
    if (values.size() <= 8) {
        double s = 0.0;
        for (double v : values) {
            s += v;
        }
        return s;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.subspan(0, half)) + pairwise_sum(values.subspan(half));
}

double max_abs(const Matrix& a) {
    return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

}  // namespace featrisk
