#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <span>

namespace featrisk {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Sentinel for infinite squared singular values and infinite penalty weights.
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Symmetric eigendecomposition with eigenvalues sorted in descending order.
struct SymEig {
    Vector values;
    Matrix vectors;  // column i pairs with values(i)
};

SymEig sym_eig_desc(const Matrix& a);

Matrix symmetrize(const Matrix& a);

// V diag(d) V^T
Matrix spectral_compose(const Matrix& v, const Vector& d);

// Moore-Penrose inverse of a symmetric PSD matrix; eigenvalues at or below
// rel_cutoff * max eigenvalue are treated as zero. rank receives the kept count.
Matrix pinv_psd(const Matrix& a, double rel_cutoff, int* rank = nullptr);

// Matrix of divided differences (f_i - f_j) / (x_i - x_j). The diagonal and
// near-ties (|x_i - x_j| <= rel_tie * max|x|) use the mean derivative, which is
// the limit of the quotient. This is the kernel of the derivative of a
// symmetric matrix function in its eigenbasis.
Matrix divided_differences(const Vector& x, const Vector& fx, const Vector& dfx,
                           double rel_tie = 1e-9);

// Pairwise summation keeps reductions reproducible and accurate.
double pairwise_sum(std::span<const double> values);

double max_abs(const Matrix& a);

}  // namespace featrisk
