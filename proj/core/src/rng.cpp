#include "featrisk/rng.hpp"

namespace featrisk {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

Rng make_stream(std::uint64_t seed, StreamDomain domain, std::uint64_t index) {
    std::uint64_t key = splitmix64(seed);
    key = splitmix64(key ^ static_cast<std::uint64_t>(domain));
    key = splitmix64(key ^ index);
    return Rng(key);
}

Matrix standard_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    Matrix out(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) {
            out(i, j) = rng.normal();
        }
    }
    return out;
}

Vector standard_normal(Eigen::Index n, Rng& rng) {
    Vector out(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        out(i) = rng.normal();
    }
    return out;
}

Matrix uniform_matrix(Eigen::Index rows, Eigen::Index cols, double lo, double hi, Rng& rng) {
    Matrix out(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) {
            out(i, j) = rng.uniform(lo, hi);
        }
    }
    return out;
}

}  // namespace featrisk
