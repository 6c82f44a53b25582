#pragma once

#include "featrisk/linalg.hpp"

#include <cstdint>
#include <random>

namespace featrisk {

// Stream domains. Each (seed, domain, index) triple owns an independent
// generator, so replicate j draws the same numbers no matter which thread
// runs it or in what order.
enum class StreamDomain : std::uint64_t {
    covariance = 1,
    ground_truth = 2,
    task = 3,
    design = 4,
    noise = 5,
    upstream = 6,
    init = 7,
    search = 8,
    test = 9,
};

std::uint64_t splitmix64(std::uint64_t x);

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double normal() { return normal_(engine_); }
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * std::generate_canonical<double, 53>(engine_);
    }
    std::uint64_t next() { return engine_(); }
    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

Rng make_stream(std::uint64_t seed, StreamDomain domain, std::uint64_t index = 0);

// Filled column by column so the layout of draws is fixed.
Matrix standard_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng);
Vector standard_normal(Eigen::Index n, Rng& rng);
Matrix uniform_matrix(Eigen::Index rows, Eigen::Index cols, double lo, double hi, Rng& rng);

}  // namespace featrisk
