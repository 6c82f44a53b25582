#pragma once

#include <stdexcept>
#include <string>

namespace featrisk {

enum class Regime { sample_deficient, sample_rich, boundary };

const char* to_string(Regime r);

// Raised when a quantity is requested in a regime where it is undefined,
// e.g. the fixed point for n >= h or any risk exactly at n = h.
class RegimeError : public std::runtime_error {
public:
    RegimeError(Regime regime, const std::string& what)
        : std::runtime_error(what), regime_(regime) {}
    Regime regime() const { return regime_; }

private:
    Regime regime_;
};

// Solver failures: non-convergence, NaN objectives, degenerate spectra.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace featrisk
