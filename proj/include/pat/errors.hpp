#pragma once

#include <stdexcept>
#include <string>

namespace pat {

/// Thrown by guarded spectral operations when a multiplied mode would exceed
/// 10^300 in magnitude. Signals that the regularization width D is below the
/// stability threshold tau1*c0^2*T for the grid's wavenumber range.
class overflow_error : public std::runtime_error {
public:
    overflow_error(double log10_magnitude, double k)
        : std::runtime_error("spectral magnitude exceeds 1e300 (log10 = " +
                             std::to_string(log10_magnitude) + " at |k| = " +
                             std::to_string(k) +
                             "); regularization width D is below the stability threshold"),
          log10_magnitude_(log10_magnitude), k_(k) {}

    double log10_magnitude() const { return log10_magnitude_; }
    double wavenumber() const { return k_; }

private:
    double log10_magnitude_;
    double k_;
};

} // namespace pat
