#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <vector>

#include "pat/errors.hpp"
#include "pat/fft.hpp"
#include "pat/grid.hpp"
#include "pat/medium.hpp"

namespace pat {

/// Radial spectral symbols of the thermo-viscous equation on a grid's
/// wavenumber nodes:
///   k_c = 2/(tau1 c0),  mu(k) = c0 k^2/k_c,
///   theta(k) = c0 k sqrt(1 - k^2/k_c^2)      for k <= k_c (oscillatory),
///   theta(k) = i theta0,  theta0 = c0 k sqrt(k^2/k_c^2 - 1)  for k > k_c.
/// For tau1 = 0 the table degenerates to mu = 0, theta = c0 k (kc = inf).
struct SymbolTable {
    GridSpec grid;
    double c0 = 0.0;
    double tau1 = 0.0;
    double kc = std::numeric_limits<double>::infinity();
    std::vector<double> k;       ///< |k| per node
    std::vector<double> mu;      ///< damping rate, >= 0
    std::vector<double> theta;   ///< real branch value, 0 on evanescent nodes
    std::vector<double> theta0;  ///< evanescent rate, 0 on oscillatory nodes
    std::vector<std::uint8_t> evanescent;

    std::size_t size() const { return k.size(); }
};

inline SymbolTable build_symbols(const GridSpec& grid, const MediumParams& m) {
    grid.validate();
    m.validate();
    SymbolTable t;
    t.grid = grid;
    t.c0 = m.c0;
    t.tau1 = m.tau1;
    t.kc = m.tau1 > 0.0 ? 2.0 / (m.tau1 * m.c0) : std::numeric_limits<double>::infinity();
    const std::size_t n = grid.size();
    t.k.resize(n);
    t.mu.assign(n, 0.0);
    t.theta.assign(n, 0.0);
    t.theta0.assign(n, 0.0);
    t.evanescent.assign(n, 0);
    detail::for_each_k2(grid, [&](std::size_t idx, double k2) {
        const double k = std::sqrt(k2);
        t.k[idx] = k;
        if (m.tau1 > 0.0) {
            t.mu[idx] = m.c0 * k2 / t.kc;
            const double ratio2 = k2 / (t.kc * t.kc);
            if (k <= t.kc) {
                t.theta[idx] = m.c0 * k * std::sqrt(std::max(0.0, 1.0 - ratio2));
            } else {
                t.evanescent[idx] = 1;
                t.theta0[idx] = m.c0 * k * std::sqrt(ratio2 - 1.0);
            }
        } else {
            t.theta[idx] = m.c0 * k;
        }
    });
    return t;
}

// ---------------------------------------------------------------------------
// sin(theta t)/theta with the removable singularity handled, on both branches.
// ---------------------------------------------------------------------------

namespace detail {

/// sin(x)/a for real x = a*t; Taylor below 1e-6 per the removable-singularity
/// contract.
inline double sinct_osc(double theta, double t) {
    const double x = theta * t;
    if (std::abs(x) < 1e-6) return t * (1.0 - x * x / 6.0);
    return std::sin(x) / theta;
}

/// sinh(x)/a on the evanescent branch (theta = i theta0).
inline double sinct_evan(double theta0, double t) {
    const double x = theta0 * t;
    if (std::abs(x) < 1e-6) return t * (1.0 + x * x / 6.0);
    return std::sinh(x) / theta0;
}

/// log(sinh(x)/x) evaluated without overflow: x + log((1 - e^{-2x})/(2x)).
inline double log_sinh_over(double theta0, double t) {
    const double x = theta0 * t;
    if (x < 1e-6) return std::log(t * (1.0 + x * x / 6.0));
    return x + std::log((1.0 - std::exp(-2.0 * x)) / (2.0 * theta0));
}

} // namespace detail

/// sin(theta t)/theta for complex theta; pure-imaginary theta takes the
/// stable sinh route.
inline std::complex<double> sinct(std::complex<double> theta, double t) {
    if (theta.real() == 0.0 && theta.imag() != 0.0)
        return {detail::sinct_evan(std::abs(theta.imag()), t), 0.0};
    if (std::abs(theta) * t < 1e-6) {
        const std::complex<double> x = theta * t;
        return t * (1.0 - x * x / 6.0);
    }
    return std::sin(theta * t) / theta;
}

/// Fourier transform of the Gaussian g_D: (2 pi)^{-dim/2} e^{-D k^2}.
inline double gauss_hat(double k, double D, int dim) {
    if (!(D > 0.0)) throw std::invalid_argument("gauss_hat: D must be > 0");
    return std::pow(2.0 * std::numbers::pi, -0.5 * dim) * std::exp(-D * k * k);
}

/// Lower bound on the regularization width, D = 2 (c0/k_c + eps) T.
/// Strictly exceeds the resolution limit tau1 c0^2 T for eps > 0.
inline double required_D(const MediumParams& m, double T, double eps) {
    if (!(T > 0.0)) throw std::invalid_argument("required_D: T must be > 0");
    if (!(eps > 0.0)) throw std::invalid_argument("required_D: eps must be > 0");
    const double c0_over_kc = m.tau1 > 0.0 ? m.c0 * m.tau1 * m.c0 / 2.0 : 0.0;
    return 2.0 * (c0_over_kc + eps) * T;
}

/// Default margin, 10% of c0/k_c (tau1 > 0 only).
inline double default_eps(const MediumParams& m) {
    if (!(m.tau1 > 0.0)) throw std::invalid_argument("default_eps: needs tau1 > 0");
    return 0.1 * m.c0 * m.tau1 * m.c0 / 2.0;
}

namespace detail {

/// Applies a radial spectral multiplier on the 2x zero-padded grid:
/// pad -> FFT -> m(|k|^2) -> IFFT -> extract. mult receives |k|^2 and returns
/// the real multiplier value.
template <class Mult>
RealField apply_radial_multiplier(const RealField& f, Mult&& mult, int pad_factor = 2) {
    const RealField padded = pad_embed(f, pad_factor);
    SpectralField hat = forward_fft(padded);
    detail::for_each_k2(hat.grid, [&](std::size_t idx, double k2) { hat.values[idx] *= mult(k2); });
    const RealField back = inverse_fft(hat);
    return unpad_extract(back, f.grid);
}

} // namespace detail

/// Gaussian regularization R_D phi = g_D * phi, computed spectrally as
/// multiplication by e^{-D k^2}. Mass-preserving and non-amplifying.
inline RealField apply_RD(const RealField& phi, double D, int pad_factor = 2) {
    if (!(D > 0.0)) throw std::invalid_argument("apply_RD: D must be > 0");
    return detail::apply_radial_multiplier(phi, [D](double k2) { return std::exp(-D * k2); },
                                           pad_factor);
}

/// Spectral Laplacian (multiplier -|k|^2) on the padded grid.
inline RealField apply_laplacian(const RealField& phi) {
    return detail::apply_radial_multiplier(phi, [](double k2) { return -k2; });
}

/// Per-shell suprema of |phi^| e^{D k^2}: a finite-grid proxy for membership
/// in G_D. Values may legitimately overflow to inf for rough fields; pass/
/// fail is the caller's call.
struct GdMarginReport {
    double dk = 0.0;                 ///< shell width
    std::vector<double> shell_k;     ///< shell center radius
    std::vector<double> shell_max;   ///< sup |phi^| e^{D k^2} over the shell
};

inline GdMarginReport in_GD_margin(const SpectralField& phi_hat, double D) {
    GdMarginReport rep;
    rep.dk = phi_hat.grid.dk();
    const double kmax = phi_hat.grid.kmax() * std::sqrt(static_cast<double>(phi_hat.grid.dim));
    const std::size_t nshell = static_cast<std::size_t>(std::floor(kmax / rep.dk)) + 2;
    rep.shell_k.resize(nshell);
    rep.shell_max.assign(nshell, 0.0);
    for (std::size_t s = 0; s < nshell; ++s) rep.shell_k[s] = s * rep.dk;
    detail::for_each_k2(phi_hat.grid, [&](std::size_t idx, double k2) {
        const double k = std::sqrt(k2);
        const std::size_t s = static_cast<std::size_t>(std::llround(k / rep.dk));
        const double mag = std::abs(phi_hat.values[idx]);
        const double v = mag == 0.0 ? 0.0 : mag * std::exp(D * k2);
        if (v > rep.shell_max[s]) rep.shell_max[s] = v;
    });
    return rep;
}

} // namespace pat
