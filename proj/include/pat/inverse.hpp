#pragma once

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "pat/errors.hpp"
#include "pat/propagation.hpp"
#include "pat/spectral_core.hpp"

namespace pat {

namespace detail {

struct RadialSymbol {
    double mu = 0.0;
    double theta = 0.0;
    double theta0 = 0.0;
    bool evanescent = false;
};

inline RadialSymbol radial_symbol(double k, const MediumParams& m) {
    RadialSymbol s;
    if (m.tau1 > 0.0) {
        const double kc = 2.0 / (m.tau1 * m.c0);
        const double r2 = (k / kc) * (k / kc);
        s.mu = m.c0 * k * k / kc;
        if (k <= kc) {
            s.theta = m.c0 * k * std::sqrt(std::max(0.0, 1.0 - r2));
        } else {
            s.evanescent = true;
            s.theta0 = m.c0 * k * std::sqrt(r2 - 1.0);
        }
    } else {
        s.theta = m.c0 * k;
    }
    return s;
}

/// J_T multiplier sin^2(theta T)/theta^2 at radius k; sinh branch past k_c.
/// May overflow to inf deep in the evanescent band (guarded consumers use
/// log_J_radial).
inline double J_radial(double k, const MediumParams& m, double T) {
    const RadialSymbol s = radial_symbol(k, m);
    if (!s.evanescent) {
        const double v = sinct_osc(s.theta, T);
        return v * v;
    }
    const double v = sinct_evan(s.theta0, T);
    return v * v;
}

/// log of the J_T multiplier (stable for big sinh arguments); -inf at zeros.
inline double log_J_radial(double k, const MediumParams& m, double T) {
    const RadialSymbol s = radial_symbol(k, m);
    if (!s.evanescent) {
        const double v = std::abs(sinct_osc(s.theta, T));
        return v == 0.0 ? -std::numeric_limits<double>::infinity() : 2.0 * std::log(v);
    }
    return 2.0 * log_sinh_over(s.theta0, T);
}

/// A^(k) = (1 - tau2^2 c0^2 k^2)^2 - c0^2 k^2 sin^2(theta T)/theta^2.
inline double A_radial(double k, const MediumParams& m, double T, double tau2) {
    const double b = 1.0 - tau2 * tau2 * m.c0 * m.c0 * k * k;
    return b * b - m.c0 * m.c0 * k * k * J_radial(k, m, T);
}

} // namespace detail

/// Precomputed spectral multipliers of J_T and A on a grid's nodes.
/// J_hat >= 0 everywhere; A_hat(0) = 1. Evanescent nodes can hold inf
/// (sinh^2 growth); the application routines below stay in log space there.
struct OperatorSymbols {
    GridSpec grid;
    Tau2Mode tau2_mode = Tau2Mode::zero;
    double T = 0.0;
    std::vector<double> J_hat;
    std::vector<double> A_hat;
};

/// sin^2(theta T)/theta^2 per grid node; sinh^2(theta0 T)/theta0^2 past k_c.
inline std::vector<double> build_J_hat(const SymbolTable& s, double T) {
    if (!(T > 0.0)) throw std::invalid_argument("build_J_hat: T must be > 0");
    std::vector<double> out(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double v = s.evanescent[i] ? detail::sinct_evan(s.theta0[i], T)
                                         : detail::sinct_osc(s.theta[i], T);
        out[i] = v * v;
    }
    return out;
}

/// A^(k) = (1 - tau2^2 c0^2 k^2)^2 - c0^2 k^2 J^(k) per grid node.
inline std::vector<double> build_A_hat(const SymbolTable& s, double T, Tau2Mode mode,
                                       const MediumParams& m) {
    if (!(T > 0.0)) throw std::invalid_argument("build_A_hat: T must be > 0");
    const double tau2 = tau2_value(m, mode);
    const std::vector<double> J = build_J_hat(s, T);
    std::vector<double> out(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double k2 = s.k[i] * s.k[i];
        const double b = 1.0 - tau2 * tau2 * m.c0 * m.c0 * k2;
        out[i] = b * b - m.c0 * m.c0 * k2 * J[i];
    }
    return out;
}

inline OperatorSymbols build_operator_symbols(const GridSpec& grid, const MediumParams& m,
                                              double T, Tau2Mode mode) {
    const SymbolTable s = build_symbols(grid, m);
    OperatorSymbols os;
    os.grid = grid;
    os.tau2_mode = mode;
    os.T = T;
    os.J_hat = build_J_hat(s, T);
    os.A_hat = build_A_hat(s, T, mode, m);
    return os;
}

/// J_T * xi computed spectrally. With D > 0 the input is regularized by R_D
/// in the same pass (xi presented as an L^2 field); D = 0 is raw
/// multiplication. Matches the T-snapshot of the auxiliary fourth-order wave
/// equation driven by xi.
inline RealField apply_JT(const RealField& xi, const MediumParams& m, double T, double D = 0.0,
                          int pad_factor = 2) {
    if (!(T > 0.0)) throw std::invalid_argument("apply_JT: T must be > 0");
    if (D < 0.0) throw std::invalid_argument("apply_JT: D must be >= 0");
    const RealField padded = pad_embed(xi, pad_factor);
    SpectralField hat = forward_fft(padded);
    const SymbolTable sym = build_symbols(padded.grid, m);
    for (std::size_t i = 0; i < hat.values.size(); ++i) {
        const double k = sym.k[i];
        const double logJ = detail::log_J_radial(k, m, T) - D * k * k;
        const double mag = std::abs(hat.values[i]);
        if (mag > 0.0 && std::isfinite(logJ)) {
            const double log10_total = logJ / std::numbers::ln10 + std::log10(mag);
            if (log10_total > detail::kOverflowLog10) throw overflow_error(log10_total, k);
        }
        hat.values[i] *= std::isfinite(logJ) ? std::exp(logJ) : 0.0;
    }
    const RealField back = inverse_fft(hat);
    return unpad_extract(back, xi.grid);
}

/// Hilbert-Schmidt norm proxy: radial quadrature of
/// ((2 pi)^{-dim/2} J^(k) e^{-D k^2})^2 over |k| with the dim-appropriate
/// surface measure. Finite for D above the resolution limit.
inline double hs_norm_J(const SymbolTable& s, double T, double D) {
    if (!(D > 0.0)) throw std::invalid_argument("hs_norm_J: D must be > 0");
    const int dim = s.grid.dim;
    const double surface = dim == 3 ? 4.0 * std::numbers::pi
                          : dim == 2 ? 2.0 * std::numbers::pi
                                     : 2.0;
    const double kmax = s.grid.kmax() * std::sqrt(static_cast<double>(dim));
    const std::size_t nq = 8192;
    const double dk = kmax / static_cast<double>(nq);
    const MediumParams m{s.c0, s.tau1, 0.0, 0.0};
    const double log_norm2 = -static_cast<double>(dim) * std::log(2.0 * std::numbers::pi);
    double sum = 0.0;
    for (std::size_t j = 0; j <= nq; ++j) {
        const double k = j * dk;
        const double log_f = 2.0 * detail::log_J_radial(k, m, T) - 2.0 * D * k * k + log_norm2;
        double f = std::isfinite(log_f) ? std::exp(log_f) : 0.0;
        f *= std::pow(k, dim - 1);
        sum += (j == 0 || j == nq) ? 0.5 * f : f;
    }
    return surface * sum * dk;
}

/// A(R_D phi): spectral application of A^ = (1-tau2^2 c0^2 k^2)^2 - c0^2 k^2 J^.
/// The J term is assembled in log space; equals half of imaging_F1.
inline RealField apply_A(const RealField& phi_D, const MediumParams& m, double T,
                         Tau2Mode mode, int pad_factor = 2) {
    if (!(T > 0.0)) throw std::invalid_argument("apply_A: T must be > 0");
    const double tau2 = tau2_value(m, mode);
    const RealField padded = pad_embed(phi_D, pad_factor);
    SpectralField hat = forward_fft(padded);
    const SymbolTable sym = build_symbols(padded.grid, m);
    for (std::size_t i = 0; i < hat.values.size(); ++i) {
        const double k = sym.k[i];
        const double k2 = k * k;
        const double b = 1.0 - tau2 * tau2 * m.c0 * m.c0 * k2;
        double jterm = 0.0;
        if (k > 0.0) {
            const double log_jterm = std::log(m.c0 * m.c0 * k2) + detail::log_J_radial(k, m, T);
            const double mag = std::abs(hat.values[i]);
            if (mag > 0.0 && std::isfinite(log_jterm)) {
                const double log10_total = log_jterm / std::numbers::ln10 + std::log10(mag);
                if (log10_total > detail::kOverflowLog10) throw overflow_error(log10_total, k);
            }
            jterm = std::isfinite(log_jterm) ? std::exp(log_jterm) : 0.0;
        }
        hat.values[i] *= b * b - jterm;
    }
    const RealField back = inverse_fft(hat);
    return unpad_extract(back, phi_D.grid);
}

/// Default Tikhonov damping, 1e-6 * max A^2 over the padded grid band.
inline double default_lambda(const GridSpec& grid, const MediumParams& m, double T,
                             Tau2Mode mode) {
    const double tau2 = tau2_value(m, mode);
    const GridSpec pg = padded_grid(grid, 2);
    const double kmax = pg.kmax() * std::sqrt(static_cast<double>(pg.dim));
    const std::size_t nq = 4096;
    double amax2 = 0.0;
    for (std::size_t j = 0; j <= nq; ++j) {
        const double k = kmax * static_cast<double>(j) / static_cast<double>(nq);
        const double a = detail::A_radial(k, m, T, tau2);
        if (std::isfinite(a) && a * a > amax2) amax2 = a * a;
    }
    return 1e-6 * amax2;
}

/// Spectral Tikhonov solve of A(R_D phi) = f:
///   phi^ = A^ f^ / (A^2 + lambda).
/// Near-infinite symbol values fall back to plain division (the damped form's
/// limit); non-finite symbol values annihilate the mode.
inline RealField solve_operator_eq(const RealField& f, const MediumParams& m, double T,
                                   Tau2Mode mode, double lambda, int pad_factor = 2) {
    if (!(lambda > 0.0)) throw std::invalid_argument("solve_operator_eq: lambda must be > 0");
    if (!(T > 0.0)) throw std::invalid_argument("solve_operator_eq: T must be > 0");
    const double tau2 = tau2_value(m, mode);
    const RealField padded = pad_embed(f, pad_factor);
    SpectralField hat = forward_fft(padded);
    const SymbolTable sym = build_symbols(padded.grid, m);
    for (std::size_t i = 0; i < hat.values.size(); ++i) {
        const double a = detail::A_radial(sym.k[i], m, T, tau2);
        if (!std::isfinite(a)) {
            hat.values[i] = 0.0;
        } else if (std::abs(a) > 1e150) {
            hat.values[i] /= a;
        } else {
            hat.values[i] *= a / (a * a + lambda);
        }
    }
    const RealField back = inverse_fft(hat);
    return unpad_extract(back, f.grid);
}

/// One radial zero crossing of A^.
struct ZeroShell {
    int index = 0;
    double k = 0.0;
};

/// Dense radial scan of A^ for zero shells. Sign changes are bisected; the
/// tau1 = 0 case has tangent zeros (A^ = cos^2(c0 k T) touches zero), so
/// local minima are ternary-refined and accepted when they reach zero within
/// scan tolerance. The evanescent band has no zeros.
inline std::vector<ZeroShell> symbol_zero_report(const GridSpec& grid, const MediumParams& m,
                                                 double T, Tau2Mode mode,
                                                 std::size_t n_scan = 8192) {
    const double tau2 = tau2_value(m, mode);
    const double kmax = grid.kmax() * std::sqrt(static_cast<double>(grid.dim));
    std::vector<ZeroShell> shells;
    auto eval = [&](double k) { return detail::A_radial(k, m, T, tau2); };
    const double dk = kmax / static_cast<double>(n_scan);
    std::vector<double> a(n_scan + 1);
    for (std::size_t j = 0; j <= n_scan; ++j) a[j] = eval(j * dk);
    for (std::size_t j = 1; j <= n_scan; ++j) {
        if (!std::isfinite(a[j - 1]) || !std::isfinite(a[j])) continue;
        if (a[j - 1] != 0.0 && a[j - 1] * a[j] <= 0.0) {
            double lo = (j - 1) * dk, hi = j * dk, alo = a[j - 1];
            for (int it = 0; it < 60; ++it) {
                const double mid = 0.5 * (lo + hi);
                const double am = eval(mid);
                if (alo * am <= 0.0) hi = mid;
                else { lo = mid; alo = am; }
            }
            shells.push_back({static_cast<int>(shells.size()), 0.5 * (lo + hi)});
        } else if (j + 1 <= n_scan && std::isfinite(a[j + 1]) && a[j] > 0.0 &&
                   a[j] <= a[j - 1] && a[j] < a[j + 1]) {
            // candidate tangent zero: refine the local minimum
            double lo = (j - 1) * dk, hi = (j + 1) * dk;
            for (int it = 0; it < 200; ++it) {
                const double m1 = lo + (hi - lo) / 3.0;
                const double m2 = hi - (hi - lo) / 3.0;
                if (eval(m1) < eval(m2)) hi = m2;
                else lo = m1;
            }
            const double kmin = 0.5 * (lo + hi);
            const double scale = std::max({std::abs(a[j - 1]), std::abs(a[j + 1]), 1e-300});
            if (eval(kmin) < 1e-9 * scale)
                shells.push_back({static_cast<int>(shells.size()), kmin});
        }
    }
    return shells;
}

/// CSV export `shell_index, k_radius`.
inline void write_zero_shells_csv(const std::vector<ZeroShell>& shells, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_zero_shells_csv: cannot open " + path);
    os.precision(17);
    os << "shell_index, k_radius\n";
    for (const auto& z : shells) os << z.index << ", " << z.k << "\n";
    if (!os) throw std::runtime_error("write_zero_shells_csv: write failed for " + path);
}

} // namespace pat
