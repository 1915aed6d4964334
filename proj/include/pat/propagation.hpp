#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "pat/errors.hpp"
#include "pat/fft.hpp"
#include "pat/grid.hpp"
#include "pat/medium.hpp"
#include "pat/spectral_core.hpp"

namespace pat {

/// Source-operator mode: the theory covers tau2 = 0 and tau2 = tau1 only.
enum class Tau2Mode { zero, equal_tau1 };

inline double tau2_value(const MediumParams& m, Tau2Mode mode) {
    return mode == Tau2Mode::equal_tau1 ? m.tau1 : 0.0;
}

/// Regularized time-reversal parameters. D should satisfy
/// D >= required_D(m, T, eps); the existence condition is enforced at run
/// time by the overflow guard, not up front, so sub-threshold widths can be
/// probed on grids that do not resolve the growing band.
struct ReversalConfig {
    double T = 0.0;    ///< reversal horizon [s]
    double eps = 0.0;  ///< margin in D = 2 (c0/kc + eps) T
    double D = 0.0;    ///< regularization area [m^2]
    Tau2Mode tau2_mode = Tau2Mode::zero;

    void validate() const {
        if (!(T > 0.0)) throw std::invalid_argument("ReversalConfig: T must be > 0");
        if (!(D > 0.0)) throw std::invalid_argument("ReversalConfig: D must be > 0");
    }

    /// True when D meets the continuum existence condition.
    bool meets_existence_condition(const MediumParams& m) const {
        return D > m.tau1 * m.c0 * m.c0 * T;
    }
};

/// ReversalConfig with the default margin and D = required_D(m, T, eps).
inline ReversalConfig make_reversal_config(const MediumParams& m, double T, Tau2Mode mode) {
    ReversalConfig cfg;
    cfg.T = T;
    cfg.eps = default_eps(m);
    cfg.D = required_D(m, T, cfg.eps);
    cfg.tau2_mode = mode;
    return cfg;
}

namespace detail {

/// Log-safe node evaluation of the PAT rate multipliers
///   forward:  d/dt (Id + tau2 d/dt) e^{-mu t} sin(theta t)/theta
///   backward: the delta'-source reversal multiplier (positive PAT sign),
///             mu -> -mu image of the forward one.
/// Returns the bounded factor g and exponent E with multiplier = g * e^E;
/// extra_exponent (e.g. -D k^2) is folded into E.
struct LogMult {
    double g = 0.0; ///< bounded factor (may be any sign)
    double E = 0.0; ///< exponent
    double value() const { return g * std::exp(E); }
    double log10_abs() const {
        return g == 0.0 ? -std::numeric_limits<double>::infinity()
                        : (E + std::log(std::abs(g))) / std::numbers::ln10;
    }
};

inline LogMult pat_rate_log(const SymbolTable& s, std::size_t i, double t, double tau2,
                            bool backward, double extra_exponent = 0.0) {
    const double mu = s.mu[i];
    const double lead = 1.0 - 2.0 * tau2 * mu;
    LogMult r;
    if (!s.evanescent[i]) {
        const double th = s.theta[i];
        const double th2 = th * th;
        const double c = backward ? (mu - tau2 * mu * mu + tau2 * th2)
                                  : (tau2 * mu * mu - tau2 * th2 - mu);
        r.g = lead * std::cos(th * t) + c * sinct_osc(th, t);
        r.E = (backward ? mu : -mu) * t + extra_exponent;
    } else {
        const double th0 = s.theta0[i];
        const double x = th0 * t;
        const double c = backward ? (mu - tau2 * mu * mu - tau2 * th0 * th0)
                                  : (tau2 * mu * mu + tau2 * th0 * th0 - mu);
        const double em = std::exp(-2.0 * x);
        r.g = lead * 0.5 * (1.0 + em) + c * (x < 1e-6 ? t * (1.0 + x * x / 6.0) * std::exp(-x)
                                                      : (1.0 - em) / (2.0 * th0));
        r.E = ((backward ? mu : -mu) + th0) * t + extra_exponent;
    }
    return r;
}

/// Monopole (delta-source) multipliers, same decomposition.
inline LogMult monopole_log(const SymbolTable& s, std::size_t i, double t, double tau2,
                            bool backward) {
    const double mu = s.mu[i];
    const double lead = 1.0 - tau2 * mu;
    LogMult r;
    if (!s.evanescent[i]) {
        const double th = s.theta[i];
        r.g = lead * sinct_osc(th, t) + (backward ? -tau2 : tau2) * std::cos(th * t);
        r.E = (backward ? mu : -mu) * t;
    } else {
        const double th0 = s.theta0[i];
        const double x = th0 * t;
        const double em = std::exp(-2.0 * x);
        const double sh = x < 1e-6 ? t * (1.0 + x * x / 6.0) * std::exp(-x) : (1.0 - em) / (2.0 * th0);
        r.g = lead * sh + (backward ? -tau2 : tau2) * 0.5 * (1.0 + em);
        r.E = ((backward ? mu : -mu) + th0) * t;
    }
    if (backward) r.g = -r.g; // sign of the time-reversed delta-source solution
    return r;
}

constexpr double kOverflowLog10 = 300.0;

} // namespace detail

// ---------------------------------------------------------------------------
// Paper-normalized multiplier tables (carry the (2 pi)^{-dim/2} factor of the
// wave-vector-domain Green functions). Raw doubles: extreme parameters can
// overflow; the composed pipeline ops below are the guarded path.
// ---------------------------------------------------------------------------

/// M+(k,t): delta-source (monopole) forward multiplier.
inline std::vector<double> forward_hat(const SymbolTable& s, double t, Tau2Mode mode,
                                       const MediumParams& m) {
    const double tau2 = tau2_value(m, mode);
    const double norm = std::pow(2.0 * std::numbers::pi, -0.5 * s.grid.dim);
    std::vector<double> out(s.size());
    for (std::size_t i = 0; i < s.size(); ++i)
        out[i] = norm * detail::monopole_log(s, i, t, tau2, false).value();
    return out;
}

/// M-(k,t): delta-source reversal multiplier (Remark 2.6 substitutions
/// mu -> -mu, tau -> -tau with the sign flip).
inline std::vector<double> backward_hat(const SymbolTable& s, double t, Tau2Mode mode,
                                        const MediumParams& m) {
    const double tau2 = tau2_value(m, mode);
    const double norm = std::pow(2.0 * std::numbers::pi, -0.5 * s.grid.dim);
    std::vector<double> out(s.size());
    for (std::size_t i = 0; i < s.size(); ++i)
        out[i] = norm * detail::monopole_log(s, i, t, tau2, true).value();
    return out;
}

/// dt M+(k,t): PAT forward multiplier (delta'-source field). Equals
/// (2 pi)^{-dim/2} at t = 0, recovering the initial pressure.
inline std::vector<double> pat_forward_hat(const SymbolTable& s, double t, Tau2Mode mode,
                                           const MediumParams& m) {
    const double tau2 = tau2_value(m, mode);
    const double norm = std::pow(2.0 * std::numbers::pi, -0.5 * s.grid.dim);
    std::vector<double> out(s.size());
    for (std::size_t i = 0; i < s.size(); ++i)
        out[i] = norm * detail::pat_rate_log(s, i, t, tau2, false).value();
    return out;
}

/// dt M-(k,t): reversal rate multiplier with the PAT source sign (the
/// delta' right-hand side of the time-reversed equation is positive).
inline std::vector<double> pat_backward_hat(const SymbolTable& s, double t, Tau2Mode mode,
                                            const MediumParams& m) {
    const double tau2 = tau2_value(m, mode);
    const double norm = std::pow(2.0 * std::numbers::pi, -0.5 * s.grid.dim);
    std::vector<double> out(s.size());
    for (std::size_t i = 0; i < s.size(); ++i)
        out[i] = norm * detail::pat_rate_log(s, i, t, tau2, true).value();
    return out;
}

namespace detail {

inline void require_interior_support(const RealField& f) {
    const int n = f.grid.n;
    auto edge = [&](int i) { return i == 0 || i == n - 1; };
    bool touches = false;
    if (f.grid.dim == 1) {
        touches = f.at(0) != 0.0 || f.at(n - 1) != 0.0;
    } else if (f.grid.dim == 2) {
        for (int i1 = 0; i1 < n && !touches; ++i1)
            for (int i0 = 0; i0 < n; ++i0)
                if ((edge(i0) || edge(i1)) && f.at(i0, i1) != 0.0) { touches = true; break; }
    } else {
        for (int i2 = 0; i2 < n && !touches; ++i2)
            for (int i1 = 0; i1 < n && !touches; ++i1)
                for (int i0 = 0; i0 < n; ++i0)
                    if ((edge(i0) || edge(i1) || edge(i2)) && f.at(i0, i1, i2) != 0.0) {
                        touches = true;
                        break;
                    }
    }
    if (touches)
        throw std::invalid_argument("support touches the grid edge (wrap-around contamination)");
}

/// Shared pipeline: pad, transform, apply a guarded node multiplier built
/// from the padded symbol table, transform back, extract.
template <class NodeMult>
RealField guarded_pipeline(const RealField& f, const MediumParams& m, NodeMult&& node_mult,
                           int pad_factor = 2) {
    const RealField padded = pad_embed(f, pad_factor);
    const SymbolTable sym = build_symbols(padded.grid, m);
    SpectralField hat = forward_fft(padded);
    for (std::size_t i = 0; i < hat.values.size(); ++i) {
        const LogMult lm = node_mult(sym, i);
        const double mag = std::abs(hat.values[i]);
        if (mag > 0.0 && lm.g != 0.0) {
            const double log10_total = lm.log10_abs() + std::log10(mag);
            if (log10_total > kOverflowLog10) throw overflow_error(log10_total, sym.k[i]);
        }
        hat.values[i] *= lm.value();
    }
    const RealField back = inverse_fft(hat);
    return unpad_extract(back, f.grid);
}

} // namespace detail

/// PAT forward model: phi_T = p^tv(., T) for initial pressure phi, computed
/// as the time derivative of the monopole solution (delta' source).
inline RealField pat_forward(const RealField& phi, const MediumParams& m, double T,
                             Tau2Mode mode = Tau2Mode::equal_tau1, int pad_factor = 2) {
    if (!(T >= 0.0)) throw std::invalid_argument("pat_forward: T must be >= 0");
    detail::require_interior_support(phi);
    const double tau2 = tau2_value(m, mode);
    return detail::guarded_pipeline(
        phi, m,
        [&](const SymbolTable& s, std::size_t i) {
            return detail::pat_rate_log(s, i, T, tau2, false);
        },
        pad_factor);
}

/// Regularized time reversal F[R_D phi_T] = q^tv(., T): multiplies by
/// e^{-D k^2} and the reversal rate multiplier in one guarded pass.
inline RealField time_reverse_F(const RealField& phi_T, const MediumParams& m,
                                const ReversalConfig& cfg, int pad_factor = 2) {
    cfg.validate();
    const double tau2 = tau2_value(m, cfg.tau2_mode);
    return detail::guarded_pipeline(
        phi_T, m,
        [&](const SymbolTable& s, std::size_t i) {
            return detail::pat_rate_log(s, i, cfg.T, tau2, true, -cfg.D * s.k[i] * s.k[i]);
        },
        pad_factor);
}

/// Imaging functional F1[phi] = 2 F[R_D phi_T]: the fused
/// forward -> regularize -> reverse pipeline.
inline RealField imaging_F1(const RealField& phi, const MediumParams& m,
                            const ReversalConfig& cfg, int pad_factor = 2) {
    cfg.validate();
    detail::require_interior_support(phi);
    const double tau2 = tau2_value(m, cfg.tau2_mode);
    RealField out = detail::guarded_pipeline(
        phi, m,
        [&](const SymbolTable& s, std::size_t i) {
            detail::LogMult fwd = detail::pat_rate_log(s, i, cfg.T, tau2, false);
            const detail::LogMult bwd =
                detail::pat_rate_log(s, i, cfg.T, tau2, true, -cfg.D * s.k[i] * s.k[i]);
            fwd.g *= bwd.g;
            fwd.E += bwd.E;
            return fwd;
        },
        pad_factor);
    for (double& v : out.values) v *= 2.0;
    return out;
}

/// Samples the forward field p^tv at detector positions over [0, T] with
/// spacing dt. Positions are absolute grid coordinates; the stored
/// DetectorSeries positions are relative to `center` (the T1 origin).
inline DetectorSeries sample_detector_series(const RealField& phi, const MediumParams& m,
                                             double T, double dt, Tau2Mode mode,
                                             const std::vector<std::array<double, 3>>& positions,
                                             const std::array<double, 3>& center) {
    if (!(dt > 0.0)) throw std::invalid_argument("sample_detector_series: dt must be > 0");
    if (phi.grid.dim != 2)
        throw std::invalid_argument("sample_detector_series: 2D fields only");
    detail::require_interior_support(phi);
    const std::size_t nt = static_cast<std::size_t>(std::floor(T / dt)) + 1;
    DetectorSeries series;
    series.dt = dt;
    for (const auto& p : positions)
        series.positions.push_back({p[0] - center[0], p[1] - center[1], p[2] - center[2]});
    series.samples.assign(positions.size(), std::vector<double>(nt, 0.0));

    const RealField padded = pad_embed(phi, 2);
    const SymbolTable sym = build_symbols(padded.grid, m);
    const SpectralField hat0 = forward_fft(padded);
    const double tau2 = tau2_value(m, mode);
    for (std::size_t j = 0; j < nt; ++j) {
        const double t = j * dt;
        SpectralField hat = hat0;
        for (std::size_t i = 0; i < hat.values.size(); ++i)
            hat.values[i] *= detail::pat_rate_log(sym, i, t, tau2, false).value();
        const RealField field = inverse_fft(hat);
        for (std::size_t d = 0; d < positions.size(); ++d) {
            // bilinear interpolation on the padded grid
            const auto& p = positions[d];
            const double fx = (p[0] - field.grid.origin[0]) / field.grid.dx;
            const double fy = (p[1] - field.grid.origin[1]) / field.grid.dx;
            const int i0 = static_cast<int>(std::floor(fx));
            const int i1 = static_cast<int>(std::floor(fy));
            if (i0 < 0 || i1 < 0 || i0 + 1 >= field.grid.n || i1 + 1 >= field.grid.n)
                throw std::invalid_argument("sample_detector_series: detector outside grid");
            const double ax = fx - i0, ay = fy - i1;
            series.samples[d][j] = (1 - ax) * (1 - ay) * field.at(i0, i1) +
                                   ax * (1 - ay) * field.at(i0 + 1, i1) +
                                   (1 - ax) * ay * field.at(i0, i1 + 1) +
                                   ax * ay * field.at(i0 + 1, i1 + 1);
        }
    }
    return series;
}

/// assT check: supp(phi) (bounding box lo..hi) inside B_{2 c0 T}(x) for all
/// x in Omega, i.e. the largest Omega-to-support distance is below 2 c0 T.
inline bool assT_satisfied(const OmegaRect& omega, const std::array<double, 3>& supp_lo,
                           const std::array<double, 3>& supp_hi, const MediumParams& m,
                           double T, int dim) {
    double max_d2 = 0.0;
    // both sets are boxes, so the max distance is attained at corners
    const int ncorner = 1 << dim;
    for (int a = 0; a < ncorner; ++a) {
        std::array<double, 3> x{omega.center};
        for (int d = 0; d < dim; ++d) x[d] += (a >> d & 1) ? omega.half : -omega.half;
        for (int b = 0; b < ncorner; ++b) {
            double d2 = 0.0;
            for (int d = 0; d < dim; ++d) {
                const double y = (b >> d & 1) ? supp_hi[d] : supp_lo[d];
                d2 += (x[d] - y) * (x[d] - y);
            }
            if (d2 > max_d2) max_d2 = d2;
        }
    }
    const double r = 2.0 * m.c0 * T;
    return max_d2 <= r * r;
}

} // namespace pat
