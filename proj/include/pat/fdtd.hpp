#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "pat/grid.hpp"
#include "pat/inverse.hpp"
#include "pat/medium.hpp"
#include "pat/propagation.hpp"
#include "pat/spectral_core.hpp"

namespace pat {

/// Smooth circular peak x -> amp * f(a - |x-b|^2) with f(s) = e^{-1/s}.
/// The paper states a in mm, so f is evaluated on mm^2 numbers: the bump
/// radius is sqrt(a) millimetres (physical m^2 arguments would make
/// e^{-1/s} underflow to zero everywhere).
struct SmoothBump {
    std::array<double, 2> center{0.0, 0.0}; ///< [m]
    double a = 0.0;                         ///< radius^2 in mm^2
    double amplitude = 1.0;
};

/// Constant-valued disk or axis-aligned rectangle.
struct ConstRegion {
    enum class Kind { disk, rect } kind = Kind::disk;
    std::array<double, 2> center{0.0, 0.0}; ///< [m]
    double r1 = 0.0;                        ///< disk radius / rect half width [m]
    double r2 = 0.0;                        ///< rect half height [m] (unused for disks)
    double value = 1.0;
};

enum class PhantomKind { smooth_bumps, piecewise_constant };

struct PhantomSpec {
    PhantomKind kind = PhantomKind::smooth_bumps;
    std::vector<SmoothBump> bumps;
    std::vector<ConstRegion> regions;
    OmegaRect omega; ///< declared imaging domain; supports must stay inside

    void validate() const {
        if (!(omega.half > 0.0)) throw std::invalid_argument("PhantomSpec: omega.half must be > 0");
        for (const auto& b : bumps) {
            if (!(b.a > 0.0)) throw std::invalid_argument("PhantomSpec: bump a must be > 0");
            const double r = std::sqrt(b.a) * 1e-3;
            for (int d = 0; d < 2; ++d)
                if (std::abs(b.center[d] - omega.center[d]) + r >= omega.half)
                    throw std::invalid_argument("PhantomSpec: bump leaks outside Omega");
        }
        for (const auto& g : regions) {
            const double rx = g.r1;
            const double ry = g.kind == ConstRegion::Kind::rect ? g.r2 : g.r1;
            if (!(rx > 0.0) || !(ry > 0.0))
                throw std::invalid_argument("PhantomSpec: region size must be > 0");
            if (std::abs(g.center[0] - omega.center[0]) + rx >= omega.half ||
                std::abs(g.center[1] - omega.center[1]) + ry >= omega.half)
                throw std::invalid_argument("PhantomSpec: region leaks outside Omega");
        }
    }
};

/// Sum of C-infinity bumps, exactly zero outside their supports.
inline RealField phantom_smooth(const PhantomSpec& spec, const GridSpec& grid) {
    if (spec.kind != PhantomKind::smooth_bumps)
        throw std::invalid_argument("phantom_smooth: spec.kind mismatch");
    spec.validate();
    if (grid.dim != 2) throw std::invalid_argument("phantom_smooth: 2D grids only");
    RealField out(grid);
    for (const auto& b : spec.bumps) {
        const double r_m = std::sqrt(b.a) * 1e-3;
        const int i0_lo = std::max(0, static_cast<int>(std::floor((b.center[0] - r_m - grid.origin[0]) / grid.dx)));
        const int i0_hi = std::min(grid.n - 1, static_cast<int>(std::ceil((b.center[0] + r_m - grid.origin[0]) / grid.dx)));
        const int i1_lo = std::max(0, static_cast<int>(std::floor((b.center[1] - r_m - grid.origin[1]) / grid.dx)));
        const int i1_hi = std::min(grid.n - 1, static_cast<int>(std::ceil((b.center[1] + r_m - grid.origin[1]) / grid.dx)));
        for (int i1 = i1_lo; i1 <= i1_hi; ++i1) {
            for (int i0 = i0_lo; i0 <= i0_hi; ++i0) {
                const double x = grid.coord(0, i0) - b.center[0];
                const double y = grid.coord(1, i1) - b.center[1];
                const double s = b.a - (x * x + y * y) * 1e6; // mm^2
                if (s > 0.0) out.at(i0, i1) += b.amplitude * std::exp(-1.0 / s);
            }
        }
    }
    return out;
}

/// Piecewise-constant phantom from disks and rectangles.
inline RealField phantom_piecewise(const PhantomSpec& spec, const GridSpec& grid) {
    if (spec.kind != PhantomKind::piecewise_constant)
        throw std::invalid_argument("phantom_piecewise: spec.kind mismatch");
    spec.validate();
    if (grid.dim != 2) throw std::invalid_argument("phantom_piecewise: 2D grids only");
    RealField out(grid);
    for (int i1 = 0; i1 < grid.n; ++i1) {
        for (int i0 = 0; i0 < grid.n; ++i0) {
            const double x = grid.coord(0, i0);
            const double y = grid.coord(1, i1);
            double v = 0.0;
            for (const auto& g : spec.regions) {
                const double dx = x - g.center[0];
                const double dy = y - g.center[1];
                const bool in = g.kind == ConstRegion::Kind::disk
                                    ? dx * dx + dy * dy <= g.r1 * g.r1
                                    : std::abs(dx) <= g.r1 && std::abs(dy) <= g.r2;
                if (in) v = g.value;
            }
            out.at(i0, i1) = v;
        }
    }
    return out;
}

/// Paper's step rule dt = dx/(2 c1). The CFL bound only covers the tau1 = 0
/// part of the operator; the biharmonic term adds a tau1-dependent, dt-
/// independent growth band once the grid resolves k > k_c.
inline double cfl_dt(const GridSpec& grid, double c1) {
    return grid.dx / (2.0 * c1);
}

struct FdtdConfig {
    GridSpec grid;   ///< 2D
    double dt = 0.0; ///< [s]
    int n_steps = 0;
    double tau1 = 0.0;
    double c1 = 0.0; ///< 2 c0 [m/s]

    void validate() const {
        grid.validate();
        if (grid.dim != 2) throw std::invalid_argument("FdtdConfig: 2D grids only");
        if (!(dt > 0.0) || n_steps < 1) throw std::invalid_argument("FdtdConfig: bad dt/n_steps");
        if (!(c1 > 0.0)) throw std::invalid_argument("FdtdConfig: c1 must be > 0");
        if (tau1 < 0.0) throw std::invalid_argument("FdtdConfig: tau1 must be >= 0");
    }
};

/// Config reaching exactly t = T in ceil(T / (dt_scale * cfl_dt)) steps.
inline FdtdConfig make_fdtd_config(const GridSpec& grid, const MediumParams& m, double T,
                                   double dt_scale = 1.0) {
    FdtdConfig cfg;
    cfg.grid = grid;
    cfg.c1 = 2.0 * m.c0;
    cfg.tau1 = m.tau1;
    const double dt0 = cfl_dt(grid, cfg.c1) * dt_scale;
    cfg.n_steps = std::max(1, static_cast<int>(std::ceil(T / dt0 - 1e-12)));
    cfg.dt = T / cfg.n_steps;
    return cfg;
}

/// 5-point discrete Laplacian with homogeneous Dirichlet data (zero outside
/// the box). Applying it twice gives the 13-point biharmonic stencil, whose
/// symbol is exactly the square of the 5-point symbol.
inline void apply_laplacian_5pt(const RealField& in, RealField& out) {
    const int n = in.grid.n;
    const double inv_dx2 = 1.0 / (in.grid.dx * in.grid.dx);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const double c = in.at(i, j);
            const double xm = i > 0 ? in.at(i - 1, j) : 0.0;
            const double xp = i < n - 1 ? in.at(i + 1, j) : 0.0;
            const double ym = j > 0 ? in.at(i, j - 1) : 0.0;
            const double yp = j < n - 1 ? in.at(i, j + 1) : 0.0;
            out.at(i, j) = (xm + xp + ym + yp - 4.0 * c) * inv_dx2;
        }
    }
}

struct StabilityReport {
    bool blown_up = false;
    int step = 0;          ///< step of first divergence (or last step run)
    double max_abs = 0.0;  ///< max |w| at that step
    double threshold = 0.0;
    std::vector<std::pair<int, double>> trace; ///< (step, max |w|)
};

struct FdtdResult {
    RealField w;
    StabilityReport report;
};

/// Explicit central-difference stepping of
///   Delta w + (tau1^2 c0^2 / 4) Delta^2 w - (1/c1^2) w_tt = -2 xi / c1^2
/// from rest, Dirichlet box. Divergence past 1e10 x source scale is a
/// reported outcome, not an exception.
inline FdtdResult fdtd_run(const RealField& xi, const FdtdConfig& cfg) {
    cfg.validate();
    if (!(xi.grid == cfg.grid)) throw std::invalid_argument("fdtd_run: grid mismatch");
    const int n = cfg.grid.n;
    const double c0 = cfg.c1 / 2.0;
    const double bi_coef = cfg.tau1 * cfg.tau1 * c0 * c0 / 4.0;
    const double dt2c12 = cfg.dt * cfg.dt * cfg.c1 * cfg.c1;
    const double dt2 = cfg.dt * cfg.dt;

    double src_max = 0.0;
    for (double v : xi.values) src_max = std::max(src_max, std::abs(v));
    const double T = cfg.n_steps * cfg.dt;
    const double threshold = 1e10 * src_max * T * T;

    FdtdResult res;
    res.report.threshold = threshold;
    RealField w_prev(cfg.grid), w_cur(cfg.grid), w_next(cfg.grid);
    RealField lap(cfg.grid), lap2(cfg.grid);

    // second-order start from rest: w(dt) = dt^2 xi
    for (std::size_t i = 0; i < w_cur.values.size(); ++i) w_cur.values[i] = dt2 * xi.values[i];
    res.report.trace.push_back({1, src_max * dt2});

    int step = 1;
    for (; step < cfg.n_steps; ++step) {
        apply_laplacian_5pt(w_cur, lap);
        if (cfg.tau1 > 0.0) apply_laplacian_5pt(lap, lap2);
        double max_abs = 0.0;
        for (std::size_t i = 0; i < w_cur.values.size(); ++i) {
            double acc = lap.values[i] + 2.0 * xi.values[i] / (cfg.c1 * cfg.c1);
            if (cfg.tau1 > 0.0) acc += bi_coef * lap2.values[i];
            const double v = 2.0 * w_cur.values[i] - w_prev.values[i] + dt2c12 * acc;
            w_next.values[i] = v;
            max_abs = std::max(max_abs, std::abs(v));
        }
        res.report.trace.push_back({step + 1, max_abs});
        if (!std::isfinite(max_abs) || (threshold > 0.0 && max_abs > threshold)) {
            res.report.blown_up = true;
            res.report.step = step + 1;
            res.report.max_abs = max_abs;
            res.w = w_cur; // last pre-divergence state
            return res;
        }
        std::swap(w_prev.values, w_cur.values);
        std::swap(w_cur.values, w_next.values);
    }
    res.report.step = cfg.n_steps;
    res.report.max_abs = res.report.trace.back().second;
    res.w = std::move(w_cur);
    return res;
}

/// Stability trace CSV `step, max_abs`.
inline void write_stability_csv(const StabilityReport& rep, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_stability_csv: cannot open " + path);
    os.precision(17);
    os << "step, max_abs\n";
    for (const auto& [s, v] : rep.trace) os << s << ", " << v << "\n";
    if (!os) throw std::runtime_error("write_stability_csv: write failed for " + path);
}

enum class ImageBackend { fdtd, spectral };

struct ImageResult {
    RealField image;    ///< I = 2 (Id + tau1^2 c0^2 Delta)^2 phi + Delta I0
    RealField I0;       ///< I0 = 2 c0^2 J_T phi
    StabilityReport report; ///< from the fdtd backend (empty for spectral)
};

/// Unregularized time-reversal image of Section-7 form. J_T phi comes from
/// the chosen backend; the Laplacians are spectral.
inline ImageResult image_I(const RealField& phi, const MediumParams& m, double T,
                           ImageBackend via) {
    ImageResult res;
    if (via == ImageBackend::fdtd) {
        const FdtdConfig cfg = make_fdtd_config(phi.grid, m, T);
        FdtdResult run = fdtd_run(phi, cfg);
        res.report = std::move(run.report);
        res.I0 = std::move(run.w);
        if (res.report.blown_up) {
            res.image = RealField(phi.grid);
            return res;
        }
    } else {
        res.I0 = apply_JT(phi, m, T);
    }
    const double c02 = m.c0 * m.c0;
    for (double& v : res.I0.values) v *= 2.0 * c02;

    const double t2c2 = m.tau1 * m.tau1 * c02;
    RealField lead = detail::apply_radial_multiplier(phi, [t2c2](double k2) {
        const double b = 1.0 - t2c2 * k2;
        return 2.0 * b * b;
    });
    const RealField lap_I0 = apply_laplacian(res.I0);
    res.image = RealField(phi.grid);
    for (std::size_t i = 0; i < res.image.values.size(); ++i)
        res.image.values[i] = lead.values[i] + lap_I0.values[i];
    return res;
}

} // namespace pat
