#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace pat {

/// Uniform sampled grid, n points per axis, spacing dx. Physical extent is
/// n*dx per axis. DFT wavenumbers follow the standard fftshift ordering:
/// k_j = 2*pi*j/(n*dx) for j in [-n/2, n/2).
struct GridSpec {
    int dim = 2;              ///< 1, 2 or 3
    int n = 0;                ///< samples per axis
    double dx = 0.0;          ///< spacing [m]
    std::array<double, 3> origin{0.0, 0.0, 0.0}; ///< corner coordinate [m]

    std::size_t size() const {
        std::size_t s = 1;
        for (int d = 0; d < dim; ++d) s *= static_cast<std::size_t>(n);
        return s;
    }
    double extent() const { return n * dx; }

    void validate() const {
        if (dim < 1 || dim > 3) throw std::invalid_argument("GridSpec: dim must be 1, 2 or 3");
        if (n < 2) throw std::invalid_argument("GridSpec: n must be >= 2");
        if (!(dx > 0.0)) throw std::invalid_argument("GridSpec: dx must be > 0");
    }

    bool operator==(const GridSpec& o) const {
        return dim == o.dim && n == o.n && dx == o.dx && origin == o.origin;
    }

    /// Physical coordinate of a node along one axis.
    double coord(int axis, int i) const { return origin[axis] + i * dx; }

    /// Signed DFT wavenumber of index j along any axis (all axes share n, dx).
    double wavenumber(int j) const {
        const int js = (j <= n / 2 - 1) ? j : j - n;
        return 2.0 * std::numbers::pi * js / (n * dx);
    }

    /// Fundamental wavenumber spacing 2*pi/(n*dx).
    double dk() const { return 2.0 * std::numbers::pi / (n * dx); }

    /// Largest |k_j| on the axis grid, pi/dx for even n.
    double kmax() const { return std::abs(wavenumber(n / 2)); }
};

/// Real scalar field sampled on a GridSpec. Values are stored row-major with
/// the x index fastest: idx = i0 + n*(i1 + n*i2).
struct RealField {
    GridSpec grid;
    std::vector<double> values;

    RealField() = default;
    explicit RealField(const GridSpec& g) : grid(g), values(g.size(), 0.0) { grid.validate(); }
    RealField(const GridSpec& g, std::vector<double> v) : grid(g), values(std::move(v)) {
        grid.validate();
        if (values.size() != grid.size())
            throw std::invalid_argument("RealField: value count does not match grid");
        check_finite();
    }

    double& at(int i0, int i1 = 0, int i2 = 0) {
        return values[static_cast<std::size_t>(i0) +
                      static_cast<std::size_t>(grid.n) * (i1 + static_cast<std::size_t>(grid.n) * i2)];
    }
    double at(int i0, int i1 = 0, int i2 = 0) const {
        return values[static_cast<std::size_t>(i0) +
                      static_cast<std::size_t>(grid.n) * (i1 + static_cast<std::size_t>(grid.n) * i2)];
    }

    void check_finite() const {
        for (double v : values)
            if (!std::isfinite(v)) throw std::invalid_argument("RealField: non-finite value");
    }
};

/// Complex field in DFT layout on a GridSpec (same index layout as RealField,
/// node j along an axis carrying wavenumber grid.wavenumber(j)).
struct SpectralField {
    GridSpec grid;
    std::vector<std::complex<double>> values;

    SpectralField() = default;
    explicit SpectralField(const GridSpec& g) : grid(g), values(g.size()) { grid.validate(); }
};

namespace detail {

/// Calls f(flat_index, |k|^2) for every node of the grid.
template <class F>
void for_each_k2(const GridSpec& g, F&& f) {
    std::vector<double> ax(static_cast<std::size_t>(g.n));
    for (int j = 0; j < g.n; ++j) {
        const double k = g.wavenumber(j);
        ax[static_cast<std::size_t>(j)] = k * k;
    }
    const std::size_t n = static_cast<std::size_t>(g.n);
    if (g.dim == 1) {
        for (std::size_t i0 = 0; i0 < n; ++i0) f(i0, ax[i0]);
    } else if (g.dim == 2) {
        std::size_t idx = 0;
        for (std::size_t i1 = 0; i1 < n; ++i1)
            for (std::size_t i0 = 0; i0 < n; ++i0, ++idx) f(idx, ax[i0] + ax[i1]);
    } else {
        std::size_t idx = 0;
        for (std::size_t i2 = 0; i2 < n; ++i2)
            for (std::size_t i1 = 0; i1 < n; ++i1)
                for (std::size_t i0 = 0; i0 < n; ++i0, ++idx) f(idx, ax[i0] + ax[i1] + ax[i2]);
    }
}

} // namespace detail

inline double norm_l2(const RealField& f) {
    double s = 0.0;
    for (double v : f.values) s += v * v;
    return std::sqrt(s);
}

inline double rel_l2_error(const RealField& a, const RealField& b) {
    if (a.values.size() != b.values.size())
        throw std::invalid_argument("rel_l2_error: size mismatch");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        const double d = a.values[i] - b.values[i];
        num += d * d;
        den += b.values[i] * b.values[i];
    }
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

/// Axis-aligned square/cube region, used for the imaging domain Omega.
struct OmegaRect {
    std::array<double, 3> center{0.0, 0.0, 0.0};
    double half = 0.0; ///< half side length [m]

    bool contains(const std::array<double, 3>& x, int dim) const {
        for (int d = 0; d < dim; ++d)
            if (std::abs(x[d] - center[d]) > half) return false;
        return true;
    }
};

/// Flat indices of all grid nodes inside Omega.
inline std::vector<std::size_t> omega_indices(const GridSpec& g, const OmegaRect& omega) {
    std::vector<std::size_t> idx;
    const std::size_t n = static_cast<std::size_t>(g.n);
    auto inside = [&](int axis, int i) { return std::abs(g.coord(axis, i) - omega.center[axis]) <= omega.half; };
    if (g.dim == 1) {
        for (int i0 = 0; i0 < g.n; ++i0)
            if (inside(0, i0)) idx.push_back(static_cast<std::size_t>(i0));
    } else if (g.dim == 2) {
        for (int i1 = 0; i1 < g.n; ++i1)
            for (int i0 = 0; i0 < g.n; ++i0)
                if (inside(0, i0) && inside(1, i1)) idx.push_back(i0 + n * i1);
    } else {
        for (int i2 = 0; i2 < g.n; ++i2)
            for (int i1 = 0; i1 < g.n; ++i1)
                for (int i0 = 0; i0 < g.n; ++i0)
                    if (inside(0, i0) && inside(1, i1) && inside(2, i2))
                        idx.push_back(i0 + n * (i1 + n * i2));
    }
    return idx;
}

inline double rel_l2_error_on(const RealField& a, const RealField& b,
                              const std::vector<std::size_t>& idx, double norm_b_full = -1.0) {
    double num = 0.0, den = 0.0;
    for (std::size_t i : idx) {
        const double d = a.values[i] - b.values[i];
        num += d * d;
        den += b.values[i] * b.values[i];
    }
    if (norm_b_full > 0.0) return std::sqrt(num) / norm_b_full;
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

// ---------------------------------------------------------------------------
// PATGRID on-disk format: one ASCII header line
//   PATGRID dim n dx origin0 [origin1 [origin2]]
// followed by n^dim little-endian 64-bit floats in storage order.
// ---------------------------------------------------------------------------

inline void write_patgrid(const RealField& f, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("write_patgrid: cannot open " + path);
    char header[256];
    int len = std::snprintf(header, sizeof(header), "PATGRID %d %d %.17g", f.grid.dim, f.grid.n, f.grid.dx);
    for (int d = 0; d < f.grid.dim; ++d)
        len += std::snprintf(header + len, sizeof(header) - len, " %.17g", f.grid.origin[d]);
    len += std::snprintf(header + len, sizeof(header) - len, "\n");
    os.write(header, len);
    os.write(reinterpret_cast<const char*>(f.values.data()),
             static_cast<std::streamsize>(f.values.size() * sizeof(double)));
    if (!os) throw std::runtime_error("write_patgrid: write failed for " + path);
}

inline RealField read_patgrid(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("read_patgrid: cannot open " + path);
    std::string header;
    std::getline(is, header);
    std::istringstream hs(header);
    std::string magic;
    GridSpec g;
    hs >> magic >> g.dim >> g.n >> g.dx;
    if (magic != "PATGRID" || !hs) throw std::runtime_error("read_patgrid: bad header in " + path);
    for (int d = 0; d < g.dim; ++d) hs >> g.origin[d];
    g.validate();
    std::vector<double> v(g.size());
    is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
    if (!is) throw std::runtime_error("read_patgrid: truncated data in " + path);
    return RealField(g, std::move(v));
}

/// CSV export; 1D fields as x,value rows, 2D fields as x,y,value rows.
inline void write_field_csv(const RealField& f, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_field_csv: cannot open " + path);
    os.precision(17);
    if (f.grid.dim == 1) {
        os << "x, value\n";
        for (int i = 0; i < f.grid.n; ++i) os << f.grid.coord(0, i) << ", " << f.at(i) << "\n";
    } else if (f.grid.dim == 2) {
        os << "x, y, value\n";
        for (int i1 = 0; i1 < f.grid.n; ++i1)
            for (int i0 = 0; i0 < f.grid.n; ++i0)
                os << f.grid.coord(0, i0) << ", " << f.grid.coord(1, i1) << ", " << f.at(i0, i1) << "\n";
    } else {
        throw std::invalid_argument("write_field_csv: only 1D/2D fields");
    }
    if (!os) throw std::runtime_error("write_field_csv: write failed for " + path);
}

} // namespace pat
