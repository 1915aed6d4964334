#pragma once

#include <complex>
#include <mutex>
#include <vector>

#include <fftw3.h>

#include "pat/grid.hpp"

namespace pat {

namespace detail {

// FFTW plan creation is not thread safe; execution of a created plan is.
inline std::mutex& fftw_plan_mutex() {
    static std::mutex m;
    return m;
}

inline void run_fftw(const GridSpec& g, std::vector<std::complex<double>>& data, int sign) {
    const std::size_t sz = g.size();
    fftw_complex* buf = fftw_alloc_complex(sz);
    if (!buf) throw std::bad_alloc();
    for (std::size_t i = 0; i < sz; ++i) {
        buf[i][0] = data[i].real();
        buf[i][1] = data[i].imag();
    }
    int dims[3] = {g.n, g.n, g.n}; // all axes equal, so storage order is irrelevant
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(fftw_plan_mutex());
        plan = fftw_plan_dft(g.dim, dims, buf, buf, sign, FFTW_ESTIMATE);
    }
    if (!plan) {
        fftw_free(buf);
        throw std::runtime_error("fftw_plan_dft failed");
    }
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(fftw_plan_mutex());
        fftw_destroy_plan(plan);
    }
    for (std::size_t i = 0; i < sz; ++i) data[i] = {buf[i][0], buf[i][1]};
    fftw_free(buf);
}

} // namespace detail

/// Unnormalized forward DFT of a real field; bin j carries wavenumber
/// grid.wavenumber(j) per axis.
inline SpectralField forward_fft(const RealField& f) {
    SpectralField out(f.grid);
    for (std::size_t i = 0; i < f.values.size(); ++i) out.values[i] = f.values[i];
    detail::run_fftw(f.grid, out.values, FFTW_FORWARD);
    return out;
}

/// Inverse DFT with 1/N^dim normalization; returns the real part.
inline RealField inverse_fft(const SpectralField& s) {
    std::vector<std::complex<double>> work = s.values;
    detail::run_fftw(s.grid, work, FFTW_BACKWARD);
    RealField out(s.grid);
    const double scale = 1.0 / static_cast<double>(s.grid.size());
    for (std::size_t i = 0; i < work.size(); ++i) out.values[i] = work[i].real() * scale;
    return out;
}

/// Inverse DFT keeping the complex values (diagnostics).
inline SpectralField inverse_fft_complex(const SpectralField& s) {
    SpectralField out(s.grid);
    out.values = s.values;
    detail::run_fftw(s.grid, out.values, FFTW_BACKWARD);
    const double scale = 1.0 / static_cast<double>(s.grid.size());
    for (auto& v : out.values) v *= scale;
    return out;
}

/// Grid enlarged by `factor` with the original box centered in it. Spectral
/// convolutions run on this grid so periodic images stay clear of the data.
inline GridSpec padded_grid(const GridSpec& g, int factor = 2) {
    GridSpec p = g;
    p.n = g.n * factor;
    const double shift = 0.5 * (factor - 1) * g.extent();
    for (int d = 0; d < g.dim; ++d) p.origin[d] = g.origin[d] - shift;
    return p;
}

/// Embeds f into the centered padded grid, zero outside.
inline RealField pad_embed(const RealField& f, int factor = 2) {
    const GridSpec pg = padded_grid(f.grid, factor);
    RealField out(pg);
    const int off = (pg.n - f.grid.n) / 2;
    const int n = f.grid.n;
    if (f.grid.dim == 1) {
        for (int i0 = 0; i0 < n; ++i0) out.at(i0 + off) = f.at(i0);
    } else if (f.grid.dim == 2) {
        for (int i1 = 0; i1 < n; ++i1)
            for (int i0 = 0; i0 < n; ++i0) out.at(i0 + off, i1 + off) = f.at(i0, i1);
    } else {
        for (int i2 = 0; i2 < n; ++i2)
            for (int i1 = 0; i1 < n; ++i1)
                for (int i0 = 0; i0 < n; ++i0) out.at(i0 + off, i1 + off, i2 + off) = f.at(i0, i1, i2);
    }
    return out;
}

/// Extracts the original box back out of a padded field.
inline RealField unpad_extract(const RealField& padded, const GridSpec& original) {
    const int off = (padded.grid.n - original.n) / 2;
    if (off < 0) throw std::invalid_argument("unpad_extract: field smaller than target grid");
    RealField out(original);
    const int n = original.n;
    if (original.dim == 1) {
        for (int i0 = 0; i0 < n; ++i0) out.at(i0) = padded.at(i0 + off);
    } else if (original.dim == 2) {
        for (int i1 = 0; i1 < n; ++i1)
            for (int i0 = 0; i0 < n; ++i0) out.at(i0, i1) = padded.at(i0 + off, i1 + off);
    } else {
        for (int i2 = 0; i2 < n; ++i2)
            for (int i1 = 0; i1 < n; ++i1)
                for (int i0 = 0; i0 < n; ++i0) out.at(i0, i1, i2) = padded.at(i0 + off, i1 + off, i2 + off);
    }
    return out;
}

} // namespace pat
