#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <fftw3.h>

#include "pat/fft.hpp"

namespace pat {

/// Physical constants of the dissipative medium. tau2 selects the source
/// operator (Id + tau2 d/dt); only tau2 = 0 and tau2 = tau1 are covered by
/// the operator-equation theory, so nothing else is accepted.
struct MediumParams {
    double c0 = 1500.0;   ///< sound speed [m/s]
    double tau1 = 1e-9;   ///< relaxation time [s]
    double tau2 = 0.0;    ///< source relaxation, 0 or tau1 [s]
    double alpha2 = 0.0;  ///< attenuation offset [s/m]

    void validate() const {
        if (!(c0 > 0.0)) throw std::invalid_argument("MediumParams: c0 must be > 0");
        if (tau1 < 0.0) throw std::invalid_argument("MediumParams: tau1 must be >= 0");
        if (alpha2 < 0.0) throw std::invalid_argument("MediumParams: alpha2 must be >= 0");
        if (tau2 != 0.0 && tau2 != tau1)
            throw std::invalid_argument("MediumParams: tau2 must be 0 or tau1");
    }
};

enum class AttenuationLaw { ksb, tv };

/// Causal complex attenuation law:
///   alpha_ksb(w) = (-i w)/(c0 sqrt(1 + (-i tau1 w))) + alpha2 (-i w).
/// Principal branch of the square root, so Re(alpha) >= 0.
inline std::complex<double> alpha_ksb(double omega, const MediumParams& m) {
    const std::complex<double> miw(0.0, -omega);
    const std::complex<double> root = std::sqrt(1.0 + std::complex<double>(0.0, -m.tau1 * omega));
    return miw / (m.c0 * root) + m.alpha2 * miw;
}

/// Non-causal thermo-viscous law:
///   alpha_tv(w) = (-i w)/(c0 sqrt(1 + (-i tau1 w))) - (-i w)/c0.
inline std::complex<double> alpha_tv(double omega, const MediumParams& m) {
    const std::complex<double> miw(0.0, -omega);
    const std::complex<double> root = std::sqrt(1.0 + std::complex<double>(0.0, -m.tau1 * omega));
    return miw / (m.c0 * root) - miw / m.c0;
}

/// Finite wavefront speed of the causal law, c0/(1 + alpha2 c0) <= c0.
inline double wavefront_speed(const MediumParams& m) {
    return m.c0 / (1.0 + m.alpha2 * m.c0);
}

/// Frequency-domain Green function (3D kernel)
///   G^(x, w) = (2 pi)^{-1/2} e^{i k(w) |x|} / (4 pi |x|),  k(w) = i alpha(w) + w/c0.
inline std::complex<double> green_hat(double r, double omega, const MediumParams& m,
                                      AttenuationLaw law) {
    if (!(r > 0.0)) throw std::domain_error("green_hat: |x| must be > 0");
    const std::complex<double> alpha = (law == AttenuationLaw::ksb) ? alpha_ksb(omega, m)
                                                                    : alpha_tv(omega, m);
    // i k(w) = i (i alpha + w/c0) = -alpha + i w/c0
    const std::complex<double> ik(-alpha.real(), omega / m.c0 - alpha.imag());
    const double pre = 1.0 / (std::sqrt(2.0 * std::numbers::pi) * 4.0 * std::numbers::pi * r);
    return pre * std::exp(ik * r);
}

inline std::complex<double> green_hat(const std::array<double, 3>& x, double omega,
                                      const MediumParams& m, AttenuationLaw law) {
    const double r = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
    return green_hat(r, omega, m, law);
}

/// Space-dependent time shift T1(x) = |x| (1/c0 + alpha2) relating the two
/// laws: G^tv(x, t - T1(x)) = G^ksb(x, t).
inline double time_shift_T1(double r, const MediumParams& m) {
    return r * (1.0 / m.c0 + m.alpha2);
}

inline double time_shift_T1(const std::array<double, 3>& x, const MediumParams& m) {
    return time_shift_T1(std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]), m);
}

/// Pressure time series recorded on the boundary. positions are relative to
/// the phantom/array center (T1 uses |x|). samples[d][j] is detector d at
/// time j*dt.
struct DetectorSeries {
    std::vector<std::array<double, 3>> positions;
    double dt = 0.0;
    std::vector<std::vector<double>> samples;

    std::size_t n_detectors() const { return positions.size(); }
    std::size_t n_samples() const { return samples.empty() ? 0 : samples.front().size(); }

    void validate() const {
        if (positions.empty() || samples.size() != positions.size())
            throw std::invalid_argument("DetectorSeries: positions/samples mismatch");
        if (!(dt > 0.0)) throw std::invalid_argument("DetectorSeries: dt must be > 0");
        const std::size_t n = n_samples();
        for (const auto& s : samples)
            if (s.size() != n) throw std::invalid_argument("DetectorSeries: unequal sample counts");
    }
};

/// True when every detector lies on the sphere/circle |x - center| = radius
/// within tol.
inline bool detectors_on_boundary(const DetectorSeries& s, const std::array<double, 3>& center,
                                  double radius, double tol) {
    for (const auto& p : s.positions) {
        const double r = std::sqrt((p[0] - center[0]) * (p[0] - center[0]) +
                                   (p[1] - center[1]) * (p[1] - center[1]) +
                                   (p[2] - center[2]) * (p[2] - center[2]));
        if (std::abs(r - radius) > tol) return false;
    }
    return true;
}

enum class ShiftDirection {
    causal_to_tv, ///< p_tv(t) = p_ksb(t + T1(x)): advance each series by T1
    tv_to_causal  ///< inverse: delay each series by T1
};

namespace detail {

/// Fractional delay of one real sequence by `shift` seconds via a DFT phase
/// factor, zero-padded 2x against circular wrap. Positive shift = advance
/// (output(t) = input(t + shift)).
inline std::vector<double> fractional_shift(const std::vector<double>& s, double dt, double shift) {
    const std::size_t n = s.size();
    const std::size_t np = 2 * n;
    std::vector<std::complex<double>> buf(np);
    for (std::size_t j = 0; j < n; ++j) buf[j] = s[j];

    GridSpec line;
    line.dim = 1;
    line.n = static_cast<int>(np);
    line.dx = dt;
    detail::run_fftw(line, buf, FFTW_FORWARD);
    for (std::size_t k = 0; k < np; ++k) {
        const double w = line.wavenumber(static_cast<int>(k)) ; // 2 pi f_k
        if (2 * k == np) {
            buf[k] *= std::cos(w * shift); // self-conjugate bin stays real
        } else {
            buf[k] *= std::exp(std::complex<double>(0.0, w * shift));
        }
    }
    detail::run_fftw(line, buf, FFTW_BACKWARD);
    std::vector<double> out(n);
    for (std::size_t j = 0; j < n; ++j) out[j] = buf[j].real() / static_cast<double>(np);
    return out;
}

} // namespace detail

/// Shifts every detector's sequence by its own T1(x), realizing
/// p_tv(x, t) = p_ksb(x, t + T1(x)) in either direction. Fractional-sample
/// shifts are exact for band-limited signals.
inline DetectorSeries apply_time_shift(const DetectorSeries& series, const MediumParams& m,
                                       ShiftDirection dir) {
    series.validate();
    DetectorSeries out = series;
    const double window = series.dt * static_cast<double>(series.n_samples());
    for (std::size_t d = 0; d < series.n_detectors(); ++d) {
        const double t1 = time_shift_T1(series.positions[d], m);
        if (t1 > window)
            throw std::invalid_argument("apply_time_shift: T1 exceeds the recorded window");
        const double shift = (dir == ShiftDirection::causal_to_tv) ? t1 : -t1;
        out.samples[d] = detail::fractional_shift(series.samples[d], series.dt, shift);
    }
    return out;
}

struct ShiftConditionReport {
    double max_rel_mismatch = 0.0;
    bool pass = false;
};

/// Checks the shift-relation assumption T1(x) ~ T1(x - y) over all boundary
/// points x and support points y.
inline ShiftConditionReport check_shift_condition(const std::vector<std::array<double, 3>>& boundary_pts,
                                                  const std::vector<std::array<double, 3>>& support_pts,
                                                  const MediumParams& m, double rel_tol) {
    if (boundary_pts.empty() || support_pts.empty())
        throw std::invalid_argument("check_shift_condition: empty point set");
    ShiftConditionReport rep;
    for (const auto& x : boundary_pts) {
        const double t1x = time_shift_T1(x, m);
        if (t1x == 0.0)
            throw std::invalid_argument("check_shift_condition: boundary point with T1(x) = 0");
        for (const auto& y : support_pts) {
            const std::array<double, 3> d{x[0] - y[0], x[1] - y[1], x[2] - y[2]};
            const double mis = std::abs(time_shift_T1(d, m) - t1x) / t1x;
            if (mis > rep.max_rel_mismatch) rep.max_rel_mismatch = mis;
        }
    }
    rep.pass = rep.max_rel_mismatch <= rel_tol;
    return rep;
}

/// CSV export, header row `t, det_0, det_1, ...`, times in seconds.
inline void write_detectors_csv(const DetectorSeries& s, const std::string& path) {
    s.validate();
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_detectors_csv: cannot open " + path);
    os.precision(17);
    os << "t";
    for (std::size_t d = 0; d < s.n_detectors(); ++d) os << ", det_" << d;
    os << "\n";
    for (std::size_t j = 0; j < s.n_samples(); ++j) {
        os << j * s.dt;
        for (std::size_t d = 0; d < s.n_detectors(); ++d) os << ", " << s.samples[d][j];
        os << "\n";
    }
    if (!os) throw std::runtime_error("write_detectors_csv: write failed for " + path);
}

/// CSV import. The format carries no positions; the caller re-attaches them.
inline DetectorSeries read_detectors_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("read_detectors_csv: cannot open " + path);
    std::string header;
    std::getline(is, header);
    std::size_t ndet = 0;
    for (std::size_t pos = header.find(','); pos != std::string::npos; pos = header.find(',', pos + 1))
        ++ndet;
    if (ndet == 0) throw std::runtime_error("read_detectors_csv: no detector columns in " + path);
    DetectorSeries s;
    s.samples.assign(ndet, {});
    double t_prev = 0.0;
    std::size_t row = 0;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        std::getline(ls, cell, ',');
        const double t = std::stod(cell);
        if (row == 1) s.dt = t - t_prev;
        t_prev = t;
        for (std::size_t d = 0; d < ndet; ++d) {
            if (!std::getline(ls, cell, ','))
                throw std::runtime_error("read_detectors_csv: short row in " + path);
            s.samples[d].push_back(std::stod(cell));
        }
        ++row;
    }
    s.positions.assign(ndet, {0.0, 0.0, 0.0});
    return s;
}

} // namespace pat
