#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pat/fdtd.hpp"
#include "pat/grid.hpp"
#include "pat/inverse.hpp"
#include "pat/medium.hpp"
#include "pat/propagation.hpp"
#include "pat/spectral_core.hpp"

namespace pat {

/// Configuration problems (bad file, bad stage graph). CLI exit code 1.
class config_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string item;
    while (std::getline(is, item, sep)) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

inline double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw std::runtime_error("config key " + key + ": not a number: " + v);
    }
}

} // namespace detail

/// Flat key-value config with [section] headers; '#' starts a comment.
/// Repeated keys (bump, region) accumulate.
class KeyValueConfig {
public:
    static KeyValueConfig parse_file(const std::string& path) {
        std::ifstream is(path);
        if (!is) throw config_error("cannot open config " + path);
        std::ostringstream ss;
        ss << is.rdbuf();
        return parse(ss.str());
    }

    static KeyValueConfig parse(const std::string& text) {
        KeyValueConfig cfg;
        std::istringstream is(text);
        std::string line, section;
        int lineno = 0;
        while (std::getline(is, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            line = detail::trim(line);
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']')
                    throw config_error("config line " + std::to_string(lineno) + ": bad section header");
                section = detail::trim(line.substr(1, line.size() - 2));
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw config_error("config line " + std::to_string(lineno) + ": expected key = value");
            const std::string key = detail::trim(line.substr(0, eq));
            const std::string value = detail::trim(line.substr(eq + 1));
            if (key.empty()) throw config_error("config line " + std::to_string(lineno) + ": empty key");
            cfg.entries_[section + "." + key].push_back(value);
        }
        return cfg;
    }

    bool has(const std::string& key) const { return entries_.count(key) > 0; }

    std::string get(const std::string& key, const std::string& fallback) const {
        const auto it = entries_.find(key);
        return it == entries_.end() ? fallback : it->second.back();
    }

    std::string require(const std::string& key) const {
        const auto it = entries_.find(key);
        if (it == entries_.end()) throw config_error("missing config key: " + key);
        return it->second.back();
    }

    double get_double(const std::string& key, double fallback) const {
        const auto it = entries_.find(key);
        return it == entries_.end() ? fallback : to_double(key, it->second.back());
    }

    double require_double(const std::string& key) const { return to_double(key, require(key)); }

    int get_int(const std::string& key, int fallback) const {
        return static_cast<int>(get_double(key, fallback));
    }

    std::vector<std::string> get_all(const std::string& key) const {
        const auto it = entries_.find(key);
        return it == entries_.end() ? std::vector<std::string>{} : it->second;
    }

private:
    static double to_double(const std::string& key, const std::string& v) {
        try {
            std::size_t pos = 0;
            const double d = std::stod(v, &pos);
            if (pos != v.size()) throw std::invalid_argument(v);
            return d;
        } catch (const std::exception&) {
            throw config_error("config key " + key + ": not a number: " + v);
        }
    }

    std::map<std::string, std::vector<std::string>> entries_;
};

/// Fully resolved experiment description.
struct ExperimentConfig {
    MediumParams medium;
    Tau2Mode tau2_mode = Tau2Mode::equal_tau1;
    GridSpec grid;
    OmegaRect omega;
    PhantomSpec phantom;
    ReversalConfig reversal;
    std::vector<std::string> stages;
    std::string out_dir = "out";
    std::vector<std::string> formats{"patgrid"};
    int detectors = 0;
    double beta_dt = 0.0;     ///< 0 = fdtd dt
    double lambda = 0.0;      ///< 0 = default (1e-6 max A^2)
    ImageBackend image_backend = ImageBackend::spectral;
    bool full_scale = false;

    static ExperimentConfig from_file(const std::string& path) {
        return from_config(KeyValueConfig::parse_file(path));
    }

    static ExperimentConfig from_config(const KeyValueConfig& kv);
};

inline ExperimentConfig ExperimentConfig::from_config(const KeyValueConfig& kv) {
    ExperimentConfig e;
    e.medium.c0 = kv.get_double("medium.c0", 1500.0);
    e.medium.tau1 = kv.get_double("medium.tau1", 1e-9);
    e.medium.alpha2 = kv.get_double("medium.alpha2", 0.0);
    const std::string mode = kv.get("medium.tau2_mode", "equal_tau1");
    if (mode == "zero") e.tau2_mode = Tau2Mode::zero;
    else if (mode == "equal_tau1") e.tau2_mode = Tau2Mode::equal_tau1;
    else throw config_error("medium.tau2_mode must be zero or equal_tau1");
    e.medium.tau2 = tau2_value(e.medium, e.tau2_mode);
    try {
        e.medium.validate();
    } catch (const std::exception& ex) {
        throw config_error(std::string("bad medium: ") + ex.what());
    }

    e.full_scale = kv.get("solver.full_scale", "false") == "true";
    e.grid.dim = 2;
    e.grid.n = kv.get_int("grid.n", 256);
    if (e.full_scale) e.grid.n = 1020; // paper's grid, opt-in
    const double extent = kv.get_double("grid.extent", 2.0);
    if (!(extent > 0.0)) throw config_error("grid.extent must be > 0");
    e.grid.dx = extent / e.grid.n;
    e.grid.origin = {0.0, 0.0, 0.0};

    e.omega.center = {kv.get_double("omega.center_x", extent / 2.0),
                      kv.get_double("omega.center_y", extent / 2.0), 0.0};
    e.omega.half = kv.get_double("omega.half", extent / 8.0);

    const std::string pk = kv.get("phantom.kind", "smooth_bumps");
    if (pk == "smooth_bumps") e.phantom.kind = PhantomKind::smooth_bumps;
    else if (pk == "piecewise_constant") e.phantom.kind = PhantomKind::piecewise_constant;
    else throw config_error("phantom.kind must be smooth_bumps or piecewise_constant");
    e.phantom.omega = e.omega;
    for (const std::string& b : kv.get_all("phantom.bump")) {
        std::istringstream bs(b);
        SmoothBump bump;
        if (!(bs >> bump.center[0] >> bump.center[1] >> bump.a))
            throw config_error("phantom.bump needs: cx cy a [amplitude]");
        if (!(bs >> bump.amplitude)) bump.amplitude = 1.0;
        e.phantom.bumps.push_back(bump);
    }
    for (const std::string& r : kv.get_all("phantom.region")) {
        std::istringstream rs(r);
        std::string kind;
        ConstRegion reg;
        rs >> kind;
        if (kind == "disk") {
            reg.kind = ConstRegion::Kind::disk;
            if (!(rs >> reg.center[0] >> reg.center[1] >> reg.r1 >> reg.value))
                throw config_error("phantom.region disk needs: cx cy r value");
        } else if (kind == "rect") {
            reg.kind = ConstRegion::Kind::rect;
            if (!(rs >> reg.center[0] >> reg.center[1] >> reg.r1 >> reg.r2 >> reg.value))
                throw config_error("phantom.region rect needs: cx cy hx hy value");
        } else {
            throw config_error("phantom.region kind must be disk or rect");
        }
        e.phantom.regions.push_back(reg);
    }
    try {
        e.phantom.validate();
    } catch (const std::exception& ex) {
        throw config_error(std::string("bad phantom: ") + ex.what());
    }

    e.reversal.T = kv.get_double("reversal.T", extent / e.medium.c0 / 4.0);
    e.reversal.tau2_mode = e.tau2_mode;
    const std::string eps_s = kv.get("reversal.eps", "auto");
    e.reversal.eps = eps_s == "auto" ? (e.medium.tau1 > 0.0 ? default_eps(e.medium) : 1e-7)
                                     : detail::parse_double("reversal.eps", eps_s);
    const std::string d_s = kv.get("reversal.D", "auto");
    e.reversal.D = d_s == "auto" ? required_D(e.medium, e.reversal.T, e.reversal.eps)
                                 : detail::parse_double("reversal.D", d_s);

    const std::string stages = kv.get("pipeline.stages", "");
    e.stages = detail::split(stages, ',');
    e.out_dir = kv.get("output.dir", "out");
    const std::string fmts = kv.get("output.formats", "patgrid");
    e.formats = detail::split(fmts, ',');
    e.detectors = kv.get_int("output.detectors", 0);
    const std::string bdt = kv.get("output.beta_dt", "auto");
    e.beta_dt = bdt == "auto" ? 0.0 : detail::parse_double("output.beta_dt", bdt);
    const std::string lam = kv.get("solver.lambda", "auto");
    e.lambda = lam == "auto" ? 0.0 : detail::parse_double("solver.lambda", lam);
    const std::string backend = kv.get("solver.image_backend", "spectral");
    if (backend == "spectral") e.image_backend = ImageBackend::spectral;
    else if (backend == "fdtd") e.image_backend = ImageBackend::fdtd;
    else throw config_error("solver.image_backend must be spectral or fdtd");

    // stage graph: forward before reverse/shift, reverse before enhance
    auto stage_pos = [&](const std::string& name) {
        const auto it = std::find(e.stages.begin(), e.stages.end(), name);
        return it == e.stages.end() ? -1 : static_cast<int>(it - e.stages.begin());
    };
    for (const auto& s : e.stages)
        if (s != "forward" && s != "shift" && s != "reverse" && s != "image" && s != "enhance")
            throw config_error("unknown pipeline stage: " + s);
    for (const auto& s : e.stages)
        if (std::count(e.stages.begin(), e.stages.end(), s) > 1)
            throw config_error("duplicate pipeline stage: " + s);
    if (stage_pos("reverse") >= 0 && (stage_pos("forward") < 0 || stage_pos("forward") > stage_pos("reverse")))
        throw config_error("stage 'reverse' requires 'forward' before it");
    if (stage_pos("shift") >= 0 && (stage_pos("forward") < 0 || stage_pos("forward") > stage_pos("shift")))
        throw config_error("stage 'shift' requires 'forward' before it");
    if (stage_pos("shift") >= 0 && e.detectors <= 0)
        throw config_error("stage 'shift' requires output.detectors > 0");
    if (stage_pos("enhance") >= 0 && (stage_pos("reverse") < 0 || stage_pos("reverse") > stage_pos("enhance")))
        throw config_error("stage 'enhance' requires 'reverse' before it");
    return e;
}

// ---------------------------------------------------------------------------
// Exports
// ---------------------------------------------------------------------------

/// 16-bit binary PGM, values scaled to [0, 65535]; min/max land in a
/// `<path>.txt` sidecar so the scaling is invertible.
inline void write_pgm16(const RealField& f, const std::string& path) {
    if (f.grid.dim != 2) throw std::invalid_argument("write_pgm16: 2D fields only");
    double lo = f.values.front(), hi = f.values.front();
    for (double v : f.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double scale = hi > lo ? 65535.0 / (hi - lo) : 0.0;
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("write_pgm16: cannot open " + path);
    os << "P5\n" << f.grid.n << " " << f.grid.n << "\n65535\n";
    std::vector<std::uint8_t> row(static_cast<std::size_t>(f.grid.n) * 2);
    for (int j = f.grid.n - 1; j >= 0; --j) { // top row = largest y
        for (int i = 0; i < f.grid.n; ++i) {
            const auto v = static_cast<std::uint16_t>(std::lround((f.at(i, j) - lo) * scale));
            row[2 * i] = static_cast<std::uint8_t>(v >> 8); // PGM is big-endian
            row[2 * i + 1] = static_cast<std::uint8_t>(v & 0xff);
        }
        os.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    if (!os) throw std::runtime_error("write_pgm16: write failed for " + path);
    std::ofstream sidecar(path + ".txt");
    sidecar.precision(17);
    sidecar << "min=" << lo << "\nmax=" << hi << "\n";
}

/// Writes `field` as `<dir>/<name>.<ext>` in every requested format.
inline void export_grid(const RealField& field, const std::string& dir, const std::string& name,
                        const std::vector<std::string>& formats) {
    for (const std::string& fmt : formats) {
        const std::string base = dir + "/" + name;
        if (fmt == "patgrid") write_patgrid(field, base + ".patgrid");
        else if (fmt == "csv") write_field_csv(field, base + ".csv");
        else if (fmt == "pgm") write_pgm16(field, base + ".pgm");
        else throw config_error("unknown output format: " + fmt);
    }
}

// ---------------------------------------------------------------------------
// Run manifest
// ---------------------------------------------------------------------------

class Manifest {
public:
    void set(const std::string& key, double v) {
        std::ostringstream os;
        os.precision(17);
        os << v;
        rows_.emplace_back(key, os.str());
    }
    void set(const std::string& key, const std::string& v) { rows_.emplace_back(key, v); }

    void write(const std::string& path) const {
        std::ofstream os(path);
        if (!os) throw std::runtime_error("manifest: cannot open " + path);
        for (const auto& [k, v] : rows_) os << k << "=" << v << "\n";
    }

private:
    std::vector<std::pair<std::string, std::string>> rows_;
};

struct RunResult {
    bool fdtd_blowup = false;
    std::string manifest_path;
};

/// Executes the configured stage list; every derived constant lands in the
/// manifest. Numerical blow-up of the fdtd backend is a recorded outcome.
inline RunResult run_experiment(const ExperimentConfig& e) {
    namespace fs = std::filesystem;
    fs::create_directories(e.out_dir);
    RunResult result;
    Manifest man;

    const MediumParams& m = e.medium;
    const double kc = m.tau1 > 0.0 ? 2.0 / (m.tau1 * m.c0) : std::numeric_limits<double>::infinity();
    man.set("c0", m.c0);
    man.set("tau1", m.tau1);
    man.set("tau2", tau2_value(m, e.tau2_mode));
    man.set("alpha2", m.alpha2);
    man.set("kc", kc);
    man.set("wavefront_speed", wavefront_speed(m));
    man.set("c1_fdtd", 2.0 * m.c0);
    man.set("grid_n", static_cast<double>(e.grid.n));
    man.set("grid_dx", e.grid.dx);
    man.set("grid_extent", e.grid.extent());
    man.set("omega_center_x", e.omega.center[0]);
    man.set("omega_center_y", e.omega.center[1]);
    man.set("omega_half", e.omega.half);
    man.set("T", e.reversal.T);
    man.set("eps", e.reversal.eps);
    man.set("D", e.reversal.D);
    if (m.tau1 > 0.0) man.set("required_D", required_D(m, e.reversal.T, e.reversal.eps));
    man.set("resolution_limit_D", m.tau1 * m.c0 * m.c0 * e.reversal.T);
    man.set("overflow_threshold_log10", 300.0);
    const FdtdConfig fcfg = make_fdtd_config(e.grid, m, e.reversal.T);
    man.set("fdtd_dt", fcfg.dt);
    man.set("fdtd_n_steps", static_cast<double>(fcfg.n_steps));
    man.set("full_scale", e.full_scale ? "true" : "false");
    {
        std::string stages;
        for (const auto& s : e.stages) stages += (stages.empty() ? "" : ",") + s;
        man.set("stages", stages.empty() ? "(none)" : stages);
    }

    const RealField phi = e.phantom.kind == PhantomKind::smooth_bumps
                              ? phantom_smooth(e.phantom, e.grid)
                              : phantom_piecewise(e.phantom, e.grid);
    export_grid(phi, e.out_dir, "phi", e.formats);

    // support bbox for the assT record
    std::array<double, 3> lo{e.omega.center}, hi{e.omega.center};
    bool any = false;
    for (int i1 = 0; i1 < e.grid.n; ++i1)
        for (int i0 = 0; i0 < e.grid.n; ++i0)
            if (phi.at(i0, i1) != 0.0) {
                const double x = e.grid.coord(0, i0), y = e.grid.coord(1, i1);
                if (!any) {
                    lo = {x, y, 0.0};
                    hi = {x, y, 0.0};
                    any = true;
                } else {
                    lo[0] = std::min(lo[0], x);
                    lo[1] = std::min(lo[1], y);
                    hi[0] = std::max(hi[0], x);
                    hi[1] = std::max(hi[1], y);
                }
            }
    man.set("assT_satisfied",
            any && assT_satisfied(e.omega, lo, hi, m, e.reversal.T, 2) ? "true" : "false");

    std::optional<RealField> phi_T;
    std::optional<DetectorSeries> beta;
    std::optional<RealField> F1;

    for (const std::string& stage : e.stages) {
        if (stage == "forward") {
            phi_T = pat_forward(phi, m, e.reversal.T, e.tau2_mode);
            export_grid(*phi_T, e.out_dir, "phi_T", e.formats);
            if (e.detectors > 0) {
                const double dt = e.beta_dt > 0.0 ? e.beta_dt : fcfg.dt;
                man.set("beta_dt", dt);
                std::vector<std::array<double, 3>> pos;
                for (int d = 0; d < e.detectors; ++d) {
                    const double ang = 2.0 * std::numbers::pi * d / e.detectors;
                    pos.push_back({e.omega.center[0] + e.omega.half * std::cos(ang),
                                   e.omega.center[1] + e.omega.half * std::sin(ang), 0.0});
                }
                beta = sample_detector_series(phi, m, e.reversal.T, dt, e.tau2_mode, pos,
                                              e.omega.center);
                write_detectors_csv(*beta, e.out_dir + "/beta.csv");
            }
        } else if (stage == "shift") {
            if (!beta) throw config_error("stage 'shift' ran without forward detector data");
            const DetectorSeries causal = apply_time_shift(*beta, m, ShiftDirection::tv_to_causal);
            write_detectors_csv(causal, e.out_dir + "/beta_causal.csv");
        } else if (stage == "reverse") {
            if (!phi_T) throw config_error("stage 'reverse' ran without forward data");
            RealField F = time_reverse_F(*phi_T, m, e.reversal);
            for (double& v : F.values) v *= 2.0; // F1 = 2 F[R_D phi_T]
            F1 = std::move(F);
            export_grid(*F1, e.out_dir, "F1", e.formats);
        } else if (stage == "image") {
            const ImageResult img = image_I(phi, m, e.reversal.T, e.image_backend);
            if (img.report.blown_up) {
                result.fdtd_blowup = true;
                man.set("image_blowup_step", static_cast<double>(img.report.step));
                write_stability_csv(img.report, e.out_dir + "/stability.csv");
            } else {
                export_grid(img.image, e.out_dir, "image_I", e.formats);
                export_grid(img.I0, e.out_dir, "I0", e.formats);
                export_grid(apply_laplacian(img.I0), e.out_dir, "laplace_I0", e.formats);
                if (e.image_backend == ImageBackend::fdtd)
                    write_stability_csv(img.report, e.out_dir + "/stability.csv");
            }
        } else if (stage == "enhance") {
            if (!F1) throw config_error("stage 'enhance' ran without the F1 image");
            RealField rhs = *F1;
            for (double& v : rhs.values) v *= 0.5; // A(R_D phi) = F1 / 2
            const double lambda = e.lambda > 0.0
                                      ? e.lambda
                                      : default_lambda(e.grid, m, e.reversal.T, e.tau2_mode);
            man.set("lambda", lambda);
            const RealField enhanced = solve_operator_eq(rhs, m, e.reversal.T, e.tau2_mode, lambda);
            export_grid(enhanced, e.out_dir, "enhanced", e.formats);
        }
    }
    man.set("fdtd_blowup", result.fdtd_blowup ? "true" : "false");
    result.manifest_path = e.out_dir + "/manifest.txt";
    man.write(result.manifest_path);
    return result;
}

/// Machine-readable failure record next to the outputs.
inline void write_error_record(const std::string& out_dir, const std::string& kind,
                               const std::string& message) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    std::ofstream os(out_dir + "/error.txt");
    os << "error_kind=" << kind << "\nmessage=" << message << "\n";
}

} // namespace pat
