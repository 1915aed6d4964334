#include <cstdlib>
#include <future>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pat/pat.hpp"

namespace {

constexpr int kExitConfigError = 1;
constexpr int kExitNumericalError = 2;

int max_parallel_runs() {
    if (const char* env = std::getenv("PAT_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

int run_one(const std::string& config_path, const std::string& out_override,
            double tau1_override) {
    std::string out_dir = "out";
    try {
        pat::ExperimentConfig cfg = pat::ExperimentConfig::from_file(config_path);
        if (!out_override.empty()) cfg.out_dir = out_override;
        if (tau1_override >= 0.0) {
            cfg.medium.tau1 = tau1_override;
            cfg.medium.tau2 = pat::tau2_value(cfg.medium, cfg.tau2_mode);
            // recompute auto-derived reversal parameters for the new medium
            pat::KeyValueConfig kv = pat::KeyValueConfig::parse_file(config_path);
            if (kv.get("reversal.eps", "auto") == "auto" && cfg.medium.tau1 > 0.0)
                cfg.reversal.eps = pat::default_eps(cfg.medium);
            if (kv.get("reversal.D", "auto") == "auto")
                cfg.reversal.D = pat::required_D(cfg.medium, cfg.reversal.T, cfg.reversal.eps);
        }
        out_dir = cfg.out_dir;
        if (cfg.full_scale)
            std::cerr << "warning: full-scale 1020^2 run requested; this is the paper's "
                         "grid and takes considerably longer than the desk-scale default\n";
        const pat::RunResult res = pat::run_experiment(cfg);
        if (res.fdtd_blowup)
            std::cout << "note: fdtd image stage blew up (recorded in manifest)\n";
        std::cout << "manifest: " << res.manifest_path << "\n";
        return 0;
    } catch (const pat::config_error& ex) {
        pat::write_error_record(out_dir, "config", ex.what());
        std::cerr << "config error: " << ex.what() << "\n";
        return kExitConfigError;
    } catch (const std::invalid_argument& ex) {
        pat::write_error_record(out_dir, "config", ex.what());
        std::cerr << "config error: " << ex.what() << "\n";
        return kExitConfigError;
    } catch (const std::exception& ex) {
        pat::write_error_record(out_dir, "numerical", ex.what());
        std::cerr << "numerical error: " << ex.what() << "\n";
        return kExitNumericalError;
    }
}

int run_diag_symbols(const std::string& config_path) {
    try {
        const pat::ExperimentConfig cfg = pat::ExperimentConfig::from_file(config_path);
        std::filesystem::create_directories(cfg.out_dir);
        const pat::MediumParams& m = cfg.medium;
        const pat::SymbolTable sym = pat::build_symbols(cfg.grid, m);
        const double tau2 = pat::tau2_value(m, cfg.tau2_mode);

        // radial symbol table
        const std::string sym_path = cfg.out_dir + "/symbols.csv";
        std::ofstream os(sym_path);
        os.precision(17);
        os << "k, mu, theta, theta0, evanescent, J_hat, A_hat\n";
        const double kmax = cfg.grid.kmax() * std::sqrt(2.0);
        const int nk = 2048;
        for (int j = 0; j <= nk; ++j) {
            const double k = kmax * j / nk;
            const auto rs = pat::detail::radial_symbol(k, m);
            os << k << ", " << rs.mu << ", " << rs.theta << ", " << rs.theta0 << ", "
               << (rs.evanescent ? 1 : 0) << ", " << pat::detail::J_radial(k, m, cfg.reversal.T)
               << ", " << pat::detail::A_radial(k, m, cfg.reversal.T, tau2) << "\n";
        }
        os.close();

        const auto shells = pat::symbol_zero_report(cfg.grid, m, cfg.reversal.T, cfg.tau2_mode);
        pat::write_zero_shells_csv(shells, cfg.out_dir + "/zero_shells.csv");

        pat::Manifest man;
        man.set("kc", m.tau1 > 0.0 ? 2.0 / (m.tau1 * m.c0)
                                   : std::numeric_limits<double>::infinity());
        man.set("T", cfg.reversal.T);
        man.set("D", cfg.reversal.D);
        man.set("hs_norm_J", pat::hs_norm_J(sym, cfg.reversal.T, cfg.reversal.D));
        man.set("zero_shells", static_cast<double>(shells.size()));
        man.set("default_lambda",
                pat::default_lambda(cfg.grid, m, cfg.reversal.T, cfg.tau2_mode));
        man.write(cfg.out_dir + "/diag_symbols.txt");
        std::cout << "wrote " << sym_path << ", zero_shells.csv, diag_symbols.txt ("
                  << shells.size() << " zero shells)\n";
        return 0;
    } catch (const pat::config_error& ex) {
        std::cerr << "config error: " << ex.what() << "\n";
        return kExitConfigError;
    } catch (const std::exception& ex) {
        std::cerr << "numerical error: " << ex.what() << "\n";
        return kExitNumericalError;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"pat - photoacoustic time-reversal experiments in thermo-viscous media"};
    app.require_subcommand(1);

    std::string config_path;
    auto* run = app.add_subcommand("run", "run the configured pipeline");
    run->add_option("config", config_path, "experiment config file")->required();

    std::string sweep_config;
    std::string tau1_list;
    auto* sweep = app.add_subcommand("sweep", "run the pipeline for several tau1 values");
    sweep->add_option("--tau1", tau1_list, "comma-separated relaxation times [s]")->required();
    sweep->add_option("config", sweep_config, "experiment config file")->required();

    std::string diag_config;
    auto* diag = app.add_subcommand("diag", "diagnostics");
    auto* diag_symbols = diag->add_subcommand("symbols", "export spectral symbol tables");
    diag_symbols->add_option("config", diag_config, "experiment config file")->required();

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) return run_one(config_path, "", -1.0);

    if (sweep->parsed()) {
        std::vector<double> taus;
        std::istringstream is(tau1_list);
        std::string item;
        while (std::getline(is, item, ','))
            if (!item.empty()) taus.push_back(std::stod(item));
        if (taus.empty()) {
            std::cerr << "config error: --tau1 list is empty\n";
            return kExitConfigError;
        }
        std::string base_out = "out";
        try {
            base_out = pat::ExperimentConfig::from_file(sweep_config).out_dir;
        } catch (const std::exception& ex) {
            std::cerr << "config error: " << ex.what() << "\n";
            return kExitConfigError;
        }
        const int max_par = max_parallel_runs();
        int worst = 0;
        for (std::size_t begin = 0; begin < taus.size(); begin += max_par) {
            std::vector<std::future<int>> batch;
            for (std::size_t i = begin; i < std::min(begin + max_par, taus.size()); ++i) {
                std::ostringstream dir;
                dir << base_out << "/tau1_" << taus[i];
                batch.push_back(std::async(std::launch::async, run_one, sweep_config,
                                           dir.str(), taus[i]));
            }
            for (auto& f : batch) worst = std::max(worst, f.get());
        }
        return worst;
    }

    if (diag_symbols->parsed()) return run_diag_symbols(diag_config);
    std::cerr << "usage: pat diag symbols <config>\n";
    return kExitConfigError;
}
