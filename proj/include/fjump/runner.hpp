#pragma once

// Sweep runners behind the CLI: analytic curves and Monte Carlo ensembles
// over a grid of dark times, written as plot-ready CSV. Output bytes are a
// pure function of (config, seed): numbers print with %.17g and headers
// carry the config hash and seed, never timestamps.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include "fjump/analytic.hpp"
#include "fjump/config.hpp"
#include "fjump/dynamics.hpp"
#include "fjump/floquet.hpp"

namespace fjump {

struct SweepRow {
    double t_d = 0.0;
    double du_simple = -1.0;          // m; < 0 when the model is disabled
    double du_heating_simple = -1.0;  // m
    double du_full = -1.0;            // m
    double du_mc = -1.0;              // m
    double du_mc_err = -1.0;          // m
    int excluded_shots = 0;
};

namespace detail {

inline std::string fmt_g17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_provenance(std::ofstream& out, const ExperimentConfig& cfg) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(config_hash(cfg)));
    out << "# config_hash=" << buf << " seed=" << cfg.base_seed << "\n";
    out << "# lengths in m, times in s, velocities in m/s\n";
}

}  // namespace detail

// Simplified and micromotion-resolved state-size curves over the sweep grid.
inline std::vector<SweepRow> analytic_sweep(const ExperimentConfig& cfg) {
    const auto part = cfg.particle();
    const auto opt = cfg.optical();
    const auto paul = cfg.paul();
    const auto init = cfg.init();
    const double tau0 = 0.5 * paul.rf_phase0;
    FloquetSolution sol;
    if (cfg.model_full) sol = floquet_coefficients(paul.a_u, paul.q_u, paul.beta, cfg.n_max);

    std::vector<SweepRow> rows;
    for (double t_d : cfg.sweep_times()) {
        SweepRow row;
        row.t_d = t_d;
        if (cfg.model_simple) {
            row.du_simple = std::sqrt(total_variance_simple(t_d, init, part, opt, paul));
            const double r = opt.omega_u_eff / paul.omega_p;
            row.du_heating_simple = std::sqrt(
                heating_variance(t_d, r, part.Gamma_heat, part.mass, opt.omega_u_eff,
                                 paul.omega_p));
        }
        if (cfg.model_full) {
            row.du_full = std::sqrt(
                full_coherent_variance_physical(t_d, init.du0, init.dv0, sol, paul.omega_rf,
                                                tau0) +
                full_heating_variance(t_d, part.gamma, part.T_bath, part.mass, sol,
                                      paul.omega_rf, tau0));
        }
        rows.push_back(row);
    }
    return rows;
}

// Monte Carlo ensembles through the measurement pipeline, one per grid point.
inline std::vector<EnsembleStats> ensemble_sweep(const ExperimentConfig& cfg) {
    const auto part = cfg.particle();
    const auto opt = cfg.optical();
    const auto paul = cfg.paul();
    const auto init = cfg.init();
    const int threads = cfg.threads > 0
                            ? cfg.threads
                            : static_cast<int>(std::thread::hardware_concurrency());
    return run_ensemble(cfg.sweep_times(), cfg.schedule(), init, part, opt, paul,
                        cfg.pipeline(), cfg.n_shots, cfg.base_seed, std::max(1, threads));
}

inline void write_sweep_csv(const std::string& path, const ExperimentConfig& cfg,
                            const std::vector<SweepRow>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    detail::write_provenance(out, cfg);
    out << "t_d_s";
    if (cfg.model_simple) out << ",du_simple_m,du_heating_simple_m";
    if (cfg.model_full) out << ",du_full_m";
    if (cfg.model_montecarlo) out << ",du_mc_m,du_mc_err_m,excluded_shots";
    out << "\n";
    for (const auto& r : rows) {
        out << detail::fmt_g17(r.t_d);
        if (cfg.model_simple)
            out << "," << detail::fmt_g17(r.du_simple) << ","
                << detail::fmt_g17(r.du_heating_simple);
        if (cfg.model_full) out << "," << detail::fmt_g17(r.du_full);
        if (cfg.model_montecarlo)
            out << "," << detail::fmt_g17(r.du_mc) << "," << detail::fmt_g17(r.du_mc_err) << ","
                << r.excluded_shots;
        out << "\n";
    }
}

inline void write_points_csv(const std::string& path, const ExperimentConfig& cfg,
                             const EnsembleStats& st, double omega_u) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    detail::write_provenance(out, cfg);
    out << "# t_d_s=" << detail::fmt_g17(st.t_d) << " noise_var_m2="
        << detail::fmt_g17(st.noise_var) << " excluded=" << st.n_excluded << "\n";
    out << "u_m,udot_m_s,udot_over_omega_m,trigger_delay_s\n";
    for (const auto& p : st.samples)
        out << detail::fmt_g17(p.u) << "," << detail::fmt_g17(p.u_dot) << ","
            << detail::fmt_g17(p.u_dot / omega_u) << "," << detail::fmt_g17(p.trigger_delay)
            << "\n";
}

inline void export_trajectory_csv(const std::string& path, const Trajectory& traj) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    out << "# seed=" << traj.seed << " release_index=" << traj.release_index
        << " recapture_index=" << traj.recapture_index << "\n";
    out << "t_s,x_m,y_m,vx_m_s,vy_m_s\n";
    for (std::size_t i = 0; i < traj.samples.size(); ++i) {
        const auto& s = traj.samples[i];
        out << detail::fmt_g17(static_cast<double>(i) * traj.dt) << "," << detail::fmt_g17(s[0])
            << "," << detail::fmt_g17(s[1]) << "," << detail::fmt_g17(s[2]) << ","
            << detail::fmt_g17(s[3]) << "\n";
    }
}

// `fjump analytic`: writes analytic.csv into out_dir.
inline std::string cmd_analytic(const ExperimentConfig& cfg, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    const auto rows = analytic_sweep(cfg);
    const std::string path = out_dir + "/analytic.csv";
    write_sweep_csv(path, cfg, rows);
    return path;
}

// `fjump ensemble`: writes ensemble.csv plus one retrodicted-point file per
// grid index into out_dir.
inline std::vector<std::string> cmd_ensemble(const ExperimentConfig& cfg,
                                             const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    ExperimentConfig mc_cfg = cfg;
    mc_cfg.model_montecarlo = true;
    const auto stats = ensemble_sweep(mc_cfg);

    std::vector<SweepRow> rows = analytic_sweep(mc_cfg);
    for (std::size_t i = 0; i < stats.size(); ++i) {
        rows[i].du_mc = stats[i].du;
        rows[i].du_mc_err = stats[i].bootstrap_err;
        rows[i].excluded_shots = stats[i].n_excluded;
    }

    std::vector<std::string> written;
    const std::string sweep_path = out_dir + "/ensemble.csv";
    write_sweep_csv(sweep_path, mc_cfg, rows);
    written.push_back(sweep_path);
    const double omega_u = mc_cfg.optical().omega_u_eff;
    for (std::size_t i = 0; i < stats.size(); ++i) {
        char name[64];
        std::snprintf(name, sizeof name, "/points_%03zu.csv", i);
        const std::string p = out_dir + name;
        write_points_csv(p, mc_cfg, stats[i], omega_u);
        written.push_back(p);
    }
    return written;
}

}  // namespace fjump
