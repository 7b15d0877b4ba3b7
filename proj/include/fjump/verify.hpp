#pragma once

// Acceptance suite: every check pins its tolerance here and reports one
// pass/fail line. Shared by the `fjump verify` subcommand and the ctest
// acceptance binary.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "fjump/analytic.hpp"
#include "fjump/config.hpp"
#include "fjump/dynamics.hpp"
#include "fjump/floquet.hpp"
#include "fjump/runner.hpp"

namespace fjump {

struct CheckResult {
    std::string name;
    std::string detail;
    bool pass = false;
    bool informational = false;  // reported but not gating
};

struct VerifyReport {
    std::vector<CheckResult> checks;
    bool all_pass() const {
        for (const auto& c : checks)
            if (!c.informational && !c.pass) return false;
        return true;
    }
};

// Paper-figure operating point at frequency ratio r: RF drive as in the
// nominal setup, q_u tuned so omega_u_eff / omega_p = r, release half an RF
// cycle into the drive (the phase that reproduces the observed micromotion
// enhancement of the expanded state).
inline ExperimentConfig paper_preset(double r) {
    ExperimentConfig cfg;
    const double omega_u = cfg.optical().omega_u_eff;
    const double beta = 2.0 * (omega_u / r) / cfg.omega_rf;
    cfg.q_u = mathieu_q_for_beta(0.0, beta);
    cfg.rf_phase0 = constants::pi;
    return cfg;
}

// Pseudo-potential realization of the same frequency ratio: a static
// harmonic dark trap at omega_p (a = beta^2, q = 0).
inline ExperimentConfig pseudo_preset(double r) {
    ExperimentConfig cfg;
    const double omega_u = cfg.optical().omega_u_eff;
    const double beta = 2.0 * (omega_u / r) / cfg.omega_rf;
    cfg.a_u = beta * beta;
    cfg.q_u = 0.0;
    cfg.rf_phase0 = 0.0;
    return cfg;
}

namespace detail {

inline std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

}  // namespace detail

// 1. Full model at q = 0 equals the simplified closed forms pointwise over
//    two secular periods, relative error < 1e-10.
inline CheckResult criterion1_pseudo_potential_limit() {
    const ExperimentConfig cfg = pseudo_preset(14.5);
    const auto part = cfg.particle();
    const auto opt = cfg.optical();
    const auto paul = cfg.paul();
    const auto init = cfg.init();
    const auto sol = floquet_coefficients(paul.a_u, paul.q_u, paul.beta, 5);
    const double r = opt.omega_u_eff / paul.omega_p;
    const double t_p = constants::two_pi / paul.omega_p;

    double worst = 0.0;
    for (int k = 1; k <= 97; ++k) {
        const double t = static_cast<double>(k) * 2.0 * t_p / 97.0;
        const double vc_full =
            full_coherent_variance(t, init.du0, init.dv0, sol, paul.omega_rf);
        const double vc_simple =
            coherent_variance(t, init.du0, init.dv0, opt.omega_u_eff, paul.omega_p);
        const double vh_full =
            full_heating_variance(t, part.gamma, part.T_bath, part.mass, sol, paul.omega_rf);
        const double vh_simple = heating_variance(t, r, part.Gamma_heat, part.mass,
                                                  opt.omega_u_eff, paul.omega_p);
        worst = std::max(worst, std::abs(vc_full - vc_simple) / vc_simple);
        worst = std::max(worst, std::abs(vh_full - vh_simple) / vh_simple);
    }
    return {"1 pseudo-potential limit",
            detail::fmt("worst rel err %.3e (tol 1e-10)", worst), worst < 1e-10};
}

// 2. Mathieu machinery at the three operating points: ODE residual and
//    Wronskian constancy < 1e-8, recurrence beta vs monodromy beta < 1e-8.
inline CheckResult criterion2_mathieu_correctness() {
    double worst_resid = 0.0, worst_wronsk = 0.0, worst_beta = 0.0;
    for (double r : {8.8, 14.5, 24.3}) {
        const ExperimentConfig cfg = paper_preset(r);
        const double beta = characteristic_exponent(cfg.a_u, cfg.q_u);
        const double beta_mono = characteristic_exponent_monodromy(cfg.a_u, cfg.q_u, 8192);
        worst_beta = std::max(worst_beta, std::abs(beta - beta_mono));
        const auto sol = floquet_coefficients(cfg.a_u, cfg.q_u, beta, 5);

        // finite-difference ODE residual, independent of the series derivative
        const double h = 5e-3;
        double max_l = 0.0, max_res = 0.0;
        for (int k = 0; k <= 200; ++k) {
            const double tau = static_cast<double>(k) * constants::pi / 200.0;
            for (int which = 0; which < 2; ++which) {
                auto f = [&](double x) {
                    return which == 0 ? lambda1(sol, x) : lambda2(sol, x);
                };
                const double d2 = (-f(tau - 2 * h) + 16 * f(tau - h) - 30 * f(tau) +
                                   16 * f(tau + h) - f(tau + 2 * h)) /
                                  (12 * h * h);
                const double res =
                    d2 + (cfg.a_u - 2.0 * cfg.q_u * std::cos(2.0 * tau)) * f(tau);
                max_res = std::max(max_res, std::abs(res));
                max_l = std::max(max_l, std::abs(f(tau)));
            }
        }
        worst_resid = std::max(worst_resid, max_res / max_l);

        const double w_ref = sol.wronskian();
        for (int k = 0; k < 100; ++k) {
            const double tau = 0.031 + static_cast<double>(k) * constants::pi / 100.0;
            const double w_dyn = lambda1(sol, tau) * lambda2_prime(sol, tau) -
                                 lambda1_prime(sol, tau) * lambda2(sol, tau);
            worst_wronsk = std::max(worst_wronsk, std::abs(w_dyn - w_ref) / std::abs(w_ref));
        }
    }
    const bool pass = worst_resid < 1e-8 && worst_wronsk < 1e-8 && worst_beta < 1e-8;
    return {"2 Mathieu correctness",
            detail::fmt("residual %.2e, wronskian %.2e, beta diff %.2e (tol 1e-8)", worst_resid,
                        worst_wronsk, worst_beta),
            pass};
}

// 3. gamma = 0 Monte Carlo ensembles against the micromotion-resolved
//    coherent model at 16 dark times over one secular period.
inline CheckResult criterion3_mc_vs_coherent_model(int threads) {
    ExperimentConfig cfg = paper_preset(8.8);
    cfg.gamma = 0.0;
    cfg.gamma_heat = 0.0;
    cfg.gamma_heat_explicit = true;
    const auto part = cfg.particle();
    const auto opt = cfg.optical();
    const auto paul = cfg.paul();
    const auto init = cfg.init();
    const auto sol = floquet_coefficients(paul.a_u, paul.q_u, paul.beta, 5);
    const double t_p = constants::two_pi / paul.omega_p;
    const double tau0 = 0.5 * paul.rf_phase0;
    const int n = 2000;
    const double band = 4.0 / std::sqrt(2.0 * n);

    PipelineConfig pc;
    pc.retrodict = false;
    ProtocolSchedule sched = cfg.schedule();
    sched.t_post = 0.0;

    double worst = 0.0;
    for (int k = 1; k <= 16; ++k) {
        sched.t_d = static_cast<double>(k) * t_p / 16.0;
        const auto st = run_ensemble_point(sched, init, part, opt, paul, pc, n, cfg.base_seed,
                                           static_cast<std::uint64_t>(k), threads);
        const double pred = std::sqrt(full_coherent_variance_physical(
            sched.t_d, init.du0, init.dv0, sol, paul.omega_rf, tau0));
        worst = std::max(worst, std::abs(st.du / pred - 1.0));
    }
    return {"3 Monte Carlo vs coherent model",
            detail::fmt("worst rel dev %.4f (band %.4f, n=2000, 16 points)", worst, band),
            worst < band};
}

// 4. Heating law: exact Eq.-4 identity of the simplified model; Monte Carlo
//    agreement at the compression time in the pseudo-potential realization;
//    r^2 scaling of the heating slope between the 8.8 and 24.3 ratios; and
//    the micromotion-resolved cross-check against the full model.
inline std::vector<CheckResult> criterion4_heating_law(int threads) {
    std::vector<CheckResult> out;
    PipelineConfig pc;
    pc.retrodict = false;

    {  // 4a analytic identity at T_p/2
        const ExperimentConfig cfg = paper_preset(14.5);
        const auto part = cfg.particle();
        const auto opt = cfg.optical();
        const auto paul = cfg.paul();
        const auto init = cfg.init();
        const double t_half = constants::pi / paul.omega_p;
        const double lhs = total_variance_simple(t_half, init, part, opt, paul);
        const double rhs = compression_time_variance(init, part, opt, paul);
        const double dev = std::abs(lhs / rhs - 1.0);
        out.push_back({"4a compression-time identity",
                       detail::fmt("rel dev %.2e (tol 1e-12)", dev), dev < 1e-12});
    }
    {  // 4b Monte Carlo vs Eq. 4 where the simplified law is exact (q = 0)
        const ExperimentConfig cfg = pseudo_preset(14.5);
        const auto part = cfg.particle();
        const auto opt = cfg.optical();
        const auto paul = cfg.paul();
        const auto init = cfg.init();
        ProtocolSchedule sched = cfg.schedule(constants::pi / paul.omega_p);
        sched.t_post = 0.0;
        const auto st = run_ensemble_point(sched, init, part, opt, paul, pc, 2000,
                                           cfg.base_seed, 41, threads);
        const double pred = std::sqrt(compression_time_variance(init, part, opt, paul));
        const double dev = std::abs(st.du - pred);
        out.push_back({"4b Monte Carlo vs Eq.-4 value (q=0)",
                       detail::fmt("MC %.4g nm vs %.4g nm, dev %.3g bootstrap sigma", st.du * 1e9,
                                   pred * 1e9, dev / st.bootstrap_err),
                       dev < 3.0 * st.bootstrap_err});
    }
    {  // 4c heating slope ratio between the two frequency ratios (q = 0)
        double slopes[2] = {0.0, 0.0};
        const double rs[2] = {8.8, 24.3};
        for (int i = 0; i < 2; ++i) {
            const ExperimentConfig cfg = pseudo_preset(rs[i]);
            const auto part = cfg.particle();
            const auto opt = cfg.optical();
            const auto paul = cfg.paul();
            const auto init = cfg.init();
            const double t2 = 2.0 * constants::two_pi / paul.omega_p;
            ProtocolSchedule sched = cfg.schedule(t2);
            sched.t_post = 0.0;
            const auto st = run_ensemble_point(sched, init, part, opt, paul, pc, 8000,
                                               cfg.base_seed, 43, threads);
            slopes[i] = (st.raw_var_u - init.du0 * init.du0) / t2;
        }
        const double expected = (24.3 / 8.8) * (24.3 / 8.8);
        const double ratio = slopes[1] / slopes[0];
        const double dev = std::abs(ratio / expected - 1.0);
        out.push_back({"4c heating slope ratio r^2 scaling",
                       detail::fmt("ratio %.3f vs %.3f, rel dev %.3f (tol 0.10)", ratio, expected,
                                   dev),
                       dev < 0.10});
    }
    {  // 4d full model cross-check at the paper operating point
        const ExperimentConfig cfg = paper_preset(14.5);
        const auto part = cfg.particle();
        const auto opt = cfg.optical();
        const auto paul = cfg.paul();
        const auto init = cfg.init();
        const auto sol = floquet_coefficients(paul.a_u, paul.q_u, paul.beta, 5);
        const double tau0 = 0.5 * paul.rf_phase0;
        ProtocolSchedule sched = cfg.schedule(constants::pi / paul.omega_p);
        sched.t_post = 0.0;
        const auto st = run_ensemble_point(sched, init, part, opt, paul, pc, 2000,
                                           cfg.base_seed, 47, threads);
        const double pred = std::sqrt(
            full_coherent_variance_physical(sched.t_d, init.du0, init.dv0, sol, paul.omega_rf,
                                            tau0) +
            full_heating_variance(sched.t_d, part.gamma, part.T_bath, part.mass, sol,
                                  paul.omega_rf, tau0));
        const double dev = std::abs(st.du - pred);
        out.push_back({"4d Monte Carlo vs full model at T_p/2",
                       detail::fmt("MC %.4g nm vs %.4g nm, dev %.3g bootstrap sigma", st.du * 1e9,
                                   pred * 1e9, dev / st.bootstrap_err),
                       dev < 3.0 * st.bootstrap_err});
    }
    return out;
}

// 5. Expansion factor through the full measurement pipeline at r = 24.3.
inline CheckResult criterion5_expansion_factor(int threads) {
    ExperimentConfig cfg = paper_preset(24.3);
    cfg.n_shots = 500;
    const auto part = cfg.particle();
    const auto opt = cfg.optical();
    const auto paul = cfg.paul();
    const auto init = cfg.init();
    const double t_p = constants::two_pi / paul.omega_p;

    std::vector<double> ts;
    for (int k = 0; k <= 24; ++k) ts.push_back(static_cast<double>(k) * t_p / 24.0);
    const auto stats = run_ensemble(ts, cfg.schedule(), init, part, opt, paul, cfg.pipeline(),
                                    cfg.n_shots, cfg.base_seed, threads);
    const double du0 = stats.front().du;
    double peak = 0.0;
    int excluded = 0;
    for (const auto& st : stats) {
        peak = std::max(peak, st.du);
        excluded += st.n_excluded;
    }
    const double factor = peak / du0;
    return {"5 expansion factor (r=24.3, pipeline)",
            detail::fmt("max du/du(0) = %.2f (threshold 20), excluded %.0f", factor,
                        static_cast<double>(excluded)),
            factor >= 20.0};
}

// 6. Micromotion enhancement of the peak state size at r = 8.8 falls in the
//    reported band [1.3, 2.2] relative to the simplified model.
inline CheckResult criterion6_micromotion_band() {
    const ExperimentConfig cfg = paper_preset(8.8);
    const auto part = cfg.particle();
    const auto opt = cfg.optical();
    const auto paul = cfg.paul();
    const auto init = cfg.init();
    const auto sol = floquet_coefficients(paul.a_u, paul.q_u, paul.beta, 5);
    const double tau0 = 0.5 * paul.rf_phase0;
    const double t_p = constants::two_pi / paul.omega_p;

    // dense scan of the cheap coherent parts, full evaluation at the leaders
    const int n_grid = 4000;
    std::vector<std::pair<double, double>> cand;  // (coherent var, t)
    double peak_simple = 0.0;
    for (int k = 0; k <= n_grid; ++k) {
        const double t = static_cast<double>(k) * t_p / n_grid;
        cand.emplace_back(
            full_coherent_variance_physical(t, init.du0, init.dv0, sol, paul.omega_rf, tau0), t);
        peak_simple = std::max(peak_simple, total_variance_simple(t, init, part, opt, paul));
    }
    std::sort(cand.begin(), cand.end(), [](auto& a, auto& b) { return a.first > b.first; });
    double peak_full = 0.0;
    for (int i = 0; i < 48; ++i) {
        const double t = cand[static_cast<std::size_t>(i)].second;
        const double v = cand[static_cast<std::size_t>(i)].first +
                         full_heating_variance(t, part.gamma, part.T_bath, part.mass, sol,
                                               paul.omega_rf, tau0);
        peak_full = std::max(peak_full, v);
    }
    const double ratio = std::sqrt(peak_full / peak_simple);
    return {"6 micromotion peak enhancement (r=8.8)",
            detail::fmt("peak ratio full/simplified = %.3f (band 1.3 .. 2.2)", ratio),
            ratio >= 1.3 && ratio <= 2.2};
}

// 7. Pipeline ground truth: exact retrodiction with all noise off; noise
//    floor recovered at the configured level; unbiased noise subtraction.
inline std::vector<CheckResult> criterion7_pipeline_ground_truth(int threads) {
    std::vector<CheckResult> out;
    ExperimentConfig cfg = paper_preset(8.8);
    const auto opt = cfg.optical();
    const auto paul = cfg.paul();
    const auto init = cfg.init();
    const double t_p = constants::two_pi / paul.omega_p;

    {  // 7a noiseless retrodiction vs simulator state at T_p/4
        ExperimentConfig c0 = cfg;
        c0.gamma = 0.0;
        c0.gamma_heat = 0.0;
        c0.gamma_heat_explicit = true;
        const auto part0 = c0.particle();
        PipelineConfig pr = c0.pipeline();
        pr.noise_floor_target = 0.0;
        pr.subtract_noise = false;
        ProtocolSchedule sched = c0.schedule(t_p / 4.0);
        double eu = 0.0, su = 0.0, ew = 0.0, sw = 0.0;
        const int n = 200;
        for (int i = 0; i < n; ++i) {
            const auto seed = derive_seed(c0.base_seed, static_cast<std::uint64_t>(i), 71);
            const auto shot = run_shot(sched, init, part0, opt, paul, seed,
                                       RecordMode::recapture);
            const auto sp = detail::process_shot(sched, init, part0, opt, paul, pr, seed);
            const double du = sp.point.u - shot.recapture_uv[0];
            const double dw = (sp.point.u_dot - shot.recapture_uv[2]) / opt.omega_u_eff;
            eu += du * du;
            su += shot.recapture_uv[0] * shot.recapture_uv[0];
            ew += dw * dw;
            sw += (shot.recapture_uv[2] / opt.omega_u_eff) *
                  (shot.recapture_uv[2] / opt.omega_u_eff);
        }
        const double rel_u = std::sqrt(eu / su), rel_w = std::sqrt(ew / sw);
        out.push_back({"7a noiseless retrodiction accuracy",
                       detail::fmt("RMS rel err u %.4f, velocity %.4f (tol 0.02)", rel_u, rel_w),
                       rel_u < 0.02 && rel_w < 0.02});
    }
    {  // 7b + 7c noise floor recovery and unbiased subtraction, t_d = 0
        const auto part = cfg.particle();
        ProtocolSchedule sched = cfg.schedule(0.0);
        const int n = 2000, reps = 10;
        double noise_est = 0.0, mean_du = 0.0;
        for (int rep = 0; rep < reps; ++rep) {
            const auto st =
                run_ensemble_point(sched, init, part, opt, paul, cfg.pipeline(), n,
                                   cfg.base_seed + static_cast<std::uint64_t>(rep), 73, threads);
            noise_est += st.noise_var;
            mean_du += st.du;
        }
        noise_est /= reps;
        mean_du /= reps;
        const double dev_noise = std::abs(noise_est / cfg.noise_var - 1.0);
        out.push_back({"7b noise-floor recovery",
                       detail::fmt("estimate %.3g nm^2 vs injected %.3g nm^2, rel dev %.3f "
                                   "(tol 0.15)",
                                   noise_est * 1e18, cfg.noise_var * 1e18, dev_noise),
                       dev_noise < 0.15});
        const double bias = std::abs(mean_du / init.du0 - 1.0);
        out.push_back({"7c noise-subtracted state size bias",
                       detail::fmt("mean du %.4f nm vs %.4f nm, rel bias %.4f (tol 0.02)",
                                   mean_du * 1e9, init.du0 * 1e9, bias),
                       bias < 0.02});
    }
    return out;
}

// 8. Initial-state consistency at T_CoM = 155 mK. 8a validates the pipeline
//    against the closed-form prediction for the configured temperatures.
//    8b compares against the measured 1.5 nm anchor as stated; with the
//    documented defaults (equal mode temperatures, 1850 kg/m^3) the closed
//    form gives 2.03 nm, so 8b cannot pass and is reported honestly red --
//    see the accompanying sensitivity note.
inline std::vector<CheckResult> criterion8_initial_state(int threads) {
    std::vector<CheckResult> out;
    ExperimentConfig cfg = paper_preset(8.8);  // trap choice irrelevant at t_d = 0
    const auto part = cfg.particle();
    const auto opt = cfg.optical();
    const auto paul = cfg.paul();
    const auto init = cfg.init();

    const auto st = run_ensemble_point(cfg.schedule(0.0), init, part, opt, paul, cfg.pipeline(),
                                       500, cfg.base_seed, 83, threads);
    {
        const double dev = std::abs(st.du - init.du0);
        out.push_back({"8a t_d=0 ensemble vs closed-form size",
                       detail::fmt("du %.4f nm vs %.4f nm, dev %.2f bootstrap sigma",
                                   st.du * 1e9, init.du0 * 1e9, dev / st.bootstrap_err),
                       dev < 3.0 * st.bootstrap_err});
    }
    {
        const double anchor = 1.5e-9, anchor_err = 0.1e-9;
        const double tol = std::max(anchor_err, st.bootstrap_err);
        const double dev = std::abs(st.du - anchor);
        CheckResult c{"8b t_d=0 ensemble vs 1.5 nm anchor",
                      detail::fmt("du %.4f nm vs 1.50 nm +- %.2f nm", st.du * 1e9, tol * 1e9),
                      dev <= tol};
        out.push_back(c);

        // sensitivity note
        const double k2m = constants::k_B / (2.0 * part.mass);
        const double tx_only = anchor * anchor / (k2m / (opt.omega_x * opt.omega_x));
        std::ostringstream note;
        note << "note: equal-split T_CoM=155 mK at 1850 kg/m^3 gives du0 = "
             << detail::fmt("%.3f", init.du0 * 1e9)
             << " nm deterministically; du0 scales as 1/sqrt(density) "
                "(2200 kg/m^3 -> "
             << detail::fmt("%.3f", init.du0 * 1e9 * std::sqrt(1850.0 / 2200.0))
             << " nm). A velocity-to-position ratio of 0.85 pins T_y ~ 0, and (T_x = "
             << detail::fmt("%.1f", tx_only * 1e3)
             << " mK, T_y = 0) reproduces 1.5 nm exactly at the default density.";
        out.push_back({"8 sensitivity", note.str(), true, true});
    }
    return out;
}

// 9. Byte-identical ensemble outputs for a repeated seed and across thread
//    counts.
inline CheckResult criterion9_determinism(const std::string& scratch_dir) {
    ExperimentConfig cfg = paper_preset(8.8);
    cfg.n_shots = 40;
    cfg.t_d_start = 0.0;
    cfg.t_d_stop = 50e-6;
    cfg.t_d_step = 25e-6;
    cfg.bootstrap_n = 200;

    auto read_all = [](const std::string& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };

    namespace fs = std::filesystem;
    const std::string d1 = scratch_dir + "/det_a", d2 = scratch_dir + "/det_b",
                      d3 = scratch_dir + "/det_c";
    ExperimentConfig c1 = cfg;
    c1.threads = 4;
    const auto files1 = cmd_ensemble(c1, d1);
    const auto files2 = cmd_ensemble(c1, d2);
    ExperimentConfig c3 = cfg;
    c3.threads = 1;
    const auto files3 = cmd_ensemble(c3, d3);

    bool ok = files1.size() == files2.size() && files1.size() == files3.size();
    if (ok)
        for (std::size_t i = 0; i < files1.size(); ++i) {
            const std::string a = read_all(files1[i]);
            ok = ok && a == read_all(files2[i]) && a == read_all(files3[i]);
        }
    fs::remove_all(d1);
    fs::remove_all(d2);
    fs::remove_all(d3);
    return {"9 determinism",
            ok ? std::string("repeat and cross-thread outputs byte-identical")
               : std::string("outputs differ"),
            ok};
}

inline VerifyReport run_acceptance(int threads, const std::string& scratch_dir = "/tmp/fjump") {
    VerifyReport rep;
    rep.checks.push_back(criterion1_pseudo_potential_limit());
    rep.checks.push_back(criterion2_mathieu_correctness());
    rep.checks.push_back(criterion3_mc_vs_coherent_model(threads));
    for (auto& c : criterion4_heating_law(threads)) rep.checks.push_back(c);
    rep.checks.push_back(criterion5_expansion_factor(threads));
    rep.checks.push_back(criterion6_micromotion_band());
    for (auto& c : criterion7_pipeline_ground_truth(threads)) rep.checks.push_back(c);
    for (auto& c : criterion8_initial_state(threads)) rep.checks.push_back(c);
    rep.checks.push_back(criterion9_determinism(scratch_dir));
    return rep;
}

inline void print_report(std::ostream& os, const VerifyReport& rep) {
    for (const auto& c : rep.checks) {
        const char* tag = c.informational ? "INFO" : (c.pass ? "PASS" : "FAIL");
        os << "[" << tag << "] " << c.name << ": " << c.detail << "\n";
    }
    os << (rep.all_pass() ? "all checks passed\n" : "FAILURES present\n");
}

}  // namespace fjump
