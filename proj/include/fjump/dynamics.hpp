#pragma once

// Stochastic trajectory simulation of the expansion protocol:
//
//   (i)  optical hold  -- thermal state at the feedback temperatures
//   (ii) release       -- optical trap off, rotate xy -> uv
//   (iii) dark phase   -- two independent Mathieu-Langevin oscillators (u, v)
//   (iv) recapture     -- optical trap on, rotate uv -> xy
//   (v)  record        -- optical evolution, two-channel position record
//
// Semi-implicit (velocity-first) Euler-Maruyama throughout; friction -gamma v
// is kept even though the analytic models neglect it (gamma << omega_p).
// Every shot owns an RNG stream derived from (base_seed, shot index), so
// ensembles are bit-reproducible for any thread count.

#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "fjump/constants.hpp"
#include "fjump/covariance.hpp"
#include "fjump/dsp.hpp"
#include "fjump/errors.hpp"
#include "fjump/params.hpp"
#include "fjump/rng.hpp"
#include "fjump/stats.hpp"

namespace fjump {

struct ProtocolSchedule {
    double t_pre = 0.0;            // optical hold before release, s
    double t_d = 0.0;              // dark evolution, s
    double t_post = 760e-6;        // recapture record window, s
    double trigger_jitter = 2e-6;  // per-shot uniform [0, trigger_jitter] DAQ delay, s
    double fixed_delay = 1.5e-6;   // switch latency plus residual fixed lag, s
    double rf_phase0 = 0.0;        // drive phase at release, rad
    double escape_radius = 300e-9; // dark-phase capture range along u and v, m

    void validate() const {
        if (t_pre < 0.0 || t_d < 0.0 || t_post < 0.0)
            throw ConfigError("ProtocolSchedule: negative duration");
        if (trigger_jitter < 0.0 || fixed_delay < 0.0)
            throw ConfigError("ProtocolSchedule: negative delay");
        if (!(escape_radius > 0.0)) throw ConfigError("ProtocolSchedule: bad escape radius");
    }
};

// Uniformly sampled full-protocol record in the optical (x, y) frame,
// for debugging and CSV export.
struct Trajectory {
    double dt = 0.0;
    std::vector<std::array<double, 4>> samples;  // (x, y, xdot, ydot)
    std::size_t release_index = 0;
    std::size_t recapture_index = 0;
    std::uint64_t seed = 0;
    double trigger_delay = 0.0;
    double fixed_delay = 0.0;
};

// Lean per-shot output for ensembles: marker states plus the detector record.
struct ShotResult {
    std::array<double, 4> release_uv{};
    std::array<double, 4> recapture_uv{};
    std::array<double, 4> recapture_xy{};
    DetectorRecord record;  // phase (v) positions; empty in state-only mode
    double trigger_delay = 0.0;
    double fixed_delay = 0.0;
    std::uint64_t seed = 0;
};

struct EnsembleStats {
    double t_d = 0.0;
    std::vector<RetrodictedPoint> samples;
    double raw_var_u = 0.0;        // m^2
    double corrected_var_u = 0.0;  // m^2, after noise subtraction, clamped at 0
    double noise_var = 0.0;        // m^2, subtracted estimate
    double du = 0.0;               // m
    double bootstrap_err = 0.0;    // m
    bool clamped = false;
    int n_shots = 0;     // retained shots
    int n_excluded = 0;  // recapture failures
};

inline std::array<double, 4> sample_initial_state(const ThermalInit& init,
                                                  const ParticleParams& part,
                                                  const OpticalTrap& opt, Rng& rng) {
    const double kx = constants::k_B * init.T_x / part.mass;
    const double ky = constants::k_B * init.T_y / part.mass;
    const double sx = std::sqrt(kx) / opt.omega_x;
    const double sy = std::sqrt(ky) / opt.omega_y;
    return {sx * rng.normal(), sy * rng.normal(), std::sqrt(kx) * rng.normal(),
            std::sqrt(ky) * rng.normal()};
}

// One semi-implicit Euler-Maruyama step for two independent axes with
// instantaneous stiffnesses w2a, w2b and per-axis thermal kick scales
// kick = sqrt(2 gamma k_B T / m * dt). Velocity first, then position.
inline void step_langevin(std::array<double, 4>& s, double dt, double w2a, double w2b,
                          double gamma, double kick_a, double kick_b, Rng& rng) {
    s[2] += dt * (-w2a * s[0] - gamma * s[2]) + kick_a * rng.normal();
    s[3] += dt * (-w2b * s[1] - gamma * s[3]) + kick_b * rng.normal();
    s[0] += dt * s[2];
    s[1] += dt * s[3];
}

// Production stepper: velocity-Verlet for the conservative part (second-order
// micromotion phase accuracy) followed by an exact Ornstein-Uhlenbeck
// friction/noise substep. ou_decay = exp(-gamma dt), ou_kick_* =
// sqrt((1 - ou_decay^2) k_B T / m). Draw order is fixed: axis a, then b.
inline void step_verlet_ou(std::array<double, 4>& s, double dt, double w2a_0, double w2b_0,
                           double w2a_1, double w2b_1, double ou_decay, double ou_kick_a,
                           double ou_kick_b, Rng& rng) {
    s[2] += 0.5 * dt * (-w2a_0 * s[0]);
    s[3] += 0.5 * dt * (-w2b_0 * s[1]);
    s[0] += dt * s[2];
    s[1] += dt * s[3];
    s[2] += 0.5 * dt * (-w2a_1 * s[0]);
    s[3] += 0.5 * dt * (-w2b_1 * s[1]);
    s[2] = ou_decay * s[2] + ou_kick_a * rng.normal();
    s[3] = ou_decay * s[3] + ou_kick_b * rng.normal();
}

namespace detail {

struct PhaseGrid {
    int steps = 0;
    double dt = 0.0;
};

// Integer step count with dt at or below the resolution bound, dividing the
// duration exactly.
inline PhaseGrid phase_grid(double duration, double dt_bound) {
    if (duration <= 0.0) return {0, dt_bound};
    const int n = std::max(1, static_cast<int>(std::ceil(duration / dt_bound - 1e-9)));
    return {n, duration / n};
}

inline double optical_dt_bound(const OpticalTrap& opt) {
    return constants::two_pi / std::max(opt.omega_x, opt.omega_y) / 200.0;
}

inline double dark_dt_bound(const PaulTrap& paul) {
    const bool driven = paul.q_u != 0.0;
    const double t_char =
        driven ? constants::two_pi / paul.omega_rf : constants::two_pi / paul.omega_p;
    return t_char / 200.0;
}

template <typename Sink>
void integrate_optical(std::array<double, 4>& s, const PhaseGrid& g, const OpticalTrap& opt,
                       const ParticleParams& part, double T_a, double T_b, Rng& rng,
                       Sink&& sink) {
    const double w2x = opt.omega_x * opt.omega_x;
    const double w2y = opt.omega_y * opt.omega_y;
    const double decay = std::exp(-part.gamma * g.dt);
    const double var_scale = (1.0 - decay * decay) * constants::k_B / part.mass;
    const double ka = std::sqrt(var_scale * T_a);
    const double kb = std::sqrt(var_scale * T_b);
    for (int i = 0; i < g.steps; ++i) {
        step_verlet_ou(s, g.dt, w2x, w2y, w2x, w2y, decay, ka, kb, rng);
        sink(i, s);
    }
}

// Dark phase in the uv frame. Time-dependent Mathieu stiffness; rf_phase0 is
// the drive phase at the release instant t = 0 (from the schedule, so per-shot
// phase variation is possible).
template <typename Sink>
void integrate_dark(std::array<double, 4>& s, const PhaseGrid& g, const PaulTrap& paul,
                    double rf_phase0, const ParticleParams& part, double escape_radius,
                    Rng& rng, Sink&& sink) {
    const double pref = 0.25 * paul.omega_rf * paul.omega_rf;
    const double decay = std::exp(-part.gamma * g.dt);
    const double k =
        std::sqrt((1.0 - decay * decay) * constants::k_B * part.T_bath / part.mass);
    const double a_v = paul.a_v, q_v = paul.q_v;
    double c0 = std::cos(rf_phase0);
    for (int i = 0; i < g.steps; ++i) {
        const double c1 =
            std::cos(paul.omega_rf * (static_cast<double>(i + 1) * g.dt) + rf_phase0);
        const double w2u_0 = pref * (paul.a_u - 2.0 * paul.q_u * c0);
        const double w2v_0 = pref * (a_v - 2.0 * q_v * c0);
        const double w2u_1 = pref * (paul.a_u - 2.0 * paul.q_u * c1);
        const double w2v_1 = pref * (a_v - 2.0 * q_v * c1);
        step_verlet_ou(s, g.dt, w2u_0, w2v_0, w2u_1, w2v_1, decay, k, k, rng);
        c0 = c1;
        if (std::abs(s[0]) > escape_radius || std::abs(s[1]) > escape_radius)
            throw RecaptureFailure("dark-phase excursion beyond the capture range");
        sink(i, s);
    }
}

}  // namespace detail

enum class RecordMode { none, recapture };

// One protocol realization. The initial state is an exact thermal draw; the
// optional pre-window holds it stationary against a bath at the feedback
// temperatures. Trap switching is instantaneous.
inline ShotResult run_shot(const ProtocolSchedule& sched, const ThermalInit& init,
                           const ParticleParams& part, const OpticalTrap& opt,
                           const PaulTrap& paul, std::uint64_t seed,
                           RecordMode mode = RecordMode::none) {
    sched.validate();
    Rng rng(seed);
    ShotResult out;
    out.seed = seed;
    out.trigger_delay = sched.trigger_jitter > 0.0 ? rng.uniform(0.0, sched.trigger_jitter) : 0.0;
    out.fixed_delay = sched.fixed_delay;

    std::array<double, 4> s = sample_initial_state(init, part, opt, rng);
    auto nothing = [](int, const std::array<double, 4>&) {};

    if (sched.t_pre > 0.0) {
        const auto g = detail::phase_grid(sched.t_pre, detail::optical_dt_bound(opt));
        detail::integrate_optical(s, g, opt, part, init.T_x, init.T_y, rng, nothing);
    }

    std::array<double, 4> uv = xy_to_uv(s);
    out.release_uv = uv;
    if (sched.t_d > 0.0) {
        const auto g = detail::phase_grid(sched.t_d, detail::dark_dt_bound(paul));
        detail::integrate_dark(uv, g, paul, sched.rf_phase0, part, sched.escape_radius, rng, nothing);
    }
    out.recapture_uv = uv;
    s = uv_to_xy(uv);
    out.recapture_xy = s;

    if (sched.t_post > 0.0) {
        const auto g = detail::phase_grid(sched.t_post, detail::optical_dt_bound(opt));
        if (mode == RecordMode::recapture) {
            out.record.dt = g.dt;
            out.record.t0 = sched.t_d;
            out.record.x.resize(static_cast<std::size_t>(g.steps) + 1);
            out.record.y.resize(static_cast<std::size_t>(g.steps) + 1);
            out.record.x[0] = s[0];
            out.record.y[0] = s[1];
            detail::integrate_optical(s, g, opt, part, part.T_bath, part.T_bath, rng,
                                      [&](int i, const std::array<double, 4>& st) {
                                          out.record.x[static_cast<std::size_t>(i) + 1] = st[0];
                                          out.record.y[static_cast<std::size_t>(i) + 1] = st[1];
                                      });
        } else {
            detail::integrate_optical(s, g, opt, part, part.T_bath, part.T_bath, rng, nothing);
        }
    }
    return out;
}

// Full uniform-grid record of all phases in the xy frame (debug / export).
// The grid uses the finest phase resolution; phase durations are snapped to
// whole steps.
inline Trajectory run_protocol(const ProtocolSchedule& sched, const ThermalInit& init,
                               const ParticleParams& part, const OpticalTrap& opt,
                               const PaulTrap& paul, std::uint64_t seed) {
    sched.validate();
    Rng rng(seed);
    Trajectory traj;
    traj.seed = seed;
    traj.trigger_delay = sched.trigger_jitter > 0.0 ? rng.uniform(0.0, sched.trigger_jitter) : 0.0;
    traj.fixed_delay = sched.fixed_delay;

    const double dt = std::min(detail::optical_dt_bound(opt),
                               sched.t_d > 0.0 ? detail::dark_dt_bound(paul)
                                               : detail::optical_dt_bound(opt));
    traj.dt = dt;
    const int n_pre = static_cast<int>(std::llround(sched.t_pre / dt));
    const int n_dark = static_cast<int>(std::llround(sched.t_d / dt));
    const int n_post = static_cast<int>(std::llround(sched.t_post / dt));

    std::array<double, 4> s = sample_initial_state(init, part, opt, rng);
    traj.samples.reserve(static_cast<std::size_t>(n_pre + n_dark + n_post) + 1);
    traj.samples.push_back(s);

    detail::PhaseGrid g{n_pre, dt};
    detail::integrate_optical(s, g, opt, part, init.T_x, init.T_y, rng,
                              [&](int, const std::array<double, 4>& st) {
                                  traj.samples.push_back(st);
                              });
    traj.release_index = traj.samples.size() - 1;

    std::array<double, 4> uv = xy_to_uv(s);
    g = detail::PhaseGrid{n_dark, dt};
    detail::integrate_dark(uv, g, paul, sched.rf_phase0, part, sched.escape_radius, rng,
                           [&](int, const std::array<double, 4>& st) {
                               traj.samples.push_back(uv_to_xy(st));
                           });
    traj.recapture_index = traj.samples.size() - 1;
    s = uv_to_xy(uv);

    g = detail::PhaseGrid{n_post, dt};
    detail::integrate_optical(s, g, opt, part, part.T_bath, part.T_bath, rng,
                              [&](int, const std::array<double, 4>& st) {
                                  traj.samples.push_back(st);
                              });
    return traj;
}

// ---------------------------------------------------------------------------
// Ensembles through the measurement pipeline.

struct PipelineConfig {
    bool retrodict = true;        // false: read simulator states directly
    double bandwidth_hz = 2000.0;
    double discard = 120e-6;
    double noise_floor_target = 2.5e-18;  // post-demodulation noise on u, m^2
    double f_offtone_hz = 250e3;
    int bootstrap_n = 1000;
    bool estimate_frequency = false;  // per-shot tone estimation instead of known frequencies
    bool subtract_noise = true;
};

namespace detail {

// Oscillation frequency of the discrete Verlet map: the synthetic tone sits
// at acos(1 - (w dt)^2 / 2) / dt rather than at w. The demodulator tracks the
// actual signal, mirroring the per-shot frequency adjustment a real pipeline
// performs against trap-frequency drift.
inline double effective_tone_frequency(double omega, double dt) {
    const double x = omega * dt;
    return std::acos(1.0 - 0.5 * x * x) / dt;
}

// Raw per-sample channel noise whose post-demodulation variance matches the
// configured noise floor.
inline double raw_noise_for_target(const PipelineConfig& pc, double dt, double omega_mode) {
    if (pc.noise_floor_target <= 0.0) return 0.0;
    const int n_sync =
        std::max(1, static_cast<int>(std::llround(constants::two_pi / omega_mode / dt)));
    return pc.noise_floor_target / filter_noise_gain(pc.bandwidth_hz, dt, n_sync);
}

struct ShotPoint {
    RetrodictedPoint point;
    double noise_estimate = 0.0;  // per-shot off-tone floor on u, m^2
    bool excluded = false;
};

inline ShotPoint process_shot(const ProtocolSchedule& sched, const ThermalInit& init,
                              const ParticleParams& part, const OpticalTrap& opt,
                              const PaulTrap& paul, const PipelineConfig& pc,
                              std::uint64_t seed) {
    ShotPoint sp;
    ShotResult shot;
    try {
        shot = run_shot(sched, init, part, opt, paul, seed,
                        pc.retrodict ? RecordMode::recapture : RecordMode::none);
    } catch (const RecaptureFailure&) {
        sp.excluded = true;
        return sp;
    }

    if (!pc.retrodict) {
        sp.point = RetrodictedPoint{shot.recapture_uv[0], shot.recapture_uv[2], sched.t_d,
                                    shot.trigger_delay, shot.fixed_delay};
        return sp;
    }

    auto& rec = shot.record;
    Rng noise_rng(derive_seed(seed, 0x0d10, 7));
    const double raw_x = raw_noise_for_target(pc, rec.dt, opt.omega_x);
    const double raw_y = raw_noise_for_target(pc, rec.dt, opt.omega_y);
    add_detector_noise(rec.x, raw_x, noise_rng);
    add_detector_noise(rec.y, raw_y, noise_rng);
    rec.noise_var = 0.5 * (raw_x + raw_y);

    // The acquisition timebase lags the protocol by the per-shot delays: the
    // pipeline retrodicts to the apparent recapture time and the delay
    // correction rotates the point back.
    const double delay = shot.trigger_delay + shot.fixed_delay;
    const double t_ref = sched.t_d - delay;

    const std::size_t skip =
        static_cast<std::size_t>(std::ceil((pc.discard - delay) / rec.dt));
    if (skip + 64 > rec.x.size())
        throw WindowTooShort("process_shot: recapture record shorter than the discard window");
    const double t0 = rec.t0 + static_cast<double>(skip) * rec.dt;
    std::span<const double> wx(rec.x.data() + skip, rec.x.size() - skip);
    std::span<const double> wy(rec.y.data() + skip, rec.y.size() - skip);

    double fx = effective_tone_frequency(opt.omega_x, rec.dt);
    double fy = effective_tone_frequency(opt.omega_y, rec.dt);
    if (pc.estimate_frequency) {
        try {
            fx = estimate_tone_frequency(wx, rec.dt);
        } catch (const NoTone&) {}
        try {
            fy = estimate_tone_frequency(wy, rec.dt);
        } catch (const NoTone&) {}
    }

    const auto [ix, qx] = demodulate_retrodict(wx, t0, rec.dt, fx, pc.bandwidth_hz, t_ref,
                                               pc.discard - delay);
    const auto [iy, qy] = demodulate_retrodict(wy, t0, rec.dt, fy, pc.bandwidth_hz, t_ref,
                                               pc.discard - delay);

    RetrodictedPoint px{ix, fx * qx, sched.t_d, shot.trigger_delay, shot.fixed_delay};
    RetrodictedPoint py{iy, fy * qy, sched.t_d, shot.trigger_delay, shot.fixed_delay};
    px = delay_correct(px, fx, shot.trigger_delay, shot.fixed_delay);
    py = delay_correct(py, fy, shot.trigger_delay, shot.fixed_delay);

    // rotate the reconstructed (x, xdot, y, ydot) into the Paul-trap frame
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    sp.point = RetrodictedPoint{inv_sqrt2 * (px.u + py.u), inv_sqrt2 * (px.u_dot + py.u_dot),
                                sched.t_d, shot.trigger_delay, shot.fixed_delay};

    const double w_off = constants::two_pi * pc.f_offtone_hz;
    const int sync_x =
        std::max(1, static_cast<int>(std::llround(constants::two_pi / fx / rec.dt)));
    const int sync_y =
        std::max(1, static_cast<int>(std::llround(constants::two_pi / fy / rec.dt)));
    sp.noise_estimate = 0.5 * (noise_floor(wx, t0, rec.dt, w_off, pc.bandwidth_hz, sync_x) +
                               noise_floor(wy, t0, rec.dt, w_off, pc.bandwidth_hz, sync_y));
    return sp;
}

}  // namespace detail

// n_shots realizations at one dark time; shots run concurrently, aggregation
// is by shot index so results do not depend on the thread count.
inline EnsembleStats run_ensemble_point(const ProtocolSchedule& sched, const ThermalInit& init,
                                        const ParticleParams& part, const OpticalTrap& opt,
                                        const PaulTrap& paul, const PipelineConfig& pc,
                                        int n_shots, std::uint64_t base_seed,
                                        std::uint64_t point_domain, int threads = 1) {
    if (n_shots < 2) throw ConfigError("run_ensemble_point: n_shots must be >= 2");
    std::vector<detail::ShotPoint> shots(static_cast<std::size_t>(n_shots));
    const int n_workers = std::max(1, threads);

    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex err_mutex;
    auto worker = [&]() {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= n_shots) return;
            try {
                shots[static_cast<std::size_t>(i)] =
                    detail::process_shot(sched, init, part, opt, paul, pc,
                                         derive_seed(base_seed, static_cast<std::uint64_t>(i),
                                                     point_domain));
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_workers));
        for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    EnsembleStats st;
    st.t_d = sched.t_d;
    std::vector<double> us;
    double noise_acc = 0.0;
    for (const auto& sp : shots) {
        if (sp.excluded) {
            st.n_excluded++;
            continue;
        }
        st.samples.push_back(sp.point);
        us.push_back(sp.point.u);
        noise_acc += sp.noise_estimate;
    }
    st.n_shots = static_cast<int>(st.samples.size());
    if (st.n_shots < 2) throw ConfigError("run_ensemble_point: fewer than 2 shots survived");

    st.raw_var_u = variance(us);
    st.noise_var = pc.subtract_noise && pc.retrodict
                       ? noise_acc / static_cast<double>(st.n_shots)
                       : 0.0;
    st.clamped = st.raw_var_u < st.noise_var;
    st.corrected_var_u = std::max(st.raw_var_u - st.noise_var, 0.0);
    st.du = std::sqrt(st.corrected_var_u);
    const double nv = st.noise_var;
    auto stat = [nv](std::span<const double> xs) {
        return std::sqrt(std::max(variance(xs) - nv, 0.0));
    };
    st.bootstrap_err =
        bootstrap_se(us, stat, pc.bootstrap_n, derive_seed(base_seed, point_domain, 11));
    return st;
}

inline std::vector<EnsembleStats> run_ensemble(const std::vector<double>& t_d_values,
                                               ProtocolSchedule sched, const ThermalInit& init,
                                               const ParticleParams& part, const OpticalTrap& opt,
                                               const PaulTrap& paul, const PipelineConfig& pc,
                                               int n_shots, std::uint64_t base_seed,
                                               int threads = 1) {
    std::vector<EnsembleStats> out;
    out.reserve(t_d_values.size());
    for (std::size_t k = 0; k < t_d_values.size(); ++k) {
        sched.t_d = t_d_values[k];
        out.push_back(run_ensemble_point(sched, init, part, opt, paul, pc, n_shots, base_seed,
                                         static_cast<std::uint64_t>(k) + 1, threads));
    }
    return out;
}

}  // namespace fjump
