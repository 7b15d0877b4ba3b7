#pragma once

// Synthetic measurement pipeline: calibration, backward lock-in demodulation
// (retrodiction), delay correction, off-tone noise-floor estimation, state
// size with noise subtraction and bootstrap errors, 2-d histograms.
//
// Demodulator topology: mixer at the demodulation frequency, one synchronous
// (one-tone-period) moving average to null the 2f image, then a single-pole
// low-pass applied backwards in time. The white-noise gain of the chain has
// the closed form in filter_noise_gain(), which is what ties the injected
// per-sample noise level to the measured phase-space noise floor.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "fjump/constants.hpp"
#include "fjump/errors.hpp"
#include "fjump/rng.hpp"
#include "fjump/stats.hpp"

namespace fjump {

// Two-channel position record during the optical recapture window.
// t0 is the protocol time of sample 0 (the recapture instant).
struct DetectorRecord {
    double dt = 0.0;
    double t0 = 0.0;
    std::vector<double> x;  // meters (or volts before calibration)
    std::vector<double> y;
    double gain_x = 1.0;  // m/V; unity once calibrated
    double gain_y = 1.0;
    double noise_var = 0.0;  // per-sample white noise variance actually injected, m^2
};

struct RetrodictedPoint {
    double u = 0.0;      // m
    double u_dot = 0.0;  // m/s
    double t_d = 0.0;
    double trigger_delay = 0.0;
    double fixed_delay = 0.0;
};

// Equipartition calibration: volts-to-meters factor from a record of the
// particle in thermal equilibrium at T_gas.
inline double calibrate_gain(std::span<const double> record_volts, double mass, double omega,
                             double T_gas) {
    if (record_volts.size() < 1000)
        throw ConfigError("calibrate_gain: record too short for a 1% variance estimate");
    const double var_v = variance(record_volts);
    if (!(var_v > 0.0)) throw ConfigError("calibrate_gain: zero-variance record");
    const double var_m = constants::k_B * T_gas / (mass * omega * omega);
    return std::sqrt(var_m / var_v);
}

inline void add_detector_noise(std::vector<double>& trace, double noise_var, Rng& rng) {
    if (noise_var < 0.0) throw ConfigError("add_detector_noise: negative variance");
    if (noise_var == 0.0) return;
    const double sigma = std::sqrt(noise_var);
    for (auto& s : trace) s += sigma * rng.normal();
}

namespace detail {

// Radix-2 FFT, input zero-padded to a power of two by the caller.
inline void fft_inplace(std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * constants::pi / static_cast<double>(len);
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const auto u = a[i + k];
                const auto v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

}  // namespace detail

// Dominant-tone frequency by Hann-windowed FFT peak with 3-point parabolic
// interpolation on the log magnitude. Throws NoTone when the peak does not
// stand out of the noise background.
inline double estimate_tone_frequency(std::span<const double> trace, double dt,
                                      double min_snr = 10.0) {
    if (trace.size() < 64) throw ConfigError("estimate_tone_frequency: trace too short");
    std::size_t nfft = 64;
    while (nfft < trace.size()) nfft <<= 1;
    std::vector<std::complex<double>> buf(nfft, {0.0, 0.0});
    const double n1 = static_cast<double>(trace.size() - 1);
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const double w = 0.5 - 0.5 * std::cos(constants::two_pi * static_cast<double>(i) / n1);
        buf[i] = {trace[i] * w, 0.0};
    }
    detail::fft_inplace(buf);

    const std::size_t half = nfft / 2;
    std::vector<double> mag(half, 0.0);
    for (std::size_t i = 0; i < half; ++i) mag[i] = std::abs(buf[i]);
    std::size_t peak = 1;
    for (std::size_t i = 2; i + 1 < half; ++i)
        if (mag[i] > mag[peak]) peak = i;

    std::vector<double> sorted(mag.begin() + 1, mag.end());
    std::sort(sorted.begin(), sorted.end());
    const double floor_mag = std::max(sorted[sorted.size() / 2], 1e-300);
    if (mag[peak] < min_snr * floor_mag)
        throw NoTone("estimate_tone_frequency: no tone above the noise background");

    const double lm = std::log(std::max(mag[peak - 1], 1e-300));
    const double l0 = std::log(mag[peak]);
    const double lp = std::log(std::max(mag[peak + 1], 1e-300));
    double delta = 0.5 * (lm - lp) / (lm - 2.0 * l0 + lp);
    if (!std::isfinite(delta) || std::abs(delta) > 0.5) delta = 0.0;
    const double bin_hz = 1.0 / (static_cast<double>(nfft) * dt);
    return constants::two_pi * (static_cast<double>(peak) + delta) * bin_hz;
}

// White-noise variance gain of the demodulation chain: per-sample input
// variance sigma^2 maps to sigma^2 * filter_noise_gain(...) on each of I, Q.
// Mixer doubles the variance (2 cos amplitude), the N-sample average and the
// single-pole recursion y = alpha x + (1-alpha) y combine with the triangular
// autocorrelation of the averaged stream.
inline double filter_noise_gain(double bandwidth_hz, double dt, int n_sync) {
    const double alpha = 1.0 - std::exp(-constants::two_pi * bandwidth_hz * dt);
    const double rho = 1.0 - alpha;
    const double base = alpha / (2.0 - alpha);
    const double n = static_cast<double>(n_sync);
    double corr = n;  // sum_{|l|<N} (N - |l|) rho^|l|
    double rl = 1.0;
    for (int l = 1; l < n_sync; ++l) {
        rl *= rho;
        corr += 2.0 * (n - static_cast<double>(l)) * rl;
    }
    return 2.0 * base * corr / (n * n);
}

namespace detail {

struct Demod {
    double i_out = 0.0;
    double q_out = 0.0;
};

// Mix, synchronous average, backward single-pole; returns the filtered I/Q
// at the first sample of the window (phase-referenced to t_ref).
inline Demod demod_backward(std::span<const double> trace, double t0, double dt, double omega_d,
                            double bandwidth_hz, double t_ref) {
    const int n_sync = std::max(1, static_cast<int>(std::llround(
                                        constants::two_pi / omega_d / dt)));
    if (trace.size() < static_cast<std::size_t>(4 * n_sync))
        throw WindowTooShort("demod_backward: window shorter than the synchronous filter");
    const std::size_t n_avg = trace.size() - static_cast<std::size_t>(n_sync) + 1;

    std::vector<double> zi(n_avg, 0.0), zq(n_avg, 0.0);
    // prefix sums of the mixed products
    double acc_i = 0.0, acc_q = 0.0;
    std::vector<double> pi(trace.size() + 1, 0.0), pq(trace.size() + 1, 0.0);
    for (std::size_t k = 0; k < trace.size(); ++k) {
        const double ph = omega_d * (t0 + static_cast<double>(k) * dt - t_ref);
        acc_i += 2.0 * trace[k] * std::cos(ph);
        acc_q += 2.0 * trace[k] * std::sin(ph);
        pi[k + 1] = acc_i;
        pq[k + 1] = acc_q;
    }
    for (std::size_t k = 0; k < n_avg; ++k) {
        zi[k] = (pi[k + n_sync] - pi[k]) / n_sync;
        zq[k] = (pq[k + n_sync] - pq[k]) / n_sync;
    }

    const double alpha = 1.0 - std::exp(-constants::two_pi * bandwidth_hz * dt);
    double yi = zi[n_avg - 1], yq = zq[n_avg - 1];
    for (std::size_t k = n_avg - 1; k-- > 0;) {
        yi = alpha * zi[k] + (1.0 - alpha) * yi;
        yq = alpha * zq[k] + (1.0 - alpha) * yq;
    }
    return Demod{yi, yq};
}

}  // namespace detail

// Backward-filtered I/Q of `trace` referenced to t_ref. The trace must start
// at least `discard` after t_ref (the retrodicted value may only use samples
// from the kept window) and must span several filter time constants.
// Returns (position, quadrature) in trace units; velocity = omega * Q.
inline std::pair<double, double> demodulate_retrodict(std::span<const double> trace, double t0,
                                                      double dt, double omega_d,
                                                      double bandwidth_hz, double t_ref,
                                                      double discard = 120e-6) {
    if (trace.size() < 8) throw WindowTooShort("demodulate_retrodict: empty window");
    if (t0 < t_ref + discard - 0.5 * dt)
        throw WindowTooShort("demodulate_retrodict: window begins inside the discard region");
    const double span = static_cast<double>(trace.size() - 1) * dt;
    const double tau_c = 1.0 / (constants::two_pi * bandwidth_hz);
    if (span < 6.0 * tau_c)
        throw WindowTooShort("demodulate_retrodict: window shorter than 6 filter time constants");
    const auto d = detail::demod_backward(trace, t0, dt, omega_d, bandwidth_hz, t_ref);
    return {d.i_out, d.q_out};
}

// Rotation of (u, u_dot/omega) undoing the timing delays: the apparent point
// retrodicted to the lagging acquisition timebase is the true recapture state
// rotated by -omega * delay in the optical trap.
inline RetrodictedPoint delay_correct(const RetrodictedPoint& p, double omega,
                                      double trigger_delay, double fixed_delay) {
    const double phi = omega * (trigger_delay + fixed_delay);
    const double c = std::cos(phi), s = std::sin(phi);
    const double w = p.u_dot / omega;
    RetrodictedPoint out = p;
    out.u = c * p.u + s * w;
    out.u_dot = omega * (-s * p.u + c * w);
    out.trigger_delay = trigger_delay;
    out.fixed_delay = fixed_delay;
    return out;
}

// Measurement-noise variance from a signal-free spectral window: mean of
// (I^2 + Q^2)/2 of the backward-demodulated stream at the off-tone frequency.
// Second moments about zero, so sample correlation does not bias it.
// n_sync_override pins the synchronous-average length to the on-tone chain
// being calibrated, so the off-tone measurement sees the same noise gain.
inline double noise_floor(std::span<const double> trace, double t0, double dt,
                          double omega_offtone, double bandwidth_hz,
                          int n_sync_override = 0) {
    const int n_sync = n_sync_override > 0
                           ? n_sync_override
                           : std::max(1, static_cast<int>(std::llround(
                                             constants::two_pi / omega_offtone / dt)));
    if (trace.size() < static_cast<std::size_t>(8 * n_sync))
        throw WindowTooShort("noise_floor: window too short");
    const std::size_t n_avg = trace.size() - static_cast<std::size_t>(n_sync) + 1;

    std::vector<double> zi(n_avg, 0.0), zq(n_avg, 0.0);
    double acc_i = 0.0, acc_q = 0.0;
    std::vector<double> pi(trace.size() + 1, 0.0), pq(trace.size() + 1, 0.0);
    for (std::size_t k = 0; k < trace.size(); ++k) {
        const double ph = omega_offtone * (t0 + static_cast<double>(k) * dt);
        acc_i += 2.0 * trace[k] * std::cos(ph);
        acc_q += 2.0 * trace[k] * std::sin(ph);
        pi[k + 1] = acc_i;
        pq[k + 1] = acc_q;
    }
    for (std::size_t k = 0; k < n_avg; ++k) {
        zi[k] = (pi[k + n_sync] - pi[k]) / n_sync;
        zq[k] = (pq[k + n_sync] - pq[k]) / n_sync;
    }
    const double alpha = 1.0 - std::exp(-constants::two_pi * bandwidth_hz * dt);
    double yi = zi[n_avg - 1], yq = zq[n_avg - 1];
    double acc = 0.0;
    std::size_t count = 0;
    // skip the filter settling tail (last ~5 time constants of the backward pass)
    const std::size_t settle =
        std::min(n_avg - 1, static_cast<std::size_t>(5.0 / (constants::two_pi * bandwidth_hz * dt)));
    for (std::size_t k = n_avg - 1; k-- > 0;) {
        yi = alpha * zi[k] + (1.0 - alpha) * yi;
        yq = alpha * zq[k] + (1.0 - alpha) * yq;
        if (n_avg - 1 - k > settle) {
            acc += 0.5 * (yi * yi + yq * yq);
            ++count;
        }
    }
    if (count == 0) throw WindowTooShort("noise_floor: nothing left after settling");
    return acc / static_cast<double>(count);
}

struct StateSize {
    double du = 0.0;       // m, after noise subtraction
    double err = 0.0;      // m, bootstrap standard error
    bool clamped = false;  // variance fell below the noise estimate
};

inline StateSize state_size(std::span<const double> u_points, double noise_var,
                            int bootstrap_n = 1000, std::uint64_t seed = 0x5eedb007) {
    if (u_points.size() < 2) throw ConfigError("state_size: need at least 2 points");
    const double raw = variance(u_points);
    StateSize out;
    out.clamped = raw < noise_var;
    out.du = std::sqrt(std::max(raw - noise_var, 0.0));
    auto stat = [noise_var](std::span<const double> xs) {
        return std::sqrt(std::max(variance(xs) - noise_var, 0.0));
    };
    out.err = bootstrap_se(u_points, stat, bootstrap_n, seed);
    return out;
}

// Counts on a grid centered at the origin; axes (u, u_dot/omega) so both are
// lengths and the paper-style 1 nm x 1 nm binning applies directly.
struct Histogram2D {
    double bin = 0.0;
    int nx = 0, ny = 0;       // grid extents: index ranges [-nx, nx] x [-ny, ny]
    std::vector<long> counts; // row-major, (2nx+1) x (2ny+1)

    long at(int ix, int iy) const {
        return counts[static_cast<std::size_t>((iy + ny) * (2 * nx + 1) + (ix + nx))];
    }
    long total() const {
        long t = 0;
        for (long c : counts) t += c;
        return t;
    }
};

inline Histogram2D histogram2d(std::span<const RetrodictedPoint> points, double omega,
                               double bin) {
    if (!(bin > 0.0)) throw ConfigError("histogram2d: bin must be positive");
    Histogram2D h;
    h.bin = bin;
    int nx = 1, ny = 1;
    for (const auto& p : points) {
        nx = std::max(nx, static_cast<int>(std::floor(std::abs(p.u) / bin)) + 1);
        ny = std::max(ny, static_cast<int>(std::floor(std::abs(p.u_dot / omega) / bin)) + 1);
    }
    h.nx = nx;
    h.ny = ny;
    h.counts.assign(static_cast<std::size_t>((2 * nx + 1) * (2 * ny + 1)), 0);
    for (const auto& p : points) {
        const int ix = static_cast<int>(std::llround(p.u / bin));
        const int iy = static_cast<int>(std::llround(p.u_dot / omega / bin));
        h.counts[static_cast<std::size_t>((iy + ny) * (2 * nx + 1) + (ix + nx))]++;
    }
    return h;
}

}  // namespace fjump
