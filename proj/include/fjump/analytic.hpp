#pragma once

// Simplified frequency-jump model: the dark potential treated as a static
// harmonic trap at the secular frequency omega_p. Variances are the working
// currency; standard deviations appear only at reporting boundaries.

#include <cmath>

#include "fjump/constants.hpp"
#include "fjump/covariance.hpp"
#include "fjump/errors.hpp"

namespace fjump {

// Var_c(t) = du0^2 cos^2(w_p t) + r^2 (dv0/w_o)^2 sin^2(w_p t),  r = w_o/w_p
inline double coherent_variance(double t, double du0, double dv0, double omega_o,
                                double omega_p) {
    if (!(omega_p > 0.0)) throw ConfigError("coherent_variance: omega_p must be positive");
    const double r = omega_o / omega_p;
    const double c = std::cos(omega_p * t), s = std::sin(omega_p * t);
    const double vel = r * dv0 / omega_o;
    return du0 * du0 * c * c + vel * vel * s * s;
}

// Var_h(t) = r^2 (hbar Gamma / m w_o) (t - sin(2 w_p t) / (2 w_p)),
// non-decreasing with zero slope at t = 0.
inline double heating_variance(double t, double r, double Gamma, double mass, double omega_o,
                               double omega_p) {
    if (t < 0.0) throw ConfigError("heating_variance: t < 0");
    return r * r * constants::hbar * Gamma / (mass * omega_o) *
           (t - std::sin(2.0 * omega_p * t) / (2.0 * omega_p));
}

inline double total_variance_simple(double t, const ThermalInit& init,
                                    const ParticleParams& part, const OpticalTrap& opt,
                                    const PaulTrap& paul) {
    const double r = opt.omega_u_eff / paul.omega_p;
    return coherent_variance(t, init.du0, init.dv0, opt.omega_u_eff, paul.omega_p) +
           heating_variance(t, r, part.Gamma_heat, part.mass, opt.omega_u_eff, paul.omega_p);
}

// Var(T_p/2) = du0^2 + r^2 (hbar Gamma / m w_o) T_p/2: the coherent term has
// returned to its initial value and only heating remains.
inline double compression_time_variance(const ThermalInit& init, const ParticleParams& part,
                                        const OpticalTrap& opt, const PaulTrap& paul) {
    const double r = opt.omega_u_eff / paul.omega_p;
    const double half_tp = constants::pi / paul.omega_p;
    return init.du0 * init.du0 +
           r * r * constants::hbar * part.Gamma_heat / (part.mass * opt.omega_u_eff) * half_tp;
}

}  // namespace fjump
