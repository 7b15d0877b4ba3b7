#pragma once

#include <cmath>
#include <limits>
#include <tuple>

#include "fjump/constants.hpp"
#include "fjump/errors.hpp"
#include "fjump/floquet.hpp"

namespace fjump {

// Particle and bath. All SI. Mass is derived from diameter and density.
struct ParticleParams {
    double diameter = 0.0;     // m
    double density = 0.0;      // kg/m^3
    double mass = 0.0;         // kg
    int n_charges = 1;         // elementary charges
    double gamma = 0.0;        // gas damping rate, rad/s
    double T_bath = 0.0;       // gas temperature, K
    double Gamma_heat = 0.0;   // heating rate in phonons of the optical potential, rad/s
};

struct OpticalTrap {
    double omega_x = 0.0;      // rad/s
    double omega_y = 0.0;      // rad/s
    double omega_u_eff = 0.0;  // rad/s, sqrt((wx^2 + wy^2)/2)
};

struct PaulTrap {
    double omega_rf = 0.0;   // RF drive angular frequency, rad/s
    double a_u = 0.0;        // Mathieu DC parameter
    double q_u = 0.0;        // Mathieu RF parameter
    double a_v = 0.0;        // v axis; defaults to (a_u, -q_u): opposite-phase pair
    double q_v = 0.0;
    double beta = 0.0;       // characteristic exponent of the u axis, derived
    double omega_p = 0.0;    // secular angular frequency = beta * omega_rf / 2
    double rf_phase0 = 0.0;  // drive phase at protocol t = 0, rad
};

struct FrequencyRatio {
    double r = 0.0;  // omega_u_eff / omega_p
};

inline OpticalTrap make_optical_trap(double omega_x, double omega_y) {
    if (!(omega_x > 0.0) || !(omega_y > 0.0))
        throw ConfigError("make_optical_trap: frequencies must be positive");
    return OpticalTrap{omega_x, omega_y,
                       std::sqrt(0.5 * (omega_x * omega_x + omega_y * omega_y))};
}

inline PaulTrap make_paul_trap(double omega_rf, double a_u, double q_u, double rf_phase0 = 0.0,
                               double a_v = std::numeric_limits<double>::quiet_NaN(),
                               double q_v = std::numeric_limits<double>::quiet_NaN()) {
    if (!(omega_rf > 0.0)) throw ConfigError("make_paul_trap: omega_rf must be positive");
    PaulTrap p;
    p.omega_rf = omega_rf;
    p.a_u = a_u;
    p.q_u = q_u;
    p.a_v = std::isnan(a_v) ? a_u : a_v;
    p.q_v = std::isnan(q_v) ? -q_u : q_v;
    p.rf_phase0 = rf_phase0;
    p.beta = characteristic_exponent(a_u, q_u);  // throws UnstableMathieu outside region
    p.omega_p = 0.5 * p.beta * omega_rf;
    if (p.q_v != 0.0 || p.a_v != 0.0)
        (void)characteristic_exponent(p.a_v, p.q_v);  // v axis must be stable too
    return p;
}

inline FrequencyRatio frequency_ratio(const OpticalTrap& opt, const PaulTrap& paul) {
    return FrequencyRatio{opt.omega_u_eff / paul.omega_p};
}

// Gas-dominated heating: Gamma = gamma k_B T / (hbar omega_o). The pair
// (gamma, Gamma_heat) is kept consistent through these builders; pass an
// explicit override only when modeling a non-gas-dominated source.
inline double heating_rate_from_damping(double gamma, double T_bath, double omega_o) {
    return gamma * constants::k_B * T_bath / (constants::hbar * omega_o);
}

inline double damping_from_heating_rate(double Gamma_heat, double T_bath, double omega_o) {
    return Gamma_heat * constants::hbar * omega_o / (constants::k_B * T_bath);
}

inline double sphere_mass(double diameter, double density) {
    return density * (constants::pi / 6.0) * diameter * diameter * diameter;
}

inline ParticleParams make_particle(double diameter, double density, int n_charges,
                                    double T_bath, double gamma, const OpticalTrap& opt,
                                    double Gamma_heat_override = -1.0) {
    if (!(diameter > 0.0) || !(density > 0.0)) throw ConfigError("make_particle: bad geometry");
    if (!(T_bath > 0.0)) throw ConfigError("make_particle: T_bath must be positive");
    if (gamma < 0.0) throw ConfigError("make_particle: gamma must be >= 0");
    ParticleParams p;
    p.diameter = diameter;
    p.density = density;
    p.mass = sphere_mass(diameter, density);
    p.n_charges = n_charges;
    p.gamma = gamma;
    p.T_bath = T_bath;
    p.Gamma_heat = Gamma_heat_override >= 0.0
                       ? Gamma_heat_override
                       : heating_rate_from_damping(gamma, T_bath, opt.omega_u_eff);
    return p;
}

inline ParticleParams make_particle_from_heating(double diameter, double density, int n_charges,
                                                 double T_bath, double Gamma_heat,
                                                 const OpticalTrap& opt) {
    ParticleParams p = make_particle(diameter, density, n_charges, T_bath,
                                     damping_from_heating_rate(Gamma_heat, T_bath, opt.omega_u_eff),
                                     opt, Gamma_heat);
    return p;
}

// a_u = 4 n_e e phi''_dc / (m Omega^2),  q_u = 2 n_e e phi''_rf / (m Omega^2)
inline std::pair<double, double> derive_mathieu_params(int n_e, double mass, double omega_rf,
                                                       double d2phi_dc, double d2phi_rf) {
    if (!(mass > 0.0)) throw ConfigError("derive_mathieu_params: mass must be positive");
    if (!(omega_rf > 0.0)) throw ConfigError("derive_mathieu_params: omega_rf must be positive");
    if (!std::isfinite(d2phi_dc) || !std::isfinite(d2phi_rf))
        throw ConfigError("derive_mathieu_params: non-finite potential curvature");
    const double scale = n_e * constants::elementary_charge / (mass * omega_rf * omega_rf);
    return {4.0 * scale * d2phi_dc, 2.0 * scale * d2phi_rf};
}

// Operating point used throughout: 177 nm silica sphere (1850 kg/m^3),
// optical modes 2pi x (44, 58) kHz, RF drive 2pi x 33 kHz with the in-plane
// secular mode at 2pi x 6 kHz, heating rate 2pi x 926 kHz at 293 K ambient.
// The endcap (DC) curvature is neglected in-plane: a_u = 0.
inline std::tuple<ParticleParams, OpticalTrap, PaulTrap> default_paper_params() {
    const OpticalTrap opt =
        make_optical_trap(constants::two_pi * 44e3, constants::two_pi * 58e3);
    const double beta_target = 2.0 * (constants::two_pi * 6e3) / (constants::two_pi * 33e3);
    const double q = mathieu_q_for_beta(0.0, beta_target);
    const PaulTrap paul = make_paul_trap(constants::two_pi * 33e3, 0.0, q, 0.0);
    const ParticleParams part = make_particle_from_heating(
        177e-9, 1850.0, 1, 293.0, constants::two_pi * 926e3, opt);
    return {part, opt, paul};
}

}  // namespace fjump
