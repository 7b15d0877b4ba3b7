#pragma once

// Thermal states of the two in-plane optical modes and the 45-degree change
// of basis between the optical (x, y) and Paul-trap (u, v) axes:
//
//   x = (u + v)/sqrt(2),  y = (u - v)/sqrt(2)   (and the same for velocities)
//
// A product thermal state at (T_x, T_y) becomes correlated in the rotated
// frame; positions and velocities stay mutually uncorrelated.

#include <array>
#include <cmath>

#include "fjump/constants.hpp"
#include "fjump/errors.hpp"
#include "fjump/params.hpp"

namespace fjump {

// Mean and covariance over (u, v, u_dot, v_dot) -- or (x, y, x_dot, y_dot)
// when used in the optical frame; ordering is positional.
struct GaussianState4 {
    std::array<double, 4> mean{0.0, 0.0, 0.0, 0.0};
    std::array<std::array<double, 4>, 4> cov{};

    double& c(int i, int j) { return cov[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]; }
    double c(int i, int j) const {
        return cov[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
};

// Effective feedback-cooled mode temperatures and the derived state size at
// release. Single-temperature construction applies T_CoM to both axes.
//
// Note: dv0/(omega_u_eff * du0) is bounded between omega_x/omega_u_eff and
// omega_y/omega_u_eff for positive temperatures (0.855 .. 1.127 at the default
// frequencies); equal temperatures give 2 wx wy / (wx^2 + wy^2) ~= 0.963.
// Smaller measured ratios therefore imply strongly unequal temperatures.
struct ThermalInit {
    double T_x = 0.0;  // K
    double T_y = 0.0;  // K
    double du0 = 0.0;  // m,   sqrt[(k_B/2m)(T_x/wx^2 + T_y/wy^2)]
    double dv0 = 0.0;  // m/s, sqrt[(k_B/2m)(T_x + T_y)]
};

inline ThermalInit make_thermal_init(double T_x, double T_y, const ParticleParams& part,
                                     const OpticalTrap& opt) {
    if (T_x < 0.0 || T_y < 0.0) throw ConfigError("make_thermal_init: negative temperature");
    ThermalInit t;
    t.T_x = T_x;
    t.T_y = T_y;
    const double k2m = constants::k_B / (2.0 * part.mass);
    t.du0 = std::sqrt(k2m * (T_x / (opt.omega_x * opt.omega_x) + T_y / (opt.omega_y * opt.omega_y)));
    t.dv0 = std::sqrt(k2m * (T_x + T_y));
    return t;
}

inline ThermalInit make_thermal_init(double T_com, const ParticleParams& part,
                                     const OpticalTrap& opt) {
    return make_thermal_init(T_com, T_com, part, opt);
}

// Zero-mean thermal state in the rotated (u, v) basis. Position block Sigma_q
// and velocity block Sigma_p; position-velocity cross blocks vanish.
inline GaussianState4 rotate_covariance_45(double T_x, double T_y, double omega_x, double omega_y,
                                           double mass) {
    if (!(T_x > 0.0) || !(T_y > 0.0))
        throw ConfigError("rotate_covariance_45: temperatures must be positive");
    if (!(omega_x > 0.0) || !(omega_y > 0.0))
        throw ConfigError("rotate_covariance_45: frequencies must be positive");
    const double k2m = constants::k_B / (2.0 * mass);
    const double qx = T_x / (omega_x * omega_x), qy = T_y / (omega_y * omega_y);
    GaussianState4 s;
    s.c(0, 0) = s.c(1, 1) = k2m * (qx + qy);
    s.c(0, 1) = s.c(1, 0) = k2m * (qx - qy);
    s.c(2, 2) = s.c(3, 3) = k2m * (T_x + T_y);
    s.c(2, 3) = s.c(3, 2) = k2m * (T_x - T_y);
    return s;
}

// Point transforms between the two frames (orthogonal, self-inverse up to
// the sign of v).
inline std::array<double, 4> xy_to_uv(const std::array<double, 4>& xy) {
    const double s = 1.0 / std::sqrt(2.0);
    return {s * (xy[0] + xy[1]), s * (xy[0] - xy[1]), s * (xy[2] + xy[3]), s * (xy[2] - xy[3])};
}

inline std::array<double, 4> uv_to_xy(const std::array<double, 4>& uv) {
    const double s = 1.0 / std::sqrt(2.0);
    return {s * (uv[0] + uv[1]), s * (uv[0] - uv[1]), s * (uv[2] + uv[3]), s * (uv[2] - uv[3])};
}

}  // namespace fjump
