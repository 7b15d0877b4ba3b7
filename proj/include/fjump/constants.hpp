#pragma once

namespace fjump {

// CODATA 2018 (SI exact). Fixed at build time, never configurable.
namespace constants {
inline constexpr double k_B = 1.380649e-23;            // Boltzmann constant [J/K]
inline constexpr double hbar = 1.054571817e-34;        // reduced Planck constant [J s]
inline constexpr double elementary_charge = 1.602176634e-19;  // [C]
inline constexpr double pi = 3.141592653589793238462643383279502884;
inline constexpr double two_pi = 2.0 * pi;
}  // namespace constants

namespace units {
// SI internally; nm / us only at reporting boundaries.
inline constexpr double to_nm(double meters) { return meters * 1e9; }
inline constexpr double from_nm(double nm) { return nm * 1e-9; }
inline constexpr double to_us(double seconds) { return seconds * 1e6; }
inline constexpr double from_us(double us) { return us * 1e-6; }
}  // namespace units

}  // namespace fjump
