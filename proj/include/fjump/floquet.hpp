#pragma once

// Mathieu oscillator in dimensionless time tau:
//
//   d^2u/dtau^2 + (a - 2 q cos(2 tau)) u = 0,        tau = (Omega t + phi_rf0) / 2
//
// Floquet pair for the first stability region (0 < beta < 1):
//
//   lambda1(tau) = sum_n C_2n cos((2n + beta) tau)
//   lambda2(tau) = sum_n C_2n sin((2n + beta) tau)
//
// Coefficients obey (a - (2n+beta)^2) C_2n = q (C_{2n-2} + C_{2n+2}) and are
// normalized to sum_n C_2n = 1, so lambda1(0) = 1 and lambda2(0) = 0.
// The physical-time conversion tau = (Omega t + phi)/2 happens only in
// tau_of_t(); everything else is written in tau.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "fjump/errors.hpp"

namespace fjump {

inline double tau_of_t(double t, double omega_rf, double rf_phase0 = 0.0) {
    return 0.5 * (omega_rf * t + rf_phase0);
}

// ---------------------------------------------------------------------------
// Monodromy of the homogeneous equation over one coefficient period [0, pi].

struct Monodromy {
    double m11, m12, m21, m22;
    double trace() const { return m11 + m22; }
    bool stable() const { return std::abs(trace()) < 2.0; }
};

namespace detail {

// RK4 on the 2-d system y'' = -(a - 2q cos 2tau) y, fixed step count.
inline void mathieu_rk4(double a, double q, double tau_end, int steps,
                        double& y, double& yp) {
    const double h = tau_end / steps;
    auto acc = [a, q](double tau, double u) { return -(a - 2.0 * q * std::cos(2.0 * tau)) * u; };
    double tau = 0.0;
    for (int i = 0; i < steps; ++i) {
        const double k1y = yp;
        const double k1v = acc(tau, y);
        const double k2y = yp + 0.5 * h * k1v;
        const double k2v = acc(tau + 0.5 * h, y + 0.5 * h * k1y);
        const double k3y = yp + 0.5 * h * k2v;
        const double k3v = acc(tau + 0.5 * h, y + 0.5 * h * k2y);
        const double k4y = yp + h * k3v;
        const double k4v = acc(tau + h, y + h * k3y);
        y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        yp += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        tau += h;
    }
}

}  // namespace detail

inline Monodromy monodromy_matrix(double a_u, double q_u, int steps = 4096) {
    if (!std::isfinite(a_u) || !std::isfinite(q_u))
        throw ConfigError("monodromy_matrix: non-finite Mathieu parameters");
    constexpr double pi = 3.141592653589793238462643383279502884;
    double y1 = 1.0, y1p = 0.0;
    double y2 = 0.0, y2p = 1.0;
    detail::mathieu_rk4(a_u, q_u, pi, steps, y1, y1p);
    detail::mathieu_rk4(a_u, q_u, pi, steps, y2, y2p);
    return Monodromy{y1, y2, y1p, y2p};
}

// Characteristic exponent straight from the monodromy eigenvalue phase.
// Numerically integrated, so this route is independent of the recurrence
// solution below; it doubles as the brute-force reference.
inline double characteristic_exponent_monodromy(double a_u, double q_u, int steps = 4096) {
    const Monodromy m = monodromy_matrix(a_u, q_u, steps);
    if (!m.stable())
        throw UnstableMathieu("characteristic_exponent_monodromy: |trace| >= 2");
    constexpr double pi = 3.141592653589793238462643383279502884;
    return std::acos(0.5 * m.trace()) / pi;  // in (0, 1) for the first region
}

namespace detail {

// Characteristic function of the three-term recurrence: F(beta) = 0 at the
// true exponent. Tails evaluated as continued fractions.
inline double mathieu_char_fn(double a, double q, double beta, int tail = 48) {
    auto d = [a, beta](int n) { return a - (2.0 * n + beta) * (2.0 * n + beta); };
    double rp = 0.0;  // q * C_{n+1}/C_n tail, descending
    for (int n = tail; n >= 1; --n) rp = q * q / (d(n) - rp);
    double rm = 0.0;
    for (int n = -tail; n <= -1; ++n) rm = q * q / (d(n) - rm);
    return d(0) - rp - rm;
}

}  // namespace detail

// Production exponent: monodromy gates stability and brackets the root, the
// recurrence characteristic function refines it to tol.
inline double characteristic_exponent(double a_u, double q_u, double tol = 1e-12) {
    const Monodromy m = monodromy_matrix(a_u, q_u);
    if (!m.stable())
        throw UnstableMathieu("characteristic_exponent: (a_u, q_u) outside first stability region");
    constexpr double pi = 3.141592653589793238462643383279502884;
    const double beta0 = std::acos(0.5 * m.trace()) / pi;
    if (q_u == 0.0) return beta0;  // exact: beta = sqrt(a)

    // Bracket around the monodromy estimate, expanding if needed.
    double lo = beta0, hi = beta0, flo = 0.0, fhi = 0.0;
    bool bracketed = false;
    for (double delta = 1e-6; delta < 0.5; delta *= 4.0) {
        lo = std::max(beta0 - delta, 1e-12);
        hi = std::min(beta0 + delta, 1.0 - 1e-12);
        flo = detail::mathieu_char_fn(a_u, q_u, lo);
        fhi = detail::mathieu_char_fn(a_u, q_u, hi);
        if (std::isfinite(flo) && std::isfinite(fhi) && flo * fhi <= 0.0) {
            bracketed = true;
            break;
        }
    }
    if (!bracketed)
        throw NoConvergence("characteristic_exponent: failed to bracket recurrence root");
    for (int it = 0; it < 200 && hi - lo > tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = detail::mathieu_char_fn(a_u, q_u, mid);
        if (!std::isfinite(fm)) throw NoConvergence("characteristic_exponent: non-finite refinement");
        if (flo * fm <= 0.0) {
            hi = mid;
            fhi = fm;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    return 0.5 * (lo + hi);
}

// Inverts beta(a, q) for q >= 0 in the first stability region (beta grows
// monotonically with q at fixed small |a|).
inline double mathieu_q_for_beta(double a_u, double beta_target, double tol = 1e-12) {
    if (beta_target <= 0.0 || beta_target >= 1.0)
        throw ConfigError("mathieu_q_for_beta: target outside (0, 1)");
    double lo = 0.0, hi = 0.05;
    auto beta_or_one = [a_u](double q) {
        try {
            return characteristic_exponent(a_u, q);
        } catch (const UnstableMathieu&) {
            return 1.0;
        }
    };
    while (beta_or_one(hi) < beta_target) {
        lo = hi;
        hi *= 1.5;
        if (hi > 3.0) throw NoConvergence("mathieu_q_for_beta: no q in the first region");
    }
    while (hi - lo > tol * std::max(1.0, hi)) {
        const double mid = 0.5 * (lo + hi);
        (beta_or_one(mid) < beta_target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Floquet coefficients and evaluators.

struct FloquetSolution {
    double a = 0.0;
    double q = 0.0;
    double beta = 0.0;
    int n_max = 0;
    std::vector<double> coeffs;  // C_{2n}, n = -n_max .. n_max, sum = 1

    double coeff(int n) const { return coeffs[static_cast<std::size_t>(n + n_max)]; }

    // W = sum_n (2n + beta) C_2n^2; equals the dynamical Wronskian
    // lambda1 lambda2' - lambda1' lambda2 for converged coefficients.
    double wronskian() const {
        double w = 0.0;
        for (int n = -n_max; n <= n_max; ++n) w += (2.0 * n + beta) * coeff(n) * coeff(n);
        return w;
    }

    double secular_frequency(double omega_rf) const { return 0.5 * beta * omega_rf; }
};

// Solves the three-term recurrence by backward (tail) ratio recursion and
// normalizes to sum C_2n = 1. n_max = 1 instead uses the first-order closure
// C_{+-2} = -q / (4 +- 4 beta); that truncation does not satisfy the
// recurrence exactly and is exempt from the residual guard.
inline FloquetSolution floquet_coefficients(double a_u, double q_u, double beta, int n_max) {
    if (n_max < 0) throw ConfigError("floquet_coefficients: n_max must be >= 0");
    if (!(beta > 0.0 && beta < 1.0))
        throw ConfigError("floquet_coefficients: beta outside (0, 1)");

    FloquetSolution sol;
    sol.a = a_u;
    sol.q = q_u;
    sol.beta = beta;
    sol.n_max = n_max;
    sol.coeffs.assign(static_cast<std::size_t>(2 * n_max + 1), 0.0);
    auto set = [&](int n, double v) { sol.coeffs[static_cast<std::size_t>(n + n_max)] = v; };

    if (n_max == 0 || q_u == 0.0) {
        set(0, 1.0);  // C_2n = delta_n0: pseudo-potential limit
        return sol;
    }

    if (n_max == 1) {
        const double c2 = -q_u / (4.0 + 4.0 * beta);
        const double cm2 = -q_u / (4.0 - 4.0 * beta);
        const double s = 1.0 + c2 + cm2;
        set(0, 1.0 / s);
        set(1, c2 / s);
        set(-1, cm2 / s);
        return sol;
    }

    auto d = [a_u, beta](int n) { return a_u - (2.0 * n + beta) * (2.0 * n + beta); };
    const int guard = n_max + 16;

    // ratio[n] = C_n / C_{n-1} for n > 0, from the decaying tail
    std::vector<double> rp(static_cast<std::size_t>(guard) + 2, 0.0);
    for (int n = guard; n >= 1; --n)
        rp[static_cast<std::size_t>(n)] = q_u / (d(n) - q_u * rp[static_cast<std::size_t>(n + 1)]);
    std::vector<double> rm(static_cast<std::size_t>(guard) + 2, 0.0);
    for (int n = guard; n >= 1; --n)
        rm[static_cast<std::size_t>(n)] = q_u / (d(-n) - q_u * rm[static_cast<std::size_t>(n + 1)]);

    set(0, 1.0);
    for (int n = 1; n <= n_max; ++n) {
        set(n, sol.coeff(n - 1) * rp[static_cast<std::size_t>(n)]);
        set(-n, sol.coeff(-(n - 1)) * rm[static_cast<std::size_t>(n)]);
    }

    double sum = 0.0, amax = 0.0;
    for (double c : sol.coeffs) {
        sum += c;
        amax = std::max(amax, std::abs(c));
    }
    if (!std::isfinite(sum) || std::abs(sum) < 1e-12)
        throw NoConvergence("floquet_coefficients: degenerate coefficient sum");

    // Truncation residual of the ODE is driven by the dropped couplings
    // q C_{+-2 n_max}; refuse solutions that would be visibly wrong.
    const double resid =
        std::abs(q_u) * (std::abs(sol.coeff(n_max)) + std::abs(sol.coeff(-n_max))) / amax;
    if (resid > 1e-4)
        throw NoConvergence("floquet_coefficients: tail not decayed by n_max, increase n_max");

    for (auto& c : sol.coeffs) c /= sum;
    return sol;
}

inline FloquetSolution make_floquet(double a_u, double q_u, int n_max = 5) {
    const double beta = characteristic_exponent(a_u, q_u);
    return floquet_coefficients(a_u, q_u, beta, n_max);
}

inline double lambda1(const FloquetSolution& s, double tau) {
    double v = 0.0;
    for (int n = -s.n_max; n <= s.n_max; ++n) v += s.coeff(n) * std::cos((2.0 * n + s.beta) * tau);
    return v;
}

inline double lambda2(const FloquetSolution& s, double tau) {
    double v = 0.0;
    for (int n = -s.n_max; n <= s.n_max; ++n) v += s.coeff(n) * std::sin((2.0 * n + s.beta) * tau);
    return v;
}

inline double lambda1_prime(const FloquetSolution& s, double tau) {
    double v = 0.0;
    for (int n = -s.n_max; n <= s.n_max; ++n) {
        const double w = 2.0 * n + s.beta;
        v -= s.coeff(n) * w * std::sin(w * tau);
    }
    return v;
}

inline double lambda2_prime(const FloquetSolution& s, double tau) {
    double v = 0.0;
    for (int n = -s.n_max; n <= s.n_max; ++n) {
        const double w = 2.0 * n + s.beta;
        v += s.coeff(n) * w * std::cos(w * tau);
    }
    return v;
}

// g(tau, tau') = [lambda1(tau') lambda2(tau) - lambda1(tau) lambda2(tau')] / W
inline double green(const FloquetSolution& s, double tau, double tau_prime) {
    return (lambda1(s, tau_prime) * lambda2(s, tau) - lambda1(s, tau) * lambda2(s, tau_prime)) /
           s.wronskian();
}

// ---------------------------------------------------------------------------
// Initial-condition mapping and variances in physical time.

// u0 = u0_tilde sum C_2n,  v0 = v0_tilde sum (2n+beta) C_2n / beta
struct TildeState {
    double u0_tilde = 0.0;  // m
    double v0_tilde = 0.0;  // m/s
};

namespace detail {

// (c1, c2) with u(tau) = c1 lambda1 + c2 lambda2, matching (u0, v0) at tau0.
struct CoeffBasis {
    double a11, a12, a21, a22;  // (c1, c2)^T = A (u0, 2 v0 / Omega)^T
};

inline CoeffBasis coeff_basis(const FloquetSolution& s, double tau0) {
    const double l1 = lambda1(s, tau0), l2 = lambda2(s, tau0);
    const double l1p = lambda1_prime(s, tau0), l2p = lambda2_prime(s, tau0);
    const double det = l1 * l2p - l2 * l1p;
    if (std::abs(det) < 1e-12)
        throw NoConvergence("coeff_basis: singular Floquet basis at tau0");
    return CoeffBasis{l2p / det, -l2 / det, -l1p / det, l1 / det};
}

}  // namespace detail

inline TildeState tilde_from_physical(double u0, double v0, const FloquetSolution& s,
                                      double omega_rf, double tau0 = 0.0) {
    const auto b = detail::coeff_basis(s, tau0);
    const double vs = 2.0 * v0 / omega_rf;
    const double c1 = b.a11 * u0 + b.a12 * vs;
    const double c2 = b.a21 * u0 + b.a22 * vs;
    // u = u0_tilde lambda1 + (v0_tilde / omega_p) lambda2; at tau0 = 0 this
    // reduces to the defining sums over C_2n.
    return TildeState{c1, c2 * s.secular_frequency(omega_rf)};
}

// Coherent spatial variance, evaluated from the tilde spreads:
//   Var_u(t) = du0_tilde^2 lambda1^2(tau) + (dv0_tilde / omega_p)^2 lambda2^2(tau)
// (the r^2 / omega_o^2 prefactor of the velocity term equals 1 / omega_p^2).
inline double full_coherent_variance(double t, double du0_tilde, double dv0_tilde,
                                     const FloquetSolution& s, double omega_rf,
                                     double tau0 = 0.0) {
    if (t < 0.0) throw ConfigError("full_coherent_variance: t < 0");
    const double tau = tau0 + 0.5 * omega_rf * t;
    const double l1 = lambda1(s, tau), l2 = lambda2(s, tau);
    const double omega_p = s.secular_frequency(omega_rf);
    return du0_tilde * du0_tilde * l1 * l1 +
           (dv0_tilde / omega_p) * (dv0_tilde / omega_p) * l2 * l2;
}

// Same quantity from the physical spreads at release (uncorrelated u0, v0),
// valid at any release phase tau0; reduces to the diagonal form at tau0 = 0.
inline double full_coherent_variance_physical(double t, double du0, double dv0,
                                              const FloquetSolution& s, double omega_rf,
                                              double tau0 = 0.0) {
    if (t < 0.0) throw ConfigError("full_coherent_variance_physical: t < 0");
    const auto b = detail::coeff_basis(s, tau0);
    const double vu = du0 * du0;
    const double vv = (2.0 * dv0 / omega_rf) * (2.0 * dv0 / omega_rf);
    // Cov(c) = A diag(vu, vv) A^T
    const double c11 = b.a11 * b.a11 * vu + b.a12 * b.a12 * vv;
    const double c12 = b.a11 * b.a21 * vu + b.a12 * b.a22 * vv;
    const double c22 = b.a21 * b.a21 * vu + b.a22 * b.a22 * vv;
    const double tau = tau0 + 0.5 * omega_rf * t;
    const double l1 = lambda1(s, tau), l2 = lambda2(s, tau);
    return c11 * l1 * l1 + 2.0 * c12 * l1 * l2 + c22 * l2 * l2;
}

// Heating variance by quadrature of the squared Green's function:
//
//   Var_h(t) = (2 gamma k_B T / m) * (4 / Omega^2) * Int_0^t g(tau(t), tau(t'))^2 dt'
//
// which recovers the harmonic-oscillator law exactly in the q -> 0 limit.
// Composite trapezoid with step <= T_rf / 50 and two Richardson levels.
inline double full_heating_variance(double t, double gamma, double T_bath, double mass,
                                    const FloquetSolution& s, double omega_rf,
                                    double tau0 = 0.0) {
    if (t < 0.0) throw ConfigError("full_heating_variance: t < 0");
    if (t == 0.0 || gamma == 0.0) return 0.0;

    constexpr double k_B = 1.380649e-23;
    const double w = s.wronskian();
    const double tau_t = tau0 + 0.5 * omega_rf * t;
    const double l1t = lambda1(s, tau_t), l2t = lambda2(s, tau_t);
    auto g2 = [&](double tp) {
        const double taup = tau0 + 0.5 * omega_rf * tp;
        const double g = (lambda1(s, taup) * l2t - l1t * lambda2(s, taup)) / w;
        return g * g;
    };

    const double t_rf = 2.0 * 3.141592653589793238462643383279502884 / omega_rf;
    const int base = std::max(8, static_cast<int>(std::ceil(t / (t_rf / 50.0))));

    auto trapezoid = [&](int n) {
        const double h = t / n;
        double acc = 0.5 * (g2(0.0) + g2(t));
        for (int i = 1; i < n; ++i) acc += g2(i * h);
        return acc * h;
    };
    const double t1 = trapezoid(base);
    const double t2 = trapezoid(2 * base);
    const double t4 = trapezoid(4 * base);
    const double s1 = (4.0 * t2 - t1) / 3.0;
    const double s2 = (4.0 * t4 - t2) / 3.0;
    const double integral = (16.0 * s2 - s1) / 15.0;
    if (!std::isfinite(integral))
        throw QuadratureError("full_heating_variance: quadrature failed");

    return (2.0 * gamma * k_B * T_bath / mass) * (4.0 / (omega_rf * omega_rf)) * integral;
}

// Whole heating curve on a uniform grid in one O(total substeps) pass: the
// squared Green's function expands into the three cumulative integrals
// I_ij(t) = Int_0^t lambda_i lambda_j dt', accumulated by trapezoid on an
// internal grid finer than T_rf / 100. Returns n_points + 1 values at
// t_k = k t_max / n_points.
inline std::vector<double> full_heating_variance_curve(double t_max, int n_points, double gamma,
                                                       double T_bath, double mass,
                                                       const FloquetSolution& s, double omega_rf,
                                                       double tau0 = 0.0) {
    if (!(t_max > 0.0) || n_points < 1)
        throw ConfigError("full_heating_variance_curve: bad grid");
    constexpr double k_B = 1.380649e-23;
    const double t_rf = 2.0 * 3.141592653589793238462643383279502884 / omega_rf;
    const int sub = std::max(1, static_cast<int>(std::ceil((t_max / n_points) / (t_rf / 400.0))));
    const double h = t_max / (static_cast<double>(n_points) * sub);
    const double pref =
        (2.0 * gamma * k_B * T_bath / mass) * (4.0 / (omega_rf * omega_rf)) / (s.wronskian() * s.wronskian());

    std::vector<double> out(static_cast<std::size_t>(n_points) + 1, 0.0);
    double i11 = 0.0, i12 = 0.0, i22 = 0.0;
    double l1p = lambda1(s, tau0), l2p = lambda2(s, tau0);
    for (int k = 1; k <= n_points; ++k) {
        for (int j = 0; j < sub; ++j) {
            const double t1 = (static_cast<double>(k - 1) * sub + j + 1) * h;
            const double tau1 = tau0 + 0.5 * omega_rf * t1;
            const double l1 = lambda1(s, tau1), l2 = lambda2(s, tau1);
            i11 += 0.5 * h * (l1p * l1p + l1 * l1);
            i12 += 0.5 * h * (l1p * l2p + l1 * l2);
            i22 += 0.5 * h * (l2p * l2p + l2 * l2);
            l1p = l1;
            l2p = l2;
        }
        // Var_h(t_k) = pref [lambda2(t)^2 I11 - 2 lambda1 lambda2 I12 + lambda1(t)^2 I22]
        out[static_cast<std::size_t>(k)] =
            pref * (l2p * l2p * i11 - 2.0 * l1p * l2p * i12 + l1p * l1p * i22);
    }
    return out;
}

}  // namespace fjump
