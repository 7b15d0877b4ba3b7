#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "fjump/covariance.hpp"
#include "fjump/rng.hpp"

using namespace fjump;

namespace {
const double wx = constants::two_pi * 44e3;
const double wy = constants::two_pi * 58e3;
const double mass = sphere_mass(177e-9, 1850.0);
}  // namespace

TEST_CASE("symmetric case gives diagonal covariance", "[covariance]") {
    const auto s = rotate_covariance_45(0.155, 0.155, wx, wx, mass);
    CHECK(s.c(0, 1) == Catch::Approx(0.0).margin(1e-40));
    CHECK(s.c(2, 3) == Catch::Approx(0.0).margin(1e-40));
    CHECK(s.c(0, 0) > 0.0);
}

TEST_CASE("rotated covariance blocks match the closed forms", "[covariance]") {
    const double tx = 0.21, ty = 0.09;
    const auto s = rotate_covariance_45(tx, ty, wx, wy, mass);
    const double k2m = constants::k_B / (2.0 * mass);
    CHECK(s.c(0, 0) == Catch::Approx(k2m * (tx / (wx * wx) + ty / (wy * wy))).epsilon(1e-14));
    CHECK(s.c(0, 1) == Catch::Approx(k2m * (tx / (wx * wx) - ty / (wy * wy))).epsilon(1e-14));
    CHECK(s.c(2, 2) == Catch::Approx(k2m * (tx + ty)).epsilon(1e-14));
    CHECK(s.c(2, 3) == Catch::Approx(k2m * (tx - ty)).epsilon(1e-14));
    // position-velocity cross blocks vanish
    for (int i = 0; i < 2; ++i)
        for (int j = 2; j < 4; ++j) CHECK(s.c(i, j) == 0.0);
}

TEST_CASE("velocity-to-position ratio at equal temperatures", "[covariance]") {
    auto [part, opt, paul] = default_paper_params();
    const auto init = make_thermal_init(0.155, part, opt);
    // 2 wx wy / (wx^2 + wy^2) with the 44/58 kHz modes
    CHECK(init.dv0 / (opt.omega_u_eff * init.du0) == Catch::Approx(0.9630189).epsilon(1e-6));
}

TEST_CASE("rotation preserves traces and determinants", "[covariance]") {
    Rng rng(5);
    for (int i = 0; i < 25; ++i) {
        const double tx = 0.01 + rng.uniform01(), ty = 0.01 + rng.uniform01();
        const double ax = wx * (0.5 + rng.uniform01()), ay = wy * (0.5 + rng.uniform01());
        const auto s = rotate_covariance_45(tx, ty, ax, ay, mass);
        const double k = constants::k_B / mass;
        const double var_x = k * tx / (ax * ax), var_y = k * ty / (ay * ay);
        const double var_vx = k * tx, var_vy = k * ty;
        CHECK(s.c(0, 0) + s.c(1, 1) == Catch::Approx(var_x + var_y).epsilon(1e-13));
        CHECK(s.c(2, 2) + s.c(3, 3) == Catch::Approx(var_vx + var_vy).epsilon(1e-13));
        const double det_q = s.c(0, 0) * s.c(1, 1) - s.c(0, 1) * s.c(0, 1);
        const double det_p = s.c(2, 2) * s.c(3, 3) - s.c(2, 3) * s.c(2, 3);
        CHECK(det_q == Catch::Approx(var_x * var_y).epsilon(1e-12));
        CHECK(det_p == Catch::Approx(var_vx * var_vy).epsilon(1e-12));
        // positive semidefinite 2x2 blocks
        CHECK(det_q >= 0.0);
        CHECK(det_p >= 0.0);
    }
}

TEST_CASE("cross correlations cannot vanish simultaneously when wx != wy", "[covariance]") {
    // off-diagonal of Sigma_p vanishes only at T_x = T_y, which forces a
    // nonzero off-diagonal of Sigma_q whenever the frequencies differ.
    Rng rng(9);
    for (int i = 0; i < 25; ++i) {
        const double t = 0.01 + rng.uniform01();
        const auto s = rotate_covariance_45(t, t, wx, wy, mass);
        CHECK(std::abs(s.c(2, 3)) == 0.0);
        CHECK(std::abs(s.c(0, 1)) > 0.0);
    }
    // and with unequal temperatures the velocity block is correlated
    const auto s = rotate_covariance_45(0.2, 0.1, wx, wy, mass);
    CHECK(std::abs(s.c(2, 3)) > 0.0);
}

TEST_CASE("thermal init closed forms", "[covariance]") {
    auto [part, opt, paul] = default_paper_params();
    const double tx = 0.155, ty = 0.095;
    const auto init = make_thermal_init(tx, ty, part, opt);
    const double k2m = constants::k_B / (2.0 * part.mass);
    CHECK(init.du0 * init.du0 ==
          Catch::Approx(k2m * (tx / (opt.omega_x * opt.omega_x) +
                               ty / (opt.omega_y * opt.omega_y)))
              .epsilon(1e-13));
    CHECK(init.dv0 * init.dv0 == Catch::Approx(k2m * (tx + ty)).epsilon(1e-13));
    CHECK_THROWS_AS(make_thermal_init(-0.1, 0.1, part, opt), ConfigError);
}

TEST_CASE("basis rotation round-trips points", "[covariance]") {
    Rng rng(11);
    for (int i = 0; i < 50; ++i) {
        const std::array<double, 4> p{rng.normal(), rng.normal(), rng.normal(), rng.normal()};
        const auto q = uv_to_xy(xy_to_uv(p));
        for (int j = 0; j < 4; ++j) CHECK(q[j] == Catch::Approx(p[j]).epsilon(1e-14).margin(1e-14));
        // orthogonality: norms preserved
        const auto uv = xy_to_uv(p);
        CHECK(uv[0] * uv[0] + uv[1] * uv[1] ==
              Catch::Approx(p[0] * p[0] + p[1] * p[1]).epsilon(1e-13).margin(1e-16));
    }
}
