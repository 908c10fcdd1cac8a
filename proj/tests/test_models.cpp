#include <random>

#include "doctest.h"
#include "gpmrt/models.hpp"

using namespace gpmrt;

TEST_CASE("nacde equilibrium moments") {
    auto lat = build_d2q9(1.0, 1.0);
    SUBCASE("phi = 0 vanishes") {
        NacdePoint p;
        p.phi = 0.0;
        for (double v : nacde_equilibrium(p, lat)) CHECK(v == 0.0);
    }
    SUBCASE("pure isotropic diffusion reduces to weights") {
        NacdePoint p;
        p.phi = 0.7;
        p.d = {{{0.7, 0.0}, {0.0, 0.7}}};  // D = phi I
        auto feq = nacde_equilibrium(p, lat);
        for (int i = 0; i < 9; ++i) CHECK(feq[i] == doctest::Approx(lat.w[i] * 0.7).epsilon(1e-15));
    }
    SUBCASE("printed moment conditions on random inputs") {
        std::mt19937 rng(42);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (int trial = 0; trial < 20; ++trial) {
            NacdePoint p;
            p.phi = u(rng) + 2.0;
            p.b = {u(rng), u(rng)};
            p.d = {{{u(rng) + 2.0, u(rng)}, {0.0, u(rng) + 2.0}}};
            p.d[1][0] = p.d[0][1];
            p.c = {{{u(rng), u(rng)}, {0.0, u(rng)}}};
            p.c[1][0] = p.c[0][1];
            p.chi = 1.5;
            auto feq = nacde_equilibrium(p, lat);
            double m0 = 0.0, m1[2] = {0, 0}, m2[2][2] = {{0, 0}, {0, 0}};
            for (int i = 0; i < 9; ++i) {
                const double cx = lat.c * lat.e[i][0], cy = lat.c * lat.e[i][1];
                m0 += feq[i];
                m1[0] += cx * feq[i];
                m1[1] += cy * feq[i];
                m2[0][0] += cx * cx * feq[i];
                m2[0][1] += cx * cy * feq[i];
                m2[1][0] += cy * cx * feq[i];
                m2[1][1] += cy * cy * feq[i];
            }
            CHECK(m0 == doctest::Approx(p.phi).epsilon(1e-13));
            CHECK(m1[0] == doctest::Approx(p.b[0]).epsilon(1e-13));
            CHECK(m1[1] == doctest::Approx(p.b[1]).epsilon(1e-13));
            for (int al = 0; al < 2; ++al)
                for (int be = 0; be < 2; ++be) {
                    const double want = p.chi * lat.cs2 * p.d[al][be] + p.c[al][be];
                    CHECK(std::abs(m2[al][be] - want) < 1e-13 * std::max(1.0, std::abs(want)));
                }
        }
    }
}

TEST_CASE("nse equilibrium and force moments") {
    auto lat = build_d2q9(1.0, 1.0);
    SUBCASE("rest state") {
        auto feq = nse_equilibrium(1.3, {0.0, 0.0}, lat);
        double m2 = 0.0;
        for (int i = 0; i < 9; ++i) {
            CHECK(feq[i] == doctest::Approx(lat.w[i] * 1.3).epsilon(1e-15));
            m2 += lat.c * lat.e[i][0] * lat.c * lat.e[i][0] * feq[i];
        }
        CHECK(m2 == doctest::Approx(lat.cs2 * 1.3).epsilon(1e-14));
    }
    SUBCASE("force moments on random inputs") {
        std::mt19937 rng(5);
        std::uniform_real_distribution<double> un(-0.1, 0.1);
        for (int trial = 0; trial < 20; ++trial) {
            const double rho = 1.0 + un(rng);
            const Vec2 u{un(rng), un(rng)};
            const Vec2 fh{un(rng), un(rng)};
            auto f = nse_force(rho, u, fh, lat);
            double m0 = 0.0, m1[2] = {0, 0}, m2[2][2] = {{0, 0}, {0, 0}};
            for (int i = 0; i < 9; ++i) {
                const double cx = lat.c * lat.e[i][0], cy = lat.c * lat.e[i][1];
                m0 += f[i];
                m1[0] += cx * f[i];
                m1[1] += cy * f[i];
                m2[0][0] += cx * cx * f[i];
                m2[0][1] += cx * cy * f[i];
                m2[1][1] += cy * cy * f[i];
            }
            CHECK(std::abs(m0) < 1e-14);
            CHECK(m1[0] == doctest::Approx(rho * fh[0]).epsilon(1e-13));
            CHECK(m1[1] == doctest::Approx(rho * fh[1]).epsilon(1e-13));
            CHECK(m2[0][0] == doctest::Approx(rho * 2.0 * fh[0] * u[0]).epsilon(1e-12));
            CHECK(m2[0][1] ==
                  doctest::Approx(rho * (fh[0] * u[1] + fh[1] * u[0])).epsilon(1e-12));
            CHECK(m2[1][1] == doctest::Approx(rho * 2.0 * fh[1] * u[1]).epsilon(1e-12));
        }
    }
}

TEST_CASE("kappa relation") {
    SUBCASE("Table-1 row 1 rationally exact") {
        // a^2 = 3/32 exactly, cs2 = 1/32, dt = 1/200, S1 - 0.4 I = (2/5)[[1,1],[1,2]]
        const double a = 0.306186217847897;
        const double b = 0.1125;
        const Mat2 s1{{{0.8, 0.4}, {0.4, 1.2}}};
        const double cs2 = 0.03125;  // (3/32)/3 exact in binary
        auto kappa = kappa_from_s1(s1, 1.0, a, b, 1.0 / 200, cs2);
        // 1/32 * 1/200 * 2/5 = 1/16000
        CHECK(kappa[0][0] == doctest::Approx(0.625e-4).epsilon(1e-15));
        CHECK(kappa[0][1] == doctest::Approx(0.625e-4).epsilon(1e-15));
        CHECK(kappa[1][1] == doctest::Approx(1.25e-4).epsilon(1e-15));
        // b/(2a^2) must be exactly 0.6 up to rounding of the printed a
        CHECK(b / (2.0 * a * a) == doctest::Approx(0.6).epsilon(1e-12));

        auto back = s1_from_kappa(kappa, 1.0, a, b, 1.0 / 200, cs2);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) CHECK(back[i][j] == doctest::Approx(s1[i][j]).epsilon(1e-12));
    }
    SUBCASE("Table-1 row 2 scale") {
        const double a = 0.387298334620742;  // a^2 = 0.15
        const double b = 0.18;
        const Mat2 s1{{{0.8, 0.4}, {0.4, 1.2}}};
        const double cs2 = a * a / 3.0;
        auto kappa = kappa_from_s1(s1, 1.0, a, b, 1.0 / 200, cs2);
        CHECK(kappa[0][0] == doctest::Approx(1.0e-4).epsilon(1e-12));
        CHECK(kappa[1][1] == doctest::Approx(2.0e-4).epsilon(1e-12));
    }
    SUBCASE("b = 2a^2 removes the shift") {
        const double s = 1.3;
        const double kappa = kappa_from_s1(s, 1.0, 0.5, 0.5, 0.01, 0.1);
        CHECK(kappa == doctest::Approx(1.0 * 0.1 * 0.01 * s).epsilon(1e-14));
    }
}

TEST_CASE("viscosity relation") {
    SUBCASE("Table-4 run parameters") {
        // nu=0.06, (a,b)=(1,1), dx=1/16, dt=1/50 -> lambda=3.125
        const double dt = 1.0 / 50;
        const double lambda = (1.0 / 16) / dt;
        auto lat = build_d2q9(lambda, 1.0);
        CHECK(lat.cs2 * dt == doctest::Approx(0.06510417).epsilon(1e-6));
        auto rates = set_viscosity(0.06, 0.06, 1.0, 1.0, dt, lat.cs2, 2, Scaling::Diffusive);
        CHECK(1.0 / rates.s2s == doctest::Approx(1.42159).epsilon(1e-5));
        CHECK(rates.s2s == doctest::Approx(0.70344).epsilon(1e-5));
        CHECK(viscosity_from_rate(rates.s2s, 1.0, 1.0, dt, lat.cs2) ==
              doctest::Approx(0.06).epsilon(1e-14));
    }
    SUBCASE("s2s = 1 at b = a^2 gives cs2 dt / 2") {
        const double nu = viscosity_from_rate(1.0, 0.7, 0.49, 0.01, 0.2);
        CHECK(nu == doctest::Approx(0.2 * 0.01 * 0.5).epsilon(1e-14));
    }
    SUBCASE("infeasible target") {
        // b/(2a^2) = 4.5 pushes 1/s2s below 1/2 for tiny nu -> rate >= 2
        CHECK_THROWS_AS(set_viscosity(1e-9, 1e-9, 0.2, 0.36, 0.01, 0.3, 2, Scaling::Diffusive),
                        ParameterError);
    }
}

TEST_CASE("d1q3 cde equilibrium") {
    auto lat = build_d1q3(1.0, 1.0, 1.0 / 3.0);
    // zeta = 2*(2/3)/(1/3) = 4, xi = (1 - 1/2)/(1 + 1/2 - 1) = 1
    const double vt = cde_vartheta(1.0, 1.0, 1.0, 1.0 / 3.0);
    CHECK(vt == doctest::Approx(4.0).epsilon(1e-12));
    auto e = cde_equilibrium_coeffs(0.2, vt, lat);
    double m0 = 0.0, m1 = 0.0;
    for (int i = 0; i < 3; ++i) {
        m0 += e[i];
        m1 += lat.c * lat.e[i][0] * e[i];
    }
    CHECK(m0 == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(m1 == doctest::Approx(0.2).epsilon(1e-14));
}
