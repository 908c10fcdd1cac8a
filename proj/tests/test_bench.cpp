#include <cmath>
#include <random>

#include "doctest.h"
#include "gpmrt/bench.hpp"

using namespace gpmrt;

TEST_CASE("gauss hill analytic solution") {
    const Mat2 kap{{{1e-3, 0.0}, {0.0, 1e-3}}};
    SUBCASE("t = 0 recovers the initial Gaussian") {
        const double v = gauss_hill_exact(0.02, -0.01, 0.0, {0.0, 0.0}, kap, 0.01, 2 * M_PI * 1e-4);
        const double want = std::exp(-(0.02 * 0.02 + 0.01 * 0.01) / (2e-4));
        CHECK(v == doctest::Approx(want).epsilon(1e-13));
    }
    SUBCASE("isotropic kappa equals the product of 1d heat kernels") {
        const Vec2 u{0.05, -0.02};
        const double t = 1.7, ups0 = 0.05, phi0 = 3.0;
        const double var = ups0 * ups0 + 2e-3 * t;
        for (double x : {-0.2, 0.0, 0.3})
            for (double y : {-0.1, 0.25}) {
                const double k1x =
                    std::exp(-0.5 * (x - u[0] * t) * (x - u[0] * t) / var) / std::sqrt(2 * M_PI * var);
                const double k1y =
                    std::exp(-0.5 * (y - u[1] * t) * (y - u[1] * t) / var) / std::sqrt(2 * M_PI * var);
                Mat2 iso{{{1e-3, 0.0}, {0.0, 1e-3}}};
                CHECK(gauss_hill_exact(x, y, t, u, iso, ups0, phi0) ==
                      doctest::Approx(phi0 * k1x * k1y).epsilon(1e-12));
            }
    }
    SUBCASE("non-positive-definite covariance is rejected") {
        Mat2 bad{{{-1e-3, 0.0}, {0.0, 1e-3}}};
        CHECK_THROWS_AS(gauss_hill_exact(0, 0, 10.0, {0, 0}, bad, 0.001, 1.0), ParameterError);
    }
}

TEST_CASE("poiseuille and cde analytic solutions") {
    CHECK(poiseuille_exact(0.5, 0.01, 1.0) == doctest::Approx(0.01));
    CHECK(poiseuille_exact(0.0, 0.01, 1.0) == doctest::Approx(0.0));
    CHECK(poiseuille_exact(1.0, 0.01, 1.0) == doctest::Approx(0.0));
    // U = G H^2/(8 nu) with G = 0.08 nu gives exactly 0.01
    for (double nu : {0.02, 0.06, 0.10})
        CHECK(0.08 * nu / (8.0 * nu) == doctest::Approx(0.01).epsilon(1e-15));

    CHECK(cde1d_exact(0.3, 0.0, 1.0, 0.08) == doctest::Approx(std::sin(M_PI * 0.3)));
    CHECK(cde1d_exact(0.5, 2.0, 0.0, 0.08) ==
          doctest::Approx(std::exp(-0.16 * M_PI * M_PI)).epsilon(1e-12));
    CHECK(cde1d_exact(-1.0, 0.37, 1.0, 0.08) ==
          doctest::Approx(cde1d_exact(1.0, 0.37, 1.0, 0.08)).epsilon(1e-12));
}

TEST_CASE("rmse and convergence rates") {
    Plane a = {1.0, 2.0, 3.0, 4.0};
    CHECK(rmse(a, a) == 0.0);
    Plane b = {1.1, 2.1, 3.1, 4.1};
    CHECK(rmse(a, b) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK_THROWS_AS(rmse(a, Plane{1.0}), ParameterError);

    auto cr = convergence_rates({4e-4, 1e-4}, {0.1, 0.05});
    CHECK(cr.pairwise[0] == doctest::Approx(2.0).epsilon(1e-14));

    // printed Table-2 row: arithmetic grid refinement 1/80 .. 1/320
    auto cr2 = convergence_rates({9.5641e-6, 2.3468e-6, 1.0396e-6, 5.8420e-7},
                                 {1.0 / 80, 1.0 / 160, 1.0 / 240, 1.0 / 320});
    CHECK(std::abs(cr2.least_squares - 2.0108) < 0.02);
}

TEST_CASE("config parsing") {
    auto cfg = Config::parse(
        "# comment\n"
        "problem = gauss_hill\n"
        "dx = 0.0125   # trailing comment\n"
        "refine = 1, 2, 3\n"
        "with_g = true\n");
    CHECK(cfg.str("problem") == "gauss_hill");
    CHECK(cfg.num("dx") == doctest::Approx(0.0125));
    CHECK(cfg.flag("with_g", false));
    CHECK(cfg.list("refine").size() == 3);
    CHECK(cfg.num("missing", 7.0) == 7.0);
    CHECK_THROWS_AS(cfg.num("missing"), ParameterError);
}

TEST_CASE("acoustic (a,b) inversion reproduces the printed sweep") {
    const Mat2 s1{{{0.8, 0.4}, {0.4, 1.2}}};
    struct Row {
        double alpha, dx, a, b;
    };
    const Row rows[] = {
        {0.625, 1.0 / 200, 0.306186217847897, 0.1125},
        {0.625, 1.0 / 300, 0.375, 0.16875},
        {1.000, 1.0 / 250, 0.433012701892219, 0.225},
    };
    for (const auto& r : rows) {
        Mat2 kap{{{r.alpha * 1e-4, r.alpha * 1e-4}, {r.alpha * 1e-4, 2 * r.alpha * 1e-4}}};
        auto [a, b] = acoustic_ab_for_kappa(kap, r.dx, s1, 1.0);
        CHECK(a == doctest::Approx(r.a).epsilon(1e-12));
        CHECK(b == doctest::Approx(r.b).epsilon(1e-12));
    }
    // infeasible: kappa too large for a <= 1
    Mat2 big{{{1.0, 1.0}, {1.0, 2.0}}};
    CHECK_THROWS_AS(acoustic_ab_for_kappa(big, 1.0 / 200, s1, 1.0), ParameterError);
}

TEST_CASE("small gauss hill run is sane") {
    GaussHillRun run;
    run.dx = 1.0 / 32;
    run.dt = 1.0 / 32;  // acoustic toy setup
    run.a = 0.4;
    run.b = 0.2;
    run.u = {0.05, 0.05};
    run.kappa = {{{8e-4, 2e-4}, {2e-4, 10e-4}}};
    run.t_end = 0.5;
    run.with_g = true;
    run.fd_init = FdInit::FromLb;
    auto out = run_gauss_hill(run);
    CHECK(out.rmse_lb >= 0.0);
    CHECK(out.rmse_fd >= 0.0);
    CHECK(out.lb_fd_rel_dev < 1e-10);
    CHECK(out.mass_drift < 1e-12);
}
