#include <random>

#include "doctest.h"
#include "gpmrt/fourth_order.hpp"
#include "gpmrt/models.hpp"

using namespace gpmrt;

TEST_CASE("closed form at a = b = 1") {
    auto p = closed_form_a1b1(0.25);
    CHECK(p.s1 == doctest::Approx(1.2).epsilon(1e-15));
    CHECK(p.s2 == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(p.w0 == doctest::Approx(0.25).epsilon(1e-15));

    auto p2 = closed_form_a1b1(1.0 / 6.0);
    CHECK(p2.s1 == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(p2.s2 == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(p2.w0 == doctest::Approx(2.0 / 3.0).epsilon(1e-14));

    CHECK_THROWS_AS(closed_form_a1b1(0.3), InfeasibleError);  // w0 < 0
}

TEST_CASE("fourth-order residuals") {
    SUBCASE("closed form satisfies all three conditions") {
        for (double eps : {0.05, 0.10, 0.16, 0.20, 0.25, 0.28}) {
            auto r = residuals_tr(closed_form_a1b1(eps));
            CHECK(std::abs(r.tr3) < 1e-12);
            CHECK(std::abs(r.tr4) < 1e-12);
            CHECK(std::abs(r.eps_residual) < 1e-12);
        }
    }
    SUBCASE("generic point is not fourth order") {
        FourthOrderParams p;
        p.a = p.b = 1.0;
        p.s1 = p.s2 = 1.0;
        p.w0 = 1.0 / 3.0;
        p.eps = 0.0;
        auto r = residuals_tr(p);
        CHECK(r.tr3 == doctest::Approx(-1.0).epsilon(1e-14));
    }
    SUBCASE("eps residual is zero by construction when the relation holds") {
        FourthOrderParams p;
        p.a = 0.7;
        p.b = 0.6;
        p.s1 = 1.1;
        p.s2 = 0.9;
        p.w0 = 0.45;
        p.eps = p.a * p.a * (1.0 / p.s1 + p.b / (2.0 * p.a * p.a) - 1.0) * (1.0 - p.w0);
        CHECK(std::abs(residuals_tr(p).eps_residual) < 1e-15);
    }
}

TEST_CASE("fourth-order solver") {
    SUBCASE("reproduces the closed form at a = b = 1") {
        for (double eps : {0.08, 0.16, 0.24}) {
            auto ref = closed_form_a1b1(eps);
            auto got = solve_fourth_order(eps, 1.0, 1.0);
            CHECK(got.s1 == doctest::Approx(ref.s1).epsilon(1e-10));
            CHECK(got.s2 == doctest::Approx(ref.s2).epsilon(1e-10));
            CHECK(got.w0 == doctest::Approx(ref.w0).epsilon(1e-10));
        }
    }
    SUBCASE("general (a,b) roots satisfy the conditions") {
        for (auto [a, b] : std::vector<std::pair<double, double>>{
                 {0.6, 0.9}, {0.9, 0.8}, {0.6, 0.6}}) {
            auto p = solve_fourth_order(0.1, a, b);
            auto r = residuals_tr(p);
            CHECK(std::abs(r.tr3) < 1e-10);
            CHECK(std::abs(r.tr4) < 1e-10);
            CHECK(std::abs(r.eps_residual) < 1e-10);
        }
    }
    SUBCASE("infeasible eps is reported, not faked") {
        CHECK_THROWS_AS(solve_fourth_order(0.9, 1.0, 1.0), InfeasibleError);
    }
    SUBCASE("solved parameters agree with the derivation engine end to end") {
        auto p = solve_fourth_order(0.16, 0.6, 0.9);
        auto spec = make_cde_model(p, 5.0, 1.0);
        auto epop = cde_equilibrium_coeffs(1.0, p.vartheta, spec.lat);
        auto em = spec.tm.m.apply(epop);
        auto engine = scheme_coefficients_d1q3(derive_scheme(spec, 0), em);
        auto printed = cde_closed_form_coefficients(p.s1, p.s2, p.w0, p.a, p.b, spec.lat.c, 1.0);
        for (int k = 0; k < 13; ++k)
            CHECK(engine[k] == doctest::Approx(printed[k]).epsilon(1e-11));
    }
}

TEST_CASE("von Neumann analysis") {
    SUBCASE("theta = 0 carries the conserved mode exactly") {
        for (double eps : {0.08, 0.16, 0.24}) {
            auto p = closed_form_a1b1(eps);
            auto spec = make_cde_model(p, 1.0, 0.0);
            auto epop = cde_equilibrium_coeffs(0.0, p.vartheta, spec.lat);
            auto eig = amplification_eigenvalues(spec, epop, 0.0);
            double dist = 1e9;
            for (auto z : eig) dist = std::min(dist, std::abs(z - std::complex<double>(1.0, 0.0)));
            CHECK(dist < 1e-14);
        }
    }
    SUBCASE("interior fourth-order points are stable at u = 0") {
        for (double eps : {0.05, 0.10, 0.16}) {
            auto p = closed_form_a1b1(eps);
            auto spec = make_cde_model(p, 1.0, 0.0);
            auto epop = cde_equilibrium_coeffs(0.0, p.vartheta, spec.lat);
            CHECK(max_spectral_radius(spec, epop) <= 1.0 + 1e-10);
        }
    }
    SUBCASE("an extreme relaxation split is flagged unstable") {
        ModelSpec spec;
        spec.lat = build_d1q3(1.0, 1.0, 0.05);
        spec.tm = orthogonal_transform_d1q3(spec.lat.c);
        spec.s = Mat(3, 3);
        spec.s(0, 0) = 1.0;
        spec.s(1, 1) = 0.05;
        spec.s(2, 2) = 1.995;
        spec.a = spec.b = 1.0;
        spec.n_conserved = 1;
        auto epop = cde_equilibrium_coeffs(0.9, 1.0, spec.lat);
        CHECK(max_spectral_radius(spec, epop) > 1.0 + 1e-8);
    }
    SUBCASE("stability report covers the grid") {
        auto rep = stability_region(1.0, 1.0, {0.05, 0.16, 0.5}, {0.0, 0.2});
        CHECK(rep.points.size() == 6);
        int solvable = 0;
        for (auto& pt : rep.points) solvable += pt.solvable ? 1 : 0;
        CHECK(solvable == 4);  // eps = 0.5 unsolvable at a = b = 1
    }
}
