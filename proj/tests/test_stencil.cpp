#include <random>

#include "doctest.h"
#include "gpmrt/stencil.hpp"

using namespace gpmrt;

namespace {

Stencil random_stencil(std::mt19937& rng, int dim, int taps) {
    std::uniform_int_distribution<int> off(-3, 3);
    std::uniform_real_distribution<double> coeff(-2.0, 2.0);
    Stencil s(dim);
    for (int k = 0; k < taps; ++k)
        s.add_tap({off(rng), dim == 2 ? off(rng) : 0}, coeff(rng));
    return s;
}

double stencil_distance(const Stencil& a, const Stencil& b) {
    double m = 0.0;
    for (auto& [z, v] : a.taps()) m = std::max(m, std::abs(v - b.tap(z)));
    for (auto& [z, v] : b.taps()) m = std::max(m, std::abs(v - a.tap(z)));
    return m;
}

}  // namespace

TEST_CASE("stencil arithmetic basics") {
    // inverse shifts cancel
    auto sp = Stencil::shift(1, {1, 0});
    auto sm = Stencil::shift(1, {-1, 0});
    auto id = sp * sm;
    CHECK(id.size() == 1);
    CHECK(id.tap({0, 0}) == doctest::Approx(1.0));

    // binomial convolution
    auto avg = Stencil::shift(1, {1, 0}, 0.5) + Stencil::shift(1, {-1, 0}, 0.5);
    auto sq = avg * avg;
    CHECK(sq.tap({2, 0}) == doctest::Approx(0.25));
    CHECK(sq.tap({0, 0}) == doctest::Approx(0.5));
    CHECK(sq.tap({-2, 0}) == doctest::Approx(0.25));
    CHECK(sq.size() == 3);

    CHECK_THROWS_AS(Stencil::shift(1, {1, 0}) * Stencil::shift(2, {1, 1}), ParameterError);
}

TEST_CASE("stencil ring laws on random instances") {
    std::mt19937 rng(20240811);
    for (int trial = 0; trial < 50; ++trial) {
        auto s1 = random_stencil(rng, 2, 5);
        auto s2 = random_stencil(rng, 2, 5);
        auto s3 = random_stencil(rng, 2, 4);
        CHECK(stencil_distance(s1 * s2, s2 * s1) < 1e-15);
        CHECK(stencil_distance((s1 + s2) * s3, s1 * s3 + s2 * s3) < 1e-14);
        CHECK(stencil_distance(s1 + s2, s2 + s1) < 1e-15);
    }
}

TEST_CASE("propagation operator") {
    auto lat = build_d1q3(1.0, 1.0, 1.0 / 3.0);
    SUBCASE("pure upwind at a=b=1") {
        auto t = build_tbar(lat, 1.0, 1.0);
        CHECK(t.at(1, 1).size() == 1);
        CHECK(t.at(1, 1).tap({-1, 0}) == doctest::Approx(1.0));
        CHECK(t.at(2, 2).tap({1, 0}) == doctest::Approx(1.0));
        // rest velocity stays put for any (a,b)
        CHECK(t.at(0, 0).tap({0, 0}) == doctest::Approx(1.0));
    }
    SUBCASE("Lax-Wendroff weights at b=a^2") {
        auto p = propagation_weights(0.6, 0.36);
        CHECK(p.p0 == doctest::Approx(0.64));
        CHECK(p.pm1 == doctest::Approx(0.48));
        CHECK(p.p1 == doctest::Approx(-0.12));
    }
    SUBCASE("taps sum to one") {
        auto t = build_tbar(lat, 0.5, 0.4);
        for (int i = 0; i < 3; ++i) CHECK(t.at(i, i).sum() == doctest::Approx(1.0));
    }
    SUBCASE("stability range enforced") {
        CHECK_THROWS_AS(build_tbar(lat, 0.8, 0.5), ParameterError);   // b < a^2
        CHECK_THROWS_AS(build_tbar(lat, 0.5, 1.01), ParameterError);  // b > 1
        CHECK_NOTHROW(build_tbar(lat, 0.8, 0.5, true));               // warn-only mode
    }
}

TEST_CASE("W, A, B assembly") {
    auto lat = build_d1q3(1.0, 1.0, 1.0 / 3.0);
    auto tm = orthogonal_transform_d1q3(lat.c);
    auto tbar = build_tbar(lat, 1.0, 1.0);

    SUBCASE("S = I gives A = 0, B = W") {
        auto wab = build_w_a_b(tm, Mat::identity(3), tbar);
        CHECK(wab.a.max_abs() < 1e-14);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                CHECK(stencil_distance(wab.b.at(i, j), wab.w.at(i, j)) < 1e-14);
    }
    SUBCASE("S = 0 gives A = W, B = 0") {
        auto wab = build_w_a_b(tm, Mat(3, 3), tbar);
        CHECK(wab.b.max_abs() < 1e-14);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                CHECK(stencil_distance(wab.a.at(i, j), wab.w.at(i, j)) < 1e-14);
    }
    SUBCASE("column sums of W preserve mass on periodic fields") {
        // each column of W has stencil-tap total equal to the corresponding
        // column sum of M Tbar_sum M^{-1} = 1 on the first row and 0 elsewhere
        // in moment space; in total the zeroth moment is preserved
        Mat s(3, 3);
        s(0, 0) = 1.0;
        s(1, 1) = 0.7;
        s(2, 2) = 1.3;
        auto wab = build_w_a_b(tm, s, tbar);
        for (int j = 0; j < 3; ++j) {
            double col = 0.0;
            for (int i = 0; i < 3; ++i) col += wab.w.at(i, j).sum() * tm.m(0, i);
            // M row 0 is the mass row: total mass of column j maps to M(0,j)
            CHECK(col == doctest::Approx(tm.m(0, j)).epsilon(1e-13));
        }
    }
}

TEST_CASE("characteristic polynomial") {
    SUBCASE("1x1") {
        StencilMatrix a(1, 1);
        a.at(0, 0) = Stencil::shift(1, {0, 0}, 0.7);
        auto p = char_poly(a);
        CHECK(p.gamma.size() == 2);
        CHECK(p.gamma[0].tap({0, 0}) == doctest::Approx(-0.7));
        CHECK(p.gamma[1].tap({0, 0}) == doctest::Approx(1.0));
    }
    SUBCASE("zero matrix") {
        StencilMatrix a(3, 1);
        auto p = char_poly(a);
        for (int k = 0; k < 3; ++k) CHECK(p.gamma[k].max_abs() < 1e-15);
        CHECK(p.gamma[3].tap({0, 0}) == doctest::Approx(1.0));
    }
    SUBCASE("scalar 3x3 against direct determinant expansion") {
        std::mt19937 rng(7);
        std::uniform_real_distribution<double> coeff(-1.0, 1.0);
        for (int trial = 0; trial < 20; ++trial) {
            double m[3][3];
            StencilMatrix a(3, 1);
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) {
                    m[i][j] = coeff(rng);
                    a.at(i, j) = Stencil::shift(1, {0, 0}, m[i][j]);
                }
            auto p = char_poly(a);
            // det(xI - M) = x^3 - tr x^2 + c1 x - det
            const double tr = m[0][0] + m[1][1] + m[2][2];
            const double c1 = m[0][0] * m[1][1] - m[0][1] * m[1][0] + m[0][0] * m[2][2] -
                              m[0][2] * m[2][0] + m[1][1] * m[2][2] - m[1][2] * m[2][1];
            const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                               m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                               m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
            CHECK(p.gamma[0].tap({0, 0}) == doctest::Approx(-det).epsilon(1e-12));
            CHECK(p.gamma[1].tap({0, 0}) == doctest::Approx(c1).epsilon(1e-12));
            CHECK(p.gamma[2].tap({0, 0}) == doctest::Approx(-tr).epsilon(1e-12));
        }
    }
    SUBCASE("Cayley-Hamilton annihilation over the ring") {
        // random D1Q3 model-like A = W(I-S)
        std::mt19937 rng(99);
        std::uniform_real_distribution<double> rate(0.2, 1.8);
        auto lat = build_d1q3(1.0, 0.8, 0.3);
        auto tm = orthogonal_transform_d1q3(lat.c);
        for (int trial = 0; trial < 5; ++trial) {
            Mat s(3, 3);
            s(0, 0) = 1.0;
            s(1, 1) = rate(rng);
            s(2, 2) = rate(rng);
            auto tbar = build_tbar(lat, 0.8, 0.7);
            auto wab = build_w_a_b(tm, s, tbar);
            auto p = char_poly(wab.a);
            // sum_k gamma_k A^{k-1} = 0
            StencilMatrix acc = StencilMatrix::identity(3, 1);
            StencilMatrix total(3, 1);
            for (int k = 0; k <= 3; ++k) {
                for (int i = 0; i < 3; ++i)
                    for (int j = 0; j < 3; ++j) total.at(i, j) += p.gamma[k] * acc.at(i, j);
                if (k < 3) acc = wab.a * acc;
            }
            CHECK(total.max_abs() < 1e-12);
        }
    }
}

TEST_CASE("stencil csv round trip") {
    std::mt19937 rng(3);
    auto s = random_stencil(rng, 2, 6);
    auto text = to_csv(s);
    auto back = stencil_from_csv(text, 2);
    CHECK(stencil_distance(s, back) == 0.0);  // shortest round-trip decimals
}
