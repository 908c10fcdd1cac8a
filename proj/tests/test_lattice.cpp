#include "doctest.h"
#include "gpmrt/lattice.hpp"

using namespace gpmrt;

namespace {

void check_moment_identities(const Lattice& lat) {
    double w_sum = 0.0;
    double c_sum[2] = {0.0, 0.0};
    double cc[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
    for (int i = 0; i < lat.q; ++i) {
        w_sum += lat.w[i];
        for (int al = 0; al < 2; ++al) {
            c_sum[al] += lat.w[i] * lat.c * lat.e[i][al];
            for (int be = 0; be < 2; ++be)
                cc[al][be] += lat.w[i] * lat.c * lat.e[i][al] * lat.c * lat.e[i][be];
        }
    }
    CHECK(w_sum == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(c_sum[0]) < 1e-14);
    CHECK(std::abs(c_sum[1]) < 1e-14);
    for (int al = 0; al < lat.d; ++al)
        for (int be = 0; be < lat.d; ++be) {
            const double want = al == be ? lat.cs2 : 0.0;
            CHECK(std::abs(cc[al][be] - want) <= 1e-14 * std::max(1.0, lat.cs2));
        }
}

}  // namespace

TEST_CASE("d1q3 lattice") {
    auto lat = build_d1q3(1.0, 1.0, 1.0 / 3.0);
    CHECK(lat.cs2 == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    check_moment_identities(lat);

    auto lat2 = build_d1q3(1.0, 1.0, 0.25);
    CHECK(lat2.cs2 == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(lat2.w[0] == doctest::Approx(0.25));
    CHECK(lat2.w[1] == doctest::Approx(0.375));
    CHECK(lat2.w[2] == doctest::Approx(0.375));
    check_moment_identities(lat2);

    auto lat3 = build_d1q3(2.0, 0.5, 1.0 / 3.0);
    CHECK(lat3.c == doctest::Approx(1.0));
    CHECK(lat3.cs2 == doctest::Approx(2.0 / 3.0));

    CHECK_THROWS_AS(build_d1q3(1.0, 0.0, 0.5), ParameterError);
    CHECK_THROWS_AS(build_d1q3(1.0, 1.5, 0.5), ParameterError);
    CHECK_THROWS_AS(build_d1q3(1.0, 1.0, 1.0), ParameterError);
}

TEST_CASE("d2q9 lattice") {
    auto lat = build_d2q9(1.0, 1.0);
    CHECK(lat.cs2 == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    check_moment_identities(lat);

    // Table-1 style parameters
    auto lat2 = build_d2q9(1.0, 0.306186217847897);
    CHECK(lat2.c * lat2.c == doctest::Approx(0.09375).epsilon(1e-12));
    CHECK(lat2.cs2 == doctest::Approx(0.03125).epsilon(1e-12));
    check_moment_identities(lat2);

    // rebuilding with a'=1, lambda'=c gives the same velocity set
    auto lat3 = build_d2q9(lat2.c, 1.0);
    for (int i = 0; i < 9; ++i) {
        CHECK(lat3.c * lat3.e[i][0] == doctest::Approx(lat2.c * lat2.e[i][0]).epsilon(1e-15));
        CHECK(lat3.c * lat3.e[i][1] == doctest::Approx(lat2.c * lat2.e[i][1]).epsilon(1e-15));
    }
}

TEST_CASE("transform matrices") {
    SUBCASE("d1q3 printed matrix") {
        auto t = orthogonal_transform_d1q3(1.0);
        const double want[9] = {1, 1, 1, 0, 1, -1, -2, 1, 1};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) CHECK(t.m(i, j) == doctest::Approx(want[3 * i + j]));
        // cofactor expansion: 1*(1+1) - 1*(0-2) + 1*(0+2) = 6
        CHECK(t.det == doctest::Approx(6.0).epsilon(1e-14));
        CHECK(std::abs(t.det) > 0.0);
    }
    SUBCASE("d2q9 printed anchors") {
        auto t = orthogonal_transform_d2q9(1.0);
        for (int j = 0; j < 9; ++j) CHECK(t.m(0, j) == doctest::Approx(1.0));
        CHECK(t.m(3, 0) == doctest::Approx(-4.0));
        CHECK(std::abs(t.det) > 0.0);
    }
    SUBCASE("inverse identity over a c range") {
        for (double c : {0.1, 0.5, 1.0, 3.0, 10.0}) {
            for (auto* t : {new TransformMatrix(orthogonal_transform_d1q3(c)),
                            new TransformMatrix(orthogonal_transform_d2q9(c))}) {
                Mat prod = t->m * t->minv;
                const int q = static_cast<int>(prod.rows());
                for (int i = 0; i < q; ++i)
                    for (int j = 0; j < q; ++j)
                        CHECK(std::abs(prod(i, j) - (i == j ? 1.0 : 0.0)) < 1e-12);
                delete t;
            }
        }
    }
    SUBCASE("zeroth moment of the normalized equilibrium") {
        auto t = orthogonal_transform_d1q3(1.0);
        auto lat = build_d1q3(1.0, 1.0, 1.0 / 3.0);
        // f^eq at phi=1, u=0 is just the weights
        auto m = t.m.apply(lat.w);
        CHECK(m[0] == doctest::Approx(1.0).epsilon(1e-15));
    }
}

TEST_CASE("relaxation validation") {
    SUBCASE("valid diagonal") {
        Mat s(3, 3);
        s(0, 0) = 1.0;
        s(1, 1) = 0.8;
        s(2, 2) = 1.2;
        auto r = validate_relaxation(s, 1);
        CHECK(r.structure == RelaxationStructure::Diagonal);
    }
    SUBCASE("rate out of range") {
        Mat s(3, 3);
        s(0, 0) = 1.0;
        s(1, 1) = 2.5;
        s(2, 2) = 1.0;
        CHECK_THROWS_AS(validate_relaxation(s, 1), ParameterError);
    }
    SUBCASE("2x2 block in the D2Q9 first-moment rows") {
        Mat s(9, 9);
        for (int i = 0; i < 9; ++i) s(i, i) = 1.0;
        s(1, 1) = 0.8;
        s(1, 2) = 0.4;
        s(2, 1) = 0.4;
        s(2, 2) = 1.2;
        auto r = validate_relaxation(s, 1);
        CHECK(r.structure == RelaxationStructure::BlockLowerTriangular);
        // eigenvalues 1 +- sqrt(0.2), both inside (0,2) -- must not throw
    }
    SUBCASE("block straddling a conserved row") {
        Mat s(3, 3);
        s(0, 0) = 1.0;
        s(0, 1) = 0.1;
        s(1, 1) = 1.0;
        s(2, 2) = 1.0;
        CHECK_THROWS_AS(validate_relaxation(s, 1), ParameterError);
    }
    SUBCASE("block eigenvalue outside range") {
        Mat s(3, 3);
        s(0, 0) = 1.0;
        s(1, 1) = 1.0;
        s(1, 2) = 1.1;
        s(2, 1) = 1.1;
        s(2, 2) = 1.0;
        CHECK_THROWS_AS(validate_relaxation(s, 1), ParameterError);
    }
    SUBCASE("lower-triangular fill is allowed") {
        Mat s(3, 3);
        s(0, 0) = 1.0;
        s(1, 0) = 0.3;
        s(1, 1) = 0.9;
        s(2, 0) = -0.2;
        s(2, 2) = 1.3;
        auto r = validate_relaxation(s, 1);
        CHECK(r.structure == RelaxationStructure::BlockLowerTriangular);
    }
}
