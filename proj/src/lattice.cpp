#include "gpmrt/lattice.hpp"

#include <cmath>

namespace gpmrt {

Lattice build_d1q3(double lambda, double a, double w0) {
    if (!(a > 0.0 && a <= 1.0))
        throw ParameterError("build_d1q3: a must lie in (0,1], got " + std::to_string(a));
    if (!(w0 > 0.0 && w0 < 1.0))
        throw ParameterError("build_d1q3: w0 must lie in (0,1), got " + std::to_string(w0));
    Lattice lat;
    lat.d = 1;
    lat.q = 3;
    lat.e = {{{0, 0}}, {{1, 0}}, {{-1, 0}}};
    lat.w = {w0, 0.5 * (1.0 - w0), 0.5 * (1.0 - w0)};
    lat.lambda = lambda;
    lat.a = a;
    lat.c = a * lambda;
    lat.cs2 = (1.0 - w0) * lat.c * lat.c;
    lat.w0 = w0;
    return lat;
}

Lattice build_d2q9(double lambda, double a) {
    if (!(a > 0.0 && a <= 1.0))
        throw ParameterError("build_d2q9: a must lie in (0,1], got " + std::to_string(a));
    Lattice lat;
    lat.d = 2;
    lat.q = 9;
    lat.e = {{{0, 0}},
             {{1, 0}},
             {{0, 1}},
             {{-1, 0}},
             {{0, -1}},
             {{1, 1}},
             {{-1, 1}},
             {{-1, -1}},
             {{1, -1}}};
    const double w0 = 4.0 / 9.0, wa = 1.0 / 9.0, wd = 1.0 / 36.0;
    lat.w = {w0, wa, wa, wa, wa, wd, wd, wd, wd};
    lat.lambda = lambda;
    lat.a = a;
    lat.c = a * lambda;
    lat.cs2 = lat.c * lat.c / 3.0;
    lat.w0 = w0;
    return lat;
}

namespace {

// Every row of the orthogonal transforms is homogeneous in c, so the inverse
// is assembled from the well-conditioned unit-speed inverse with exact
// per-row power scalings.
TransformMatrix finish_transform(Mat unit, const std::vector<int>& row_power, double c,
                                 int n_conserved, TransformFlavor flavor) {
    const std::size_t q = unit.rows();
    TransformMatrix t;
    auto [inv_unit, det_unit] = lu_invert(unit);
    t.m = unit;
    t.minv = inv_unit;
    t.det = det_unit;
    for (std::size_t i = 0; i < q; ++i) {
        double cp = 1.0;
        for (int k = 0; k < row_power[i]; ++k) cp *= c;
        t.det *= cp;
        for (std::size_t j = 0; j < q; ++j) {
            t.m(i, j) = unit(i, j) * cp;
            t.minv(j, i) = inv_unit(j, i) / cp;
        }
    }
    t.n_conserved = n_conserved;
    t.flavor = flavor;
    return t;
}

}  // namespace

TransformMatrix orthogonal_transform_d1q3(double c, int n_conserved) {
    if (!(c > 0.0)) throw ParameterError("orthogonal_transform_d1q3: c must be positive");
    Mat unit(3, 3,
             {1, 1, 1,    //
              0, 1, -1,   //
              -2, 1, 1});
    return finish_transform(std::move(unit), {0, 1, 2}, c, n_conserved,
                            TransformFlavor::Orthogonal);
}

TransformMatrix orthogonal_transform_d2q9(double c, int n_conserved) {
    if (!(c > 0.0)) throw ParameterError("orthogonal_transform_d2q9: c must be positive");
    Mat unit(9, 9,
             {1, 1, 1, 1, 1, 1, 1, 1, 1,           //
              0, 1, 0, -1, 0, 1, -1, -1, 1,        //
              0, 0, 1, 0, -1, 1, 1, -1, -1,        //
              -4, -1, -1, -1, -1, 2, 2, 2, 2,      //
              0, 1, -1, 1, -1, 0, 0, 0, 0,         //
              0, 0, 0, 0, 0, 1, -1, 1, -1,         //
              4, -2, -2, -2, -2, 1, 1, 1, 1,       //
              0, -2, 0, 2, 0, 1, -1, -1, 1,        //
              0, 0, -2, 0, 2, 1, 1, -1, -1});
    return finish_transform(std::move(unit), {0, 1, 1, 2, 2, 2, 4, 3, 3}, c, n_conserved,
                            TransformFlavor::Orthogonal);
}

namespace {

// Eigenvalues of a diagonal block must be real and inside (0,2).
void check_block_rates(const Mat& s, int lo, int hi, std::string& err) {
    const int n = hi - lo;
    auto fail = [&](const std::string& what) {
        err = "relaxation block [" + std::to_string(lo) + "," + std::to_string(hi) +
              "): " + what;
    };
    if (n == 1) {
        const double v = s(lo, lo);
        if (!(v > 0.0 && v < 2.0)) fail("rate " + std::to_string(v) + " outside (0,2)");
        return;
    }
    if (n == 2) {
        const double tr = s(lo, lo) + s(lo + 1, lo + 1);
        const double det = s(lo, lo) * s(lo + 1, lo + 1) - s(lo, lo + 1) * s(lo + 1, lo);
        const double disc = 0.25 * tr * tr - det;
        if (disc < 0.0) {
            fail("complex eigenvalue pair");
            return;
        }
        const double r = std::sqrt(disc);
        const double l1 = 0.5 * tr - r, l2 = 0.5 * tr + r;
        if (!(l1 > 0.0 && l2 < 2.0))
            fail("eigenvalues {" + std::to_string(l1) + "," + std::to_string(l2) +
                 "} outside (0,2)");
        return;
    }
    fail("blocks larger than 2x2 are not supported");
}

}  // namespace

RelaxationMatrix validate_relaxation(const Mat& s, int n_conserved) {
    const int q = static_cast<int>(s.rows());
    if (s.cols() != static_cast<std::size_t>(q))
        throw ParameterError("validate_relaxation: S must be square");

    // The diagonal blocks are the finest intervals covering all entries
    // above the diagonal.
    std::vector<int> block_of(q);
    for (int i = 0; i < q; ++i) block_of[i] = i;
    for (int i = 0; i < q; ++i)
        for (int j = i + 1; j < q; ++j)
            if (s(i, j) != 0.0) {
                const int b = block_of[i];
                for (int k = i; k <= j; ++k) block_of[k] = b;
            }
    // normalize to contiguous intervals
    for (int i = 1; i < q; ++i)
        if (block_of[i] < block_of[i - 1]) block_of[i] = block_of[i - 1];

    RelaxationMatrix result;
    result.s = s;
    bool any_block = false;
    std::string err;
    int i = 0;
    while (i < q) {
        int j = i;
        while (j + 1 < q && block_of[j + 1] == block_of[i]) ++j;
        const int lo = i, hi = j + 1;
        result.blocks.emplace_back(lo, hi);
        if (hi - lo > 1) {
            any_block = true;
            if (lo < n_conserved)
                throw ParameterError(
                    "validate_relaxation: diagonal block straddles a conserved row");
            check_block_rates(s, lo, hi, err);
        } else if (lo >= n_conserved) {
            check_block_rates(s, lo, hi, err);
        } else {
            // Conserved diagonal rates do not affect the scheme; 0 and 1 are
            // also accepted on top of (0,2).
            const double v = s(lo, lo);
            if (!(v == 0.0 || v == 1.0 || (v > 0.0 && v < 2.0)))
                err = "conserved row " + std::to_string(lo) + " rate " + std::to_string(v) +
                      " invalid";
        }
        if (!err.empty()) throw ParameterError("validate_relaxation: " + err);
        i = hi;
    }

    // Any strictly lower-triangular fill outside the diagonal blocks makes the
    // matrix block-lower-triangular rather than diagonal.
    for (int r = 0; r < q; ++r)
        for (int cidx = 0; cidx < r; ++cidx) {
            if (s(r, cidx) == 0.0) continue;
            bool inside_block = false;
            for (auto [lo, hi] : result.blocks)
                if (r >= lo && r < hi && cidx >= lo && cidx < hi) inside_block = true;
            if (!inside_block) any_block = true;
        }

    result.structure = any_block ? RelaxationStructure::BlockLowerTriangular
                                 : RelaxationStructure::Diagonal;
    return result;
}

}  // namespace gpmrt
