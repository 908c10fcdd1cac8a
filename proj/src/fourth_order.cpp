#include "gpmrt/fourth_order.hpp"

#include <cmath>

#include "gpmrt/models.hpp"

namespace gpmrt {

namespace {

bool in_box(double s1, double s2, double w0) {
    return s1 > 1e-9 && s1 < 2.0 - 1e-9 && s2 > 1e-9 && s2 < 2.0 - 1e-9 && w0 > 1e-9 &&
           w0 < 1.0 - 1e-9;
}

}  // namespace

FourthOrderParams closed_form_a1b1(double eps) {
    FourthOrderParams p;
    p.eps = eps;
    p.a = p.b = 1.0;
    p.s1 = 12.0 * eps / (6.0 * eps + 1.0);
    p.s2 = 2.0 / (6.0 * eps + 1.0);
    p.w0 = 1.0 - 12.0 * eps * eps;
    if (!in_box(p.s1, p.s2, p.w0))
        throw InfeasibleError("closed_form_a1b1: eps = " + std::to_string(eps) +
                              " leaves the validity box");
    p.vartheta = cde_vartheta(p.s1, p.a, p.b, p.w0);
    return p;
}

TrResiduals residuals_tr(const FourthOrderParams& p) {
    const double a = p.a, b = p.b, s1 = p.s1, s2 = p.s2, w0 = p.w0;
    const double a2 = a * a, a4 = a2 * a2;
    const double s1sq = s1 * s1, s1cu = s1sq * s1;

    const double tr3 = s1sq * s2 * (1.0 - 3.0 * b) + 12.0 * a2 * s2 * (s1 - 1.0) +
                       3.0 * w0 *
                           (2.0 * a2 * (s1 + 2.0 * s2 + s1sq * (s2 - 1.0) - 3.0 * s1 * s2) +
                            b * s1 * (s1 * (1.0 - s2) + s2));

    const double tr4 =
        6.0 * a4 * s2 * (6.0 * s1 - 4.0 - 2.0 * s1cu) + b * s1cu * s2 * (1.0 - 3.0 * b) +
        8.0 * a2 * s1sq * s2 * (1.0 - s1) * (1.0 - 3.0 * b) +
        6.0 * a4 * w0 *
            (4.0 * (s1 + s2 + s1cu + 2.0 * s1sq * (s2 - 1.0)) - 10.0 * s1 * s2 -
             2.0 * s1cu * s2) +
        3.0 * b * b * s1cu * w0 * (2.0 - s2) +
        12.0 * a2 * b * s1 * w0 * (2.0 * s1 * (1.0 - s1) + s2 * ((s1 - 2.0) * s1 + 1.0));

    const double eps_residual =
        p.eps - a2 * (1.0 / s1 + b / (2.0 * a2) - 1.0) * (1.0 - w0);
    return {tr3, tr4, eps_residual};
}

namespace {

std::array<double, 3> residual_vec(double eps, double a, double b, double s1, double s2,
                                   double w0) {
    FourthOrderParams p;
    p.eps = eps;
    p.a = a;
    p.b = b;
    p.s1 = s1;
    p.s2 = s2;
    p.w0 = w0;
    const TrResiduals r = residuals_tr(p);
    return {r.tr3, r.tr4, r.eps_residual};
}

double norm3(const std::array<double, 3>& v) {
    return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
}

bool newton_from(double eps, double a, double b, std::array<double, 3>& x) {
    for (int it = 0; it < 200; ++it) {
        auto f = residual_vec(eps, a, b, x[0], x[1], x[2]);
        const double fn = norm3(f);
        if (fn < 1e-13) return true;
        // central finite-difference Jacobian, h relative 1e-7
        Mat jac(3, 3);
        for (int c = 0; c < 3; ++c) {
            const double h = 1e-7 * std::max(1.0, std::abs(x[c]));
            auto xp = x, xm = x;
            xp[c] += h;
            xm[c] -= h;
            auto fp = residual_vec(eps, a, b, xp[0], xp[1], xp[2]);
            auto fm = residual_vec(eps, a, b, xm[0], xm[1], xm[2]);
            for (int r = 0; r < 3; ++r) jac(r, c) = (fp[r] - fm[r]) / (2.0 * h);
        }
        std::vector<double> rhs = {-f[0], -f[1], -f[2]};
        std::vector<double> dx;
        try {
            auto [inv, det] = lu_invert(jac);
            dx = inv.apply(rhs);
        } catch (const std::runtime_error&) {
            return false;
        }
        // damped update with box projection
        double lam = 1.0;
        bool accepted = false;
        for (int half = 0; half < 30; ++half, lam *= 0.5) {
            std::array<double, 3> xn = {x[0] + lam * dx[0], x[1] + lam * dx[1],
                                        x[2] + lam * dx[2]};
            xn[0] = std::clamp(xn[0], 1e-6, 2.0 - 1e-6);
            xn[1] = std::clamp(xn[1], 1e-6, 2.0 - 1e-6);
            xn[2] = std::clamp(xn[2], 1e-6, 1.0 - 1e-6);
            auto fnv = residual_vec(eps, a, b, xn[0], xn[1], xn[2]);
            if (norm3(fnv) < fn * (1.0 - 1e-4 * lam) || norm3(fnv) < 1e-13) {
                x = xn;
                accepted = true;
                break;
            }
        }
        if (!accepted) return norm3(residual_vec(eps, a, b, x[0], x[1], x[2])) < 1e-11;
    }
    return norm3(residual_vec(eps, a, b, x[0], x[1], x[2])) < 1e-11;
}

}  // namespace

FourthOrderParams solve_fourth_order(double eps, double a, double b,
                                     std::optional<std::array<double, 3>> guess) {
    // b slightly below a^2 is admitted; linear stability is judged separately
    // by the von Neumann scan
    if (!(b > 0.0 && b <= 1.0 + 1e-12))
        throw ParameterError("solve_fourth_order: b outside (0, 1]");

    auto accept = [&](const std::array<double, 3>& x) -> std::optional<FourthOrderParams> {
        if (!in_box(x[0], x[1], x[2])) return std::nullopt;
        auto f = residual_vec(eps, a, b, x[0], x[1], x[2]);
        if (norm3(f) > 1e-10) return std::nullopt;
        FourthOrderParams p;
        p.eps = eps;
        p.a = a;
        p.b = b;
        p.s1 = x[0];
        p.s2 = x[1];
        p.w0 = x[2];
        p.vartheta = cde_vartheta(p.s1, a, b, p.w0);
        return p;
    };

    if (guess) {
        auto x = *guess;
        if (newton_from(eps, a, b, x))
            if (auto p = accept(x)) return *p;
    }
    // multi-start over a coarse grid
    for (int i = 1; i <= 8; ++i)
        for (int j = 1; j <= 8; ++j)
            for (int k = 1; k <= 8; ++k) {
                std::array<double, 3> x = {2.0 * i / 9.0, 2.0 * j / 9.0, k / 9.0};
                if (!newton_from(eps, a, b, x)) continue;
                if (auto p = accept(x)) return *p;
            }
    throw InfeasibleError("solve_fourth_order: no root in the validity box for eps=" +
                          std::to_string(eps) + " a=" + std::to_string(a) +
                          " b=" + std::to_string(b));
}

namespace {

// shared bracket expressions of the printed coefficient sheet; the overall
// division by (b s1 - 2 a^2 s1 + 2 a^2) restores the consistency sum
double theta_denominator(double a, double b, double s1) {
    return b * s1 - 2.0 * a * a * s1 + 2.0 * a * a;
}

double alpha1_expr(double s1, double s2, double w0, double a, double b, double c, double u) {
    const double a2 = a * a, c2 = c * c, u2 = u * u, b2 = b * b, s1q = s1 * s1;
    return 6 * a2 * c2 - 4 * a2 * b * c2 - 8 * a2 * c2 * s1 - 2 * a2 * c2 * s2 -
           b * c2 * s1q - 2 * b2 * c2 * s1 + 2 * a2 * c2 * s1q + b2 * c2 * s1q +
           3 * b * c2 * s1 - 2 * a2 * b * c2 * s1q - b * c2 * s1 * s2 + 6 * a2 * b * c2 * s1 +
           2 * a2 * c2 * s1 * s2 - 2 * a2 * b * s2 * u2 + 2 * a2 * b * c2 * s2 * w0 +
           a2 * b * s1 * s2 * u2 + b2 * c2 * s1 * s2 * w0 - 2 * a2 * b * c2 * s1 * s2 * w0;
}

double alpha2_expr(double s1, double s2, double w0, double a, double b, double c, double u) {
    const double a2 = a * a, a3 = a2 * a, c2 = c * c, u2 = u * u, b2 = b * b, s1q = s1 * s1;
    return 4 * a2 * b * c2 + 2 * b2 * c2 * s1 - b2 * c2 * s1q + 2 * a2 * b * c2 * s1q +
           2 * a3 * c * s1 * u - 6 * a2 * b * c2 * s1 + 2 * a2 * b * s2 * u2 -
           2 * a3 * c * s1q * u - 2 * a2 * b * c2 * s2 * w0 - a2 * b * s1 * s2 * u2 -
           b2 * c2 * s1 * s2 * w0 + a * b * c * s1q * u + 2 * a2 * b * c2 * s1 * s2 * w0;
}

double beta1_expr(double s1, double s2, double w0, double a, double b, double c, double u) {
    const double a2 = a * a, a4 = a2 * a2, c2 = c * c, u2 = u * u;
    const double b2 = b * b, b3 = b2 * b, s1q = s1 * s1;
    return 12 * a2 * c2 + 2 * a4 * c2 - 16 * a2 * b * c2 - 20 * a2 * c2 * s1 -
           8 * a2 * c2 * s2 - 4 * a4 * c2 * s1 - 4 * b * c2 * s1q - 8 * b2 * c2 * s1 +
           3 * b3 * c2 * s1 + 2 * a4 * s2 * u2 + 6 * a2 * b2 * c2 + 8 * a2 * c2 * s1q +
           2 * a4 * c2 * s1q + 6 * b2 * c2 * s1q - 3 * b3 * c2 * s1q + 6 * b * c2 * s1 -
           13 * a2 * b * c2 * s1q - 12 * a2 * b2 * c2 * s1 - 4 * a2 * c2 * s1q * s2 +
           6 * a2 * b2 * s2 * u2 - 2 * b2 * c2 * s1q * s2 + a4 * s1q * s2 * u2 -
           4 * b * c2 * s1 * s2 + 6 * a2 * b2 * c2 * s1q + 29 * a2 * b * c2 * s1 +
           8 * a2 * b * c2 * s2 + 12 * a2 * c2 * s1 * s2 - 4 * a2 * b * s2 * u2 +
           2 * b * c2 * s1q * s2 + 4 * b2 * c2 * s1 * s2 - 2 * a4 * c2 * s2 * w0 -
           3 * a4 * s1 * s2 * u2 + 4 * a2 * b * c2 * s2 * w0 + 6 * a2 * b * s1 * s2 * u2 +
           4 * a4 * c2 * s1 * s2 * w0 + 2 * b2 * c2 * s1 * s2 * w0 -
           3 * b3 * c2 * s1 * s2 * w0 - 6 * a2 * b2 * c2 * s2 * w0 - 2 * a2 * b * s1q * s2 * u2 -
           9 * a2 * b2 * s1 * s2 * u2 - 2 * a4 * c2 * s1q * s2 * w0 -
           2 * b2 * c2 * s1q * s2 * w0 + 3 * a2 * b2 * s1q * s2 * u2 +
           5 * a2 * b * c2 * s1q * s2 * w0 + 12 * a2 * b2 * c2 * s1 * s2 * w0 -
           6 * a2 * b2 * c2 * s1q * s2 * w0 - 9 * a2 * b * c2 * s1 * s2 * w0 +
           4 * a2 * b * c2 * s1q * s2 - 12 * a2 * b * c2 * s1 * s2 + 3 * b3 * c2 * s1q * s2 * w0;
}

double beta2_expr(double s1, double s2, double w0, double a, double b, double c, double u) {
    const double a2 = a * a, a3 = a2 * a, c2 = c * c, u2 = u * u;
    const double b2 = b * b, b3 = b2 * b, s1q = s1 * s1;
    return 2 * b3 * c2 * s1 - 4 * b2 * c2 * s1 - 8 * a2 * b * c2 + 4 * a2 * b2 * c2 -
           4 * a2 * b2 * c2 * s1q * s2 * w0 - 4 * a2 * b * c2 * s1 * s2 * w0 +
           3 * b2 * c2 * s1q - 2 * b3 * c2 * s1q - 6 * a2 * b * c2 * s1q -
           8 * a2 * b2 * c2 * s1 + 4 * a2 * b2 * s2 * u2 - b2 * c2 * s1q * s2 +
           4 * a2 * b2 * c2 * s1q + 14 * a2 * b * c2 * s1 + 4 * a2 * b * c2 * s2 -
           2 * a2 * b * s2 * u2 + 2 * b2 * c2 * s1 * s2 + 2 * a3 * c * s1q * u +
           2 * a2 * b * c2 * s2 * w0 + 3 * a2 * b * s1 * s2 * u2 - 2 * a3 * c * s1q * s2 * u +
           b2 * c2 * s1 * s2 * w0 - 2 * b3 * c2 * s1 * s2 * w0 - 4 * a2 * b2 * c2 * s2 * w0 -
           a2 * b * s1q * s2 * u2 - 6 * a2 * b2 * s1 * s2 * u2 - b2 * c2 * s1q * s2 * w0 +
           2 * b3 * c2 * s1q * s2 * w0 - 6 * a2 * b * c2 * s1 * s2 + 2 * a3 * c * s1 * s2 * u +
           2 * a2 * b2 * s1q * s2 * u2 + 2 * a2 * b * c2 * s1q * s2 * w0 +
           8 * a2 * b2 * c2 * s1 * s2 * w0 - 2 * a3 * c * s1 * u + 2 * a2 * b * c2 * s1q * s2 -
           a * b * c * s1q * u + a * b * c * s1q * s2 * u;
}

double beta4_expr(double s1, double s2, double w0, double a, double b, double c, double u) {
    const double a2 = a * a, c2 = c * c, u2 = u * u;
    // the u^2 part carries (2-s1) while the w0 part carries (1-s1); grouping
    // them under a shared (2-s1) breaks the identity with the derived scheme
    return -(a2 - b * b) * (s1 - 1.0) *
           (2.0 * a2 * c2 * (1.0 - s1) +
            a2 * s2 * ((2.0 - s1) * u2 - 2.0 * w0 * c2 * (1.0 - s1)) +
            b * c2 * s1 * (1.0 - s2 * w0)) /
           4.0;
}

}  // namespace

std::array<double, 13> cde_closed_form_coefficients(double s1, double s2, double w0, double a, double b,
                                             double c, double u) {
    const double den = theta_denominator(a, b, s1);
    if (std::abs(den) < 1e-13)
        throw ParameterError("cde_closed_form_coefficients: degenerate theta denominator");
    const double c2 = c * c;
    const double f1 = 1.0 / (c2 * den);        // alpha1 prefactor
    const double f2 = 1.0 / (2.0 * c2 * den);  // alpha2/3, beta prefactor
    const double f4 = 1.0 / (c2 * den);        // beta4 carries its 1/4 internally

    std::array<double, 13> r{};
    r[0] = f1 * alpha1_expr(s1, s2, w0, a, b, c, u);
    r[1] = f2 * alpha2_expr(s1, s2, w0, a, b, c, u);
    r[2] = f2 * alpha2_expr(s1, s2, w0, a, b, c, -u);
    r[3] = -f2 * beta1_expr(s1, s2, w0, a, b, c, u);
    r[4] = f2 * beta2_expr(s1, s2, w0, a, b, c, u);
    r[5] = f2 * beta2_expr(s1, s2, w0, a, b, c, -u);
    r[6] = f4 * beta4_expr(s1, s2, w0, a, b, c, u);
    r[7] = r[6];  // even in u
    const double g = (s1 - 1.0) * (s2 - 1.0);
    // center tap of the oldest level: (2a^2+6b^2-8b+4)/4 = p0^2+pm1^2+p1^2;
    // it does not vanish at a = b, so no (b^2-a^2) factor belongs here
    r[8] = 0.25 * g * (2.0 * a * a + 6.0 * b * b - 8.0 * b + 4.0);
    r[9] = g * (b - b * b);
    r[10] = r[9];
    r[11] = 0.25 * g * (b * b - a * a);
    r[12] = r[11];
    return r;
}

std::array<double, 13> scheme_coefficients_d1q3(const MultiLevelScheme& scheme,
                                                const std::vector<double>& em) {
    auto levels = scheme.collapse_linear(em);
    std::array<double, 13> r{};
    auto tap = [&](std::size_t tau, int z) {
        return tau < levels.size() ? levels[tau].tap({z, 0}) : 0.0;
    };
    r[0] = tap(0, 0);
    r[1] = tap(0, -1);
    r[2] = tap(0, 1);
    r[3] = tap(1, 0);
    r[4] = tap(1, -1);
    r[5] = tap(1, 1);
    r[6] = tap(1, -2);
    r[7] = tap(1, 2);
    r[8] = tap(2, 0);
    r[9] = tap(2, -1);
    r[10] = tap(2, 1);
    r[11] = tap(2, -2);
    r[12] = tap(2, 2);
    return r;
}

ModelSpec make_cde_model(const FourthOrderParams& p, double lambda, double u, double s0) {
    (void)u;
    ModelSpec model;
    model.lat = build_d1q3(lambda, p.a, p.w0);
    model.tm = orthogonal_transform_d1q3(model.lat.c, 1);
    model.s = Mat(3, 3);
    model.s(0, 0) = s0;
    model.s(1, 1) = p.s1;
    model.s(2, 2) = p.s2;
    model.a = p.a;
    model.b = p.b;
    model.n_conserved = 1;
    return model;
}

// ---------------------------------------------------------------------------
// von Neumann machinery
// ---------------------------------------------------------------------------

namespace {

using cplx = std::complex<double>;

// roots of a monic complex cubic via Durand-Kerner
std::array<cplx, 3> cubic_roots(cplx p, cplx q, cplx r) {
    std::array<cplx, 3> z = {cplx(0.4, 0.9), cplx(0.4, 0.9) * cplx(0.4, 0.9),
                             cplx(0.4, 0.9) * cplx(0.4, 0.9) * cplx(0.4, 0.9)};
    auto poly = [&](cplx x) { return ((x + p) * x + q) * x + r; };
    for (int it = 0; it < 500; ++it) {
        double moved = 0.0;
        for (int i = 0; i < 3; ++i) {
            cplx denom(1.0, 0.0);
            for (int j = 0; j < 3; ++j)
                if (j != i) denom *= z[i] - z[j];
            if (std::abs(denom) < 1e-300) denom = cplx(1e-300, 0.0);
            const cplx d = poly(z[i]) / denom;
            z[i] -= d;
            moved = std::max(moved, std::abs(d));
        }
        if (moved < 1e-15) break;
    }
    return z;
}

struct AmplificationContext {
    Mat g0;  // (I - Lambda) + Lambda E 1^T
    std::array<int, 3> e;
    double p0, pm1, p1;
};

AmplificationContext make_context(const ModelSpec& model, const std::vector<double>& epop) {
    const int q = model.lat.q;
    Mat lambda = model.tm.minv * model.s * model.tm.m;
    Mat g0(q, q);
    for (int i = 0; i < q; ++i)
        for (int j = 0; j < q; ++j) {
            double v = (i == j ? 1.0 : 0.0) - lambda(i, j);
            double le = 0.0;
            for (int k = 0; k < q; ++k) le += lambda(i, k) * epop[k];
            g0(i, j) = v + le;
        }
    AmplificationContext ctx;
    ctx.g0 = std::move(g0);
    for (int i = 0; i < q; ++i) ctx.e[i] = model.lat.e[i][0];
    const auto w = propagation_weights(model.a, model.b, true);
    ctx.p0 = w.p0;
    ctx.pm1 = w.pm1;
    ctx.p1 = w.p1;
    return ctx;
}

std::array<cplx, 3> eigenvalues_at(const AmplificationContext& ctx, double theta) {
    std::array<std::array<cplx, 3>, 3> g;
    for (int i = 0; i < 3; ++i) {
        const cplx em = std::polar(1.0, -theta * ctx.e[i]);
        const cplx ep = std::polar(1.0, theta * ctx.e[i]);
        const cplx t = ctx.p0 + ctx.pm1 * em + ctx.p1 * ep;
        for (int j = 0; j < 3; ++j) g[i][j] = t * ctx.g0(i, j);
    }
    const cplx tr = g[0][0] + g[1][1] + g[2][2];
    cplx tr2(0.0, 0.0);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) tr2 += g[i][j] * g[j][i];
    const cplx c1 = 0.5 * (tr * tr - tr2);
    const cplx det = g[0][0] * (g[1][1] * g[2][2] - g[1][2] * g[2][1]) -
                     g[0][1] * (g[1][0] * g[2][2] - g[1][2] * g[2][0]) +
                     g[0][2] * (g[1][0] * g[2][1] - g[1][1] * g[2][0]);
    return cubic_roots(-tr, c1, -det);
}

double rho_at(const AmplificationContext& ctx, double theta) {
    auto z = eigenvalues_at(ctx, theta);
    return std::max({std::abs(z[0]), std::abs(z[1]), std::abs(z[2])});
}

}  // namespace

std::vector<std::complex<double>> amplification_eigenvalues(const ModelSpec& model,
                                                            const std::vector<double>& epop,
                                                            double theta) {
    auto ctx = make_context(model, epop);
    auto z = eigenvalues_at(ctx, theta);
    return {z.begin(), z.end()};
}

double max_spectral_radius(const ModelSpec& model, const std::vector<double>& epop,
                           int theta_samples) {
    if (model.lat.q != 3)
        throw ParameterError("max_spectral_radius: D1Q3 models only");
    auto ctx = make_context(model, epop);
    const double two_pi = 2.0 * M_PI;
    double best = 0.0, best_theta = 0.0;
    for (int k = 0; k < theta_samples; ++k) {
        const double th = two_pi * k / theta_samples;
        const double r = rho_at(ctx, th);
        if (r > best) {
            best = r;
            best_theta = th;
        }
    }
    // golden-section refinement around the best sample
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double lo = best_theta - two_pi / theta_samples;
    double hi = best_theta + two_pi / theta_samples;
    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
    double f1 = rho_at(ctx, x1), f2 = rho_at(ctx, x2);
    for (int it = 0; it < 60; ++it) {
        if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + gr * (hi - lo);
            f2 = rho_at(ctx, x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - gr * (hi - lo);
            f1 = rho_at(ctx, x1);
        }
    }
    return std::max({best, f1, f2});
}

StabilityReport stability_region(double a, double b, const std::vector<double>& eps_grid,
                                 const std::vector<double>& u_over_c_grid, double lambda) {
    StabilityReport report;
    for (double eps : eps_grid) {
        FourthOrderParams params;
        bool solvable = true;
        try {
            params = solve_fourth_order(eps, a, b);
        } catch (const InfeasibleError&) {
            solvable = false;
        }
        for (double uc : u_over_c_grid) {
            StabilityPoint pt;
            pt.a = a;
            pt.b = b;
            pt.eps = eps;
            pt.u_over_c = uc;
            pt.solvable = solvable;
            if (!solvable) {
                pt.max_rho = std::numeric_limits<double>::quiet_NaN();
                pt.stable = false;
            } else {
                ModelSpec model = make_cde_model(params, lambda, 0.0);
                const double u = uc * model.lat.c;
                auto epop = cde_equilibrium_coeffs(u, params.vartheta, model.lat);
                pt.max_rho = max_spectral_radius(model, epop);
                pt.stable = pt.max_rho <= 1.0 + 1e-10;
            }
            report.points.push_back(pt);
        }
    }
    return report;
}

}  // namespace gpmrt
