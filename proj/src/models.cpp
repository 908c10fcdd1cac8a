#include "gpmrt/models.hpp"

#include <cmath>

namespace gpmrt {

std::vector<double> nacde_equilibrium(const NacdePoint& p, const Lattice& lat) {
    const double cs2 = lat.cs2;
    const double cs4 = cs2 * cs2;
    std::vector<double> feq(lat.q);
    // second-moment target minus cs2 phi I; tensor indices run over lat.d only
    Mat2 t{};
    for (int al = 0; al < lat.d; ++al)
        for (int be = 0; be < lat.d; ++be)
            t[al][be] = p.chi * cs2 * p.d[al][be] + p.c[al][be] - (al == be ? cs2 * p.phi : 0.0);
    for (int i = 0; i < lat.q; ++i) {
        const double cx = lat.c * lat.e[i][0];
        const double cy = lat.c * lat.e[i][1];
        const double cb = cx * p.b[0] + cy * p.b[1];
        double contr = t[0][0] * (cx * cx - cs2);
        if (lat.d == 2)
            contr += t[1][1] * (cy * cy - cs2) + (t[0][1] + t[1][0]) * cx * cy;
        feq[i] = lat.w[i] * (p.phi + cb / cs2 + contr / (2.0 * cs4));
    }
    return feq;
}

std::vector<double> nacde_aux_source(const Vec2& dt_b, const Vec2& div_c, const Mat2& r_block,
                                     double a, double b, const Lattice& lat) {
    const double h = b / (2.0 * a * a);
    Vec2 m1g;
    for (int al = 0; al < 2; ++al) {
        double v = dt_b[al] + div_c[al];
        for (int be = 0; be < 2; ++be)
            v -= r_block[al][be] * (h * dt_b[be] + 0.5 * div_c[be]);
        m1g[al] = v;
    }
    std::vector<double> g(lat.q);
    for (int i = 0; i < lat.q; ++i) {
        const double cx = lat.c * lat.e[i][0];
        const double cy = lat.c * lat.e[i][1];
        g[i] = lat.w[i] * (cx * m1g[0] + cy * m1g[1]) / lat.cs2;
    }
    return g;
}

std::vector<double> nacde_source(double r_scalar, const Lattice& lat) {
    std::vector<double> f(lat.q);
    for (int i = 0; i < lat.q; ++i) f[i] = lat.w[i] * r_scalar;
    return f;
}

Mat2 invert2(const Mat2& m) {
    const double det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if (std::abs(det) < 1e-300) throw ParameterError("invert2: singular block");
    return {{{m[1][1] / det, -m[0][1] / det}, {-m[1][0] / det, m[0][0] / det}}};
}

Mat2 kappa_from_s1(const Mat2& s1, double chi, double a, double b, double dt, double cs2) {
    const double sh = b / (2.0 * a * a) - 1.0;
    Mat2 k;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            k[i][j] = chi * cs2 * dt * (s1[i][j] + (i == j ? sh : 0.0));
    return k;
}

Mat2 s1_from_kappa(const Mat2& kappa, double chi, double a, double b, double dt, double cs2) {
    const double sh = b / (2.0 * a * a) - 1.0;
    Mat2 s1;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            s1[i][j] = kappa[i][j] / (chi * cs2 * dt) - (i == j ? sh : 0.0);
    // The relaxation block actually entering S is inv(S1); its eigenvalues
    // must be valid rates.
    const Mat2 r = invert2(s1);
    const double tr = r[0][0] + r[1][1];
    const double det = r[0][0] * r[1][1] - r[0][1] * r[1][0];
    const double disc = 0.25 * tr * tr - det;
    if (disc >= 0.0) {
        const double sq = std::sqrt(disc);
        const double l1 = 0.5 * tr - sq, l2 = 0.5 * tr + sq;
        if (!(l1 > 0.0 && l2 < 2.0))
            throw ParameterError("s1_from_kappa: relaxation rates outside (0,2)");
    }
    return s1;
}

double kappa_from_s1(double s1, double chi, double a, double b, double dt, double cs2) {
    return chi * cs2 * dt * (s1 + b / (2.0 * a * a) - 1.0);
}

double s1_from_kappa(double kappa, double chi, double a, double b, double dt, double cs2) {
    const double s1 = kappa / (chi * cs2 * dt) - (b / (2.0 * a * a) - 1.0);
    const double rate = 1.0 / s1;
    if (!(rate > 0.0 && rate < 2.0))
        throw ParameterError("s1_from_kappa: rate " + std::to_string(rate) +
                             " outside (0,2)");
    return s1;
}

void nse_equilibrium_into(double rho, const Vec2& u, const Lattice& lat, double* out) {
    const double cs2 = lat.cs2;
    const double cs4 = cs2 * cs2;
    for (int i = 0; i < lat.q; ++i) {
        const double cx = lat.c * lat.e[i][0];
        const double cy = lat.c * lat.e[i][1];
        const double cu = cx * u[0] + cy * u[1];
        const double uu_cc = u[0] * u[0] * (cx * cx - cs2) + u[1] * u[1] * (cy * cy - cs2) +
                             2.0 * u[0] * u[1] * cx * cy;
        out[i] = lat.w[i] * rho * (1.0 + cu / cs2 + uu_cc / (2.0 * cs4));
    }
}

std::vector<double> nse_equilibrium(double rho, const Vec2& u, const Lattice& lat) {
    std::vector<double> feq(lat.q);
    nse_equilibrium_into(rho, u, lat, feq.data());
    return feq;
}

void nse_force_into(double rho, const Vec2& u, const Vec2& fhat, const Lattice& lat,
                    double* out) {
    const double cs2 = lat.cs2;
    const double cs4 = cs2 * cs2;
    // (Fu + (Fu)^T)
    Mat2 fu;
    for (int al = 0; al < 2; ++al)
        for (int be = 0; be < 2; ++be) fu[al][be] = fhat[al] * u[be] + fhat[be] * u[al];
    for (int i = 0; i < lat.q; ++i) {
        const double cx = lat.c * lat.e[i][0];
        const double cy = lat.c * lat.e[i][1];
        const double cf = cx * fhat[0] + cy * fhat[1];
        const double contr = fu[0][0] * (cx * cx - cs2) + fu[1][1] * (cy * cy - cs2) +
                             (fu[0][1] + fu[1][0]) * cx * cy;
        out[i] = lat.w[i] * rho * (cf / cs2 + contr / (2.0 * cs4));
    }
}

std::vector<double> nse_force(double rho, const Vec2& u, const Vec2& fhat, const Lattice& lat) {
    std::vector<double> f(lat.q);
    nse_force_into(rho, u, fhat, lat, f.data());
    return f;
}

ViscosityRates set_viscosity(double nu, double nu_b, double a, double b, double dt, double cs2,
                             int d, Scaling scaling) {
    const double h = b / (2.0 * a * a);
    const double inv_s2s = nu / (cs2 * dt) - h + 1.0;
    if (!(inv_s2s > 0.5)) throw ParameterError("set_viscosity: shear rate >= 2 infeasible");
    const double s2s = 1.0 / inv_s2s;
    if (!(s2s > 0.0 && s2s < 2.0))
        throw ParameterError("set_viscosity: shear rate outside (0,2)");

    const double tail = (scaling == Scaling::Diffusive) ? (h - 1.0) : (h - 0.5);
    const double inv_s2b = (nu_b / (cs2 * dt) - tail) * d / 2.0 - h + 1.0;
    if (!(inv_s2b > 0.5)) throw ParameterError("set_viscosity: bulk rate >= 2 infeasible");
    const double s2b = 1.0 / inv_s2b;
    if (!(s2b > 0.0 && s2b < 2.0))
        throw ParameterError("set_viscosity: bulk rate outside (0,2)");
    return {s2s, s2b};
}

double viscosity_from_rate(double s2s, double a, double b, double dt, double cs2) {
    return (1.0 / s2s + b / (2.0 * a * a) - 1.0) * cs2 * dt;
}

double cde_vartheta(double s1, double a, double b, double w0) {
    const double zeta = 2.0 * (1.0 - w0) / w0;
    const double xi = (1.0 / s1 - 0.5) / (1.0 / s1 + b / (2.0 * a * a) - 1.0);
    return zeta * xi;
}

std::vector<double> cde_equilibrium_coeffs(double u, double vartheta, const Lattice& lat) {
    const double cs2 = lat.cs2;
    const double cs4 = cs2 * cs2;
    std::vector<double> e(lat.q);
    for (int i = 0; i < lat.q; ++i) {
        const double ci = lat.c * lat.e[i][0];
        e[i] = lat.w[i] *
               (1.0 + ci * u / cs2 + vartheta * u * u * (ci * ci - cs2) / (2.0 * cs4));
    }
    return e;
}

std::vector<double> cde_linear_equilibrium_coeffs(const Vec2& u, const Lattice& lat) {
    NacdePoint p;
    p.phi = 1.0;
    p.b = {u[0], u[1]};
    p.d = {{{1.0, 0.0}, {0.0, 1.0}}};
    p.c = {{{u[0] * u[0], u[0] * u[1]}, {u[1] * u[0], u[1] * u[1]}}};
    p.chi = 1.0;
    return nacde_equilibrium(p, lat);
}

}  // namespace gpmrt
