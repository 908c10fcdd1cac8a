#ifndef GPMRT_MODELS_HPP
#define GPMRT_MODELS_HPP

#include <array>
#include <vector>

#include "gpmrt/lattice.hpp"
#include "gpmrt/smallmat.hpp"

namespace gpmrt {

using Vec2 = std::array<double, 2>;
using Mat2 = std::array<std::array<double, 2>, 2>;

// ---------------------------------------------------------------------------
// NACDE:  d_t phi + div B = div[kappa . (div D)] + R
// ---------------------------------------------------------------------------

// Pointwise inputs to the NACDE equilibrium:
//   f_i^eq = w_i [ phi + c_i.B/cs2
//                  + (chi cs2 D + C - cs2 phi I):(c_i c_i - cs2 I)/(2 cs4) ]
struct NacdePoint {
    double phi = 0.0;
    Vec2 b{0.0, 0.0};           // flux vector B(phi)
    Mat2 d{{{0.0, 0.0}, {0.0, 0.0}}};   // tensor D(phi)
    Mat2 c{{{0.0, 0.0}, {0.0, 0.0}}};   // auxiliary moment tensor C(phi)
    double chi = 1.0;
};

std::vector<double> nacde_equilibrium(const NacdePoint& p, const Lattice& lat);

// Auxiliary source G_i = w_i c_i . M1G / cs2 with
//   M1G = (I - R/2) dtB + (I - b R/(2 a^2)) divC,
// where R is the relaxation block acting on the first-order moments.
std::vector<double> nacde_aux_source(const Vec2& dt_b, const Vec2& div_c, const Mat2& r_block,
                                     double a, double b, const Lattice& lat);

// Plain source F_i = w_i R.
std::vector<double> nacde_source(double r_scalar, const Lattice& lat);

// kappa = chi cs2 dt [ S1 + (b/(2a^2) - 1) I ]; S1 is the inverse of the
// relaxation block sitting on the first-order moment rows.
Mat2 kappa_from_s1(const Mat2& s1, double chi, double a, double b, double dt, double cs2);
Mat2 s1_from_kappa(const Mat2& kappa, double chi, double a, double b, double dt, double cs2);
double kappa_from_s1(double s1, double chi, double a, double b, double dt, double cs2);
double s1_from_kappa(double kappa, double chi, double a, double b, double dt, double cs2);
Mat2 invert2(const Mat2& m);

// ---------------------------------------------------------------------------
// NSEs
// ---------------------------------------------------------------------------

std::vector<double> nse_equilibrium(double rho, const Vec2& u, const Lattice& lat);
std::vector<double> nse_force(double rho, const Vec2& u, const Vec2& fhat, const Lattice& lat);
// allocation-free variants for the hot loops
void nse_equilibrium_into(double rho, const Vec2& u, const Lattice& lat, double* out);
void nse_force_into(double rho, const Vec2& u, const Vec2& fhat, const Lattice& lat,
                    double* out);

enum class Scaling { Diffusive, Acoustic };

struct ViscosityRates {
    double s2s, s2b;
};

// Inverts
//   nu   = (1/s2s + b/(2a^2) - 1) cs2 dt
//   nu_b = [ (2/d)(1/s2b + b/(2a^2) - 1) + (b/(2a^2) - 1)   ] cs2 dt   (diffusive)
//   nu_b = [ (2/d)(1/s2b + b/(2a^2) - 1) + (b/(2a^2) - 1/2) ] cs2 dt   (acoustic)
ViscosityRates set_viscosity(double nu, double nu_b, double a, double b, double dt, double cs2,
                             int d, Scaling scaling);
double viscosity_from_rate(double s2s, double a, double b, double dt, double cs2);

// ---------------------------------------------------------------------------
// D1Q3 CDE model of the fourth-order construction
// ---------------------------------------------------------------------------

// f_i^eq = w_i phi [ 1 + c_i u/cs2 + vartheta u^2 (c_i^2 - cs2)/(2 cs4) ],
// vartheta = zeta*xi, zeta = 2(1-w0)/w0,
// xi = (1/s1 - 1/2) / (1/s1 + b/(2a^2) - 1).
double cde_vartheta(double s1, double a, double b, double w0);
std::vector<double> cde_equilibrium_coeffs(double u, double vartheta, const Lattice& lat);

// Population-space equilibrium coefficients E with f^eq = E * phi for the
// linear CDE with constant u (D2Q9 path; chi = 1, D = phi I, C = phi uu).
std::vector<double> cde_linear_equilibrium_coeffs(const Vec2& u, const Lattice& lat);

}  // namespace gpmrt

#endif
