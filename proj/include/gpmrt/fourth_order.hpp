#ifndef GPMRT_FOURTH_ORDER_HPP
#define GPMRT_FOURTH_ORDER_HPP

#include <array>
#include <complex>
#include <optional>
#include <vector>

#include "gpmrt/lattice.hpp"
#include "gpmrt/scheme.hpp"

namespace gpmrt {

// Parameters of the fourth-order D1Q3 model for the 1D CDE.
// eps = kappa*dt/dx^2; vartheta follows from (s1, a, b, w0).
struct FourthOrderParams {
    double eps = 0.0;
    double a = 1.0, b = 1.0;
    double w0 = 0.0;
    double s1 = 0.0, s2 = 0.0;
    double vartheta = 0.0;
};

struct InfeasibleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// a = b = 1 closed form: s1 = 12e/(6e+1), s2 = 2/(6e+1), w0 = 1-12e^2.
FourthOrderParams closed_form_a1b1(double eps);

struct TrResiduals {
    double tr3, tr4, eps_residual;
};

// the two fourth-order polynomials and the eps relation, evaluated as printed
TrResiduals residuals_tr(const FourthOrderParams& p);

// Damped Newton on (TR3, TR4, eps relation) in (s1, s2, w0) with a central
// finite-difference Jacobian, box projection and an 8x8x8 multi-start
// fallback.  Throws InfeasibleError when no root lies inside the box.
FourthOrderParams solve_fourth_order(double eps, double a, double b,
                                     std::optional<std::array<double, 3>> guess = {});

// The thirteen closed-form level coefficients of the three-level D1Q3 CDE
// scheme, in level-major order:
//   [0]: offsets 0, -1, +1 at time n
//   [3]: offsets 0, -1, +1, -2, +2 at time n-1
//   [8]: offsets 0, -1, +1, -2, +2 at time n-2
// Mirror symmetry fixes the slots: +z coefficients equal the -z expressions
// under u -> -u, and the +-2 pairs are even in u with an (a^2-b^2)(s1-1)
// factor, so they vanish for the a = b propagation family.
std::array<double, 13> cde_closed_form_coefficients(double s1, double s2, double w0, double a,
                                                    double b, double c, double u);

// the same coefficients read off a derived scheme (oracle for the above)
std::array<double, 13> scheme_coefficients_d1q3(const MultiLevelScheme& scheme,
                                                const std::vector<double>& em);

// builds the F-GPMRT-LB model spec for given parameters
ModelSpec make_cde_model(const FourthOrderParams& p, double lambda, double u, double s0 = 1.0);

// ---------------------------------------------------------------------------
// linear stability (von Neumann)
// ---------------------------------------------------------------------------

struct StabilityPoint {
    double a, b, eps, u_over_c;
    double max_rho;
    bool stable;
    bool solvable;
};

struct StabilityReport {
    std::vector<StabilityPoint> points;
};

// spectral radius of the D1Q3 amplification matrix
//   G(theta) = T(theta) [ (I - M^-1 S M) + M^-1 S M E 1^T ],
// maximized over theta (coarse scan plus golden-section refinement)
double max_spectral_radius(const ModelSpec& model, const std::vector<double>& epop,
                           int theta_samples = 720);

// eigenvalues of G at a single theta (used by the theta = 0 checks)
std::vector<std::complex<double>> amplification_eigenvalues(const ModelSpec& model,
                                                            const std::vector<double>& epop,
                                                            double theta);

StabilityReport stability_region(double a, double b, const std::vector<double>& eps_grid,
                                 const std::vector<double>& u_over_c_grid, double lambda = 1.0);

}  // namespace gpmrt

#endif
