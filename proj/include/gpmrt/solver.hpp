#ifndef GPMRT_SOLVER_HPP
#define GPMRT_SOLVER_HPP

#include <functional>
#include <optional>
#include <vector>

#include "gpmrt/grid.hpp"
#include "gpmrt/lattice.hpp"
#include "gpmrt/models.hpp"
#include "gpmrt/smallmat.hpp"
#include "gpmrt/stencil.hpp"

namespace gpmrt {

struct DivergenceError : std::runtime_error {
    int step;
    explicit DivergenceError(int n)
        : std::runtime_error("solver diverged (NaN) at step " + std::to_string(n)), step(n) {}
};

// Population field, one plane per discrete velocity.
struct PopulationField {
    Grid grid;
    std::vector<Plane> f;

    PopulationField() = default;
    PopulationField(const Grid& g, int q) : grid(g), f(q, Plane(g.size(), 0.0)) {}
    int q() const { return static_cast<int>(f.size()); }
};

// --- reference operations (per-site, used by tests and small problems) -----

// Moment-space collision m* = (I-S)m + S m_eq + dt*Ftil for a single site.
std::vector<double> collide_site(const std::vector<double>& f_site, const TransformMatrix& tm,
                                 const Mat& s, const std::vector<double>& feq_site,
                                 const std::vector<double>& src_site, double dt);

// General-propagation pull with periodic wrap (and the generalized halfway
// bounce-back on channel walls): populations whose source row lies outside
// the domain are reconstructed from the reversed direction at the node.
void propagate(const PopulationField& fstar, const Lattice& lat, double a, double b,
               PopulationField& out);

// index of the reversed direction (lambda_ibar = -lambda_i)
int reverse_index(const Lattice& lat, int i);

// --- linear convection-diffusion solver (D1Q3 / D2Q9, periodic) ------------

struct CdeModel {
    Lattice lat;
    TransformMatrix tm;
    Mat s;                  // relaxation matrix
    double a = 1.0, b = 1.0;
    std::vector<double> epop;  // f^eq = epop * phi
    // optional auxiliary source (NACDE G_i); needs u and the relaxation block
    bool with_g = false;
    Vec2 u{0.0, 0.0};
    Mat2 r_block{{{0.0, 0.0}, {0.0, 0.0}}};  // inv(S1) acting on first moments
    double source_r = 0.0;  // constant scalar source R
};

class CdeSolver {
public:
    CdeSolver(CdeModel model, const Grid& grid);

    void set_phi(const Plane& phi);  // equilibrium initialization
    // Equilibrium start plus the slow-manifold nonequilibrium correction,
    // built from supplied derivative planes (any may be null):
    //   order 1: -dx Shat^-1 C (d/dx, d/dy) m^eq
    //   order 2 (1D): adds the dt-transport and second-shift terms
    // kappa_eff enters the order-2 time-derivative closure.
    void set_phi_corrected(const Plane& phi, const Plane* ddx, const Plane* ddy,
                           const Plane* d2dx2, int order, double kappa_eff = 0.0);
    void step();
    void run(int steps);

    const Plane& phi() const { return phi_; }
    const Plane& phi_prev() const { return phi_prev_; }
    const PopulationField& field() const { return f_; }
    PopulationField& field() { return f_; }
    const CdeModel& model() const { return model_; }
    const Grid& grid() const { return grid_; }
    int steps_taken() const { return steps_; }
    double total_mass() const;

    // moment-space equilibrium coefficients (m^eq = em * phi)
    const std::vector<double>& moment_eq_coeffs() const { return em_; }
    // source moments Ftil = M(G+F) for the current (phi, phi_prev) pair;
    // shared with the finite-difference path so both close identically
    void source_moments(const Plane& phi, const Plane& phi_prev, std::vector<Plane>& ftil) const;
    bool has_source() const { return model_.with_g || model_.source_r != 0.0; }

private:
    void collide();
    void refresh_phi();

    CdeModel model_;
    Grid grid_;
    PopulationField f_, fstar_;
    Plane phi_, phi_prev_;
    // rank-structured collision operator: f* = f^eq + U (V f - v0 phi)
    Mat u_, v_;
    std::vector<double> v0_;
    std::vector<double> em_;
    int steps_ = 0;
};

// --- Navier-Stokes solver (D2Q9, Remark-1 force handling) ------------------

struct NsePhysModel {
    Lattice lat;
    TransformMatrix tm;  // n_conserved = 3
    Mat s;
    double a = 1.0, b = 1.0;
    Vec2 fhat{0.0, 0.0};  // constant body acceleration
};

class NseSolver {
public:
    NseSolver(NsePhysModel model, const Grid& grid);

    void init_rest(double rho0);  // rho = rho0, u = 0 equilibrium start
    void step();
    void run(int steps);
    // runs until the relative 100-step velocity change drops below tol
    int run_to_steady(double tol, int max_steps);

    void macros(Plane& rho, Plane& ux, Plane& uy) const;
    const NsePhysModel& model() const { return model_; }
    const Grid& grid() const { return grid_; }
    const PopulationField& field() const { return f_; }

    // conserved moments mbar_{1..3} and the scheme-facing snapshot fields
    void conserved(std::vector<Plane>& mbar) const;
    void scheme_snapshot(std::vector<Plane>& meq_slot, std::vector<Plane>& ftil_slot) const;
    // same evaluation from given macroscopic fields (used by the FD path)
    void scheme_fields_from_macros(const Plane& rho, const Plane& ux, const Plane& uy,
                                   std::vector<Plane>& meq_slot,
                                   std::vector<Plane>& ftil_slot) const;
    void macros_from_conserved(const std::vector<Plane>& mbar, Plane& rho, Plane& ux,
                               Plane& uy) const;

private:
    void collide();

    NsePhysModel model_;
    Grid grid_;
    PopulationField f_, fstar_;
    Mat u_, v_;
    int steps_ = 0;
};

// thread-pool style parallel loop over [0, n); honors GPMRT_THREADS.
// work is the approximate site count per row; small totals run serially.
void parallel_rows(int n, const std::function<void(int, int)>& body, int work = 1 << 20);

}  // namespace gpmrt

#endif
