#ifndef GPMRT_SCHEME_HPP
#define GPMRT_SCHEME_HPP

#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gpmrt/grid.hpp"
#include "gpmrt/lattice.hpp"
#include "gpmrt/solver.hpp"
#include "gpmrt/stencil.hpp"

namespace gpmrt {

// A GPMRT-LB instance, the input of the derivation.
struct ModelSpec {
    Lattice lat;
    TransformMatrix tm;
    Mat s;
    double a = 1.0, b = 1.0;
    int n_conserved = 1;
};

// One time level of the derived multi-level scheme (tau steps back from n):
//   contribution = conserved*m_j^{n-tau}
//                + sum_c eq_row[c]*meq_c^{n-tau}
//                + dt * sum_c src_row[c]*Ftil_c^{n-tau}
struct SchemeLevel {
    Stencil conserved;
    std::vector<Stencil> eq_row;
    std::vector<Stencil> src_row;

    bool empty() const;
};

struct MultiLevelScheme {
    int q = 0, dim = 1, n_conserved = 1, target_row = 0;
    std::vector<SchemeLevel> levels;  // tau = 0 .. history-1 (trailing empties trimmed)

    // q+2-N total time levels including the updated one
    int time_levels() const { return q + 2 - n_conserved; }
    int history_depth() const { return static_cast<int>(levels.size()); }
    int max_radius() const;

    // scalar per-level stencils for a linear equilibrium m^eq = em * m_j
    std::vector<Stencil> collapse_linear(const std::vector<double>& em) const;

    std::string dump(const ModelSpec& model) const;
};

double scheme_max_diff(const MultiLevelScheme& s1, const MultiLevelScheme& s2);

// The physically observable form of a scheme under a linear closure
// m^eq = Em (m_1..m_N), Ftil = fm * s(x):  per level, one stencil per
// conserved input plus one source stencil.  Two schemes of equivalent models
// must agree in this form even when their raw slots differ.
struct CollapsedLevels {
    std::vector<std::vector<Stencil>> on_mj;  // [tau][l]
    std::vector<Stencil> on_src;              // [tau]
};

// epop: population equilibrium coefficients per conserved unit (q x N);
// fpop: population source pattern (may be empty).  Moment images are taken
// with the model's own transform.
CollapsedLevels collapse_scheme(const MultiLevelScheme& scheme, const ModelSpec& model,
                                const Mat& epop, const std::vector<double>& fpop);
double collapsed_max_diff(const CollapsedLevels& a, const CollapsedLevels& b);

struct DeriveOptions {
    // Proposition-2 route (A_j = A P_j with the original S) instead of the
    // normalized-S shortcut; both must emit identical schemes.
    bool general_path = false;
    // accept propagation parameters slightly outside [a^2, 1]
    bool warn_only = false;
};

MultiLevelScheme derive_scheme(const ModelSpec& model, int j, DeriveOptions opts = {});

// S with conserved rows/columns replaced by the identity block
Mat normalized_relaxation(const Mat& s, int n_conserved);

// Theorem-1 transform: (NM, NSN^{-1}); Nmat must be block-lower-triangular
// w.r.t. the conserved split and preserve the first N rows of M.
ModelSpec equivalent_model(const ModelSpec& model, const Mat& nmat);

// max scheme-coefficient deviation when the conserved-row relaxation S(j,j)
// sweeps over the given values
double relaxation_independence_check(const ModelSpec& model, int j,
                                     const std::vector<double>& s_values);

// ---------------------------------------------------------------------------
// Applying the scheme
// ---------------------------------------------------------------------------

// dst += scale * (stencil src) with periodic wrap in both directions
void apply_stencil_periodic(const Stencil& st, const Plane& src, const Grid& g, double scale,
                            Plane& dst);

struct SchemeSnapshot {
    std::vector<Plane> mj;    // conserved planes (size N)
    std::vector<Plane> meq;   // moment-equilibrium planes (size q)
    std::vector<Plane> ftil;  // source-moment planes (size q; may be empty)
};

// Recomputes meq/ftil (and anything model-specific) from freshly updated
// conserved planes, closing the nonlinear loop.
using SchemeClosure =
    std::function<void(const std::vector<Plane>& mj, const SchemeSnapshot* prev,
                       SchemeSnapshot& out)>;

struct BootstrapError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// General multi-level driver on a periodic grid; snapshots are rebuilt by the
// closure after every step.
class FdSolver {
public:
    FdSolver(std::vector<MultiLevelScheme> schemes, Grid grid, SchemeClosure closure);

    void push_snapshot(SchemeSnapshot snap);  // oldest first
    void step();
    const Plane& conserved(int j) const { return history_.front().mj[j]; }
    int history_needed() const { return depth_; }
    const std::deque<SchemeSnapshot>& history() const { return history_; }

private:
    std::vector<MultiLevelScheme> schemes_;
    Grid grid_;
    SchemeClosure closure_;
    std::deque<SchemeSnapshot> history_;  // front = newest
    int depth_ = 0;
};

// Scalar fast path for linear models (m^eq = em*phi, optional linear source
// chain); periodic only.
class CollapsedFdSolver {
public:
    // level_stencils[tau] acts on phi^{n-tau}
    CollapsedFdSolver(std::vector<Stencil> level_stencils, Grid grid);

    void push_phi(Plane phi);  // oldest first
    void step();
    const Plane& phi() const { return hist_.front(); }
    int history_needed() const { return static_cast<int>(stencils_.size()); }

private:
    std::vector<Stencil> stencils_;
    Grid grid_;
    std::deque<Plane> hist_;
};

// Builds the collapsed per-level stencils for a CdeSolver model, folding the
// auxiliary-source chain (which adds one trailing history level when active).
std::vector<Stencil> collapse_cde_scheme(const MultiLevelScheme& scheme, const CdeSolver& lb);

// Runs the LB solver for (history-1) steps, recording the snapshots the
// scheme consumes.  Throws BootstrapError when steps is insufficient.
CollapsedFdSolver bootstrap_collapsed_from_lb(const MultiLevelScheme& scheme, CdeSolver& lb,
                                              int steps = -1);

}  // namespace gpmrt

#endif
