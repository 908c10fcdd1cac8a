#ifndef GPMRT_STENCIL_HPP
#define GPMRT_STENCIL_HPP

#include <array>
#include <map>
#include <string>
#include <vector>

#include "gpmrt/lattice.hpp"
#include "gpmrt/smallmat.hpp"

namespace gpmrt {

using Offset = std::array<int, 2>;  // [0] unused ... [1] == 0 in 1D

// Finite-difference stencil: a finite real-coefficient polynomial in the
// space shift operators.  Applying to a field h gives
//   (s h)(x) = sum_z  tap(z) * h(x + z*dx).
// Taps are kept in lexicographic offset order so every downstream emission
// is reproducible byte for byte; entries below the prune threshold are
// dropped after arithmetic.
class Stencil {
public:
    using TapMap = std::map<Offset, double>;

    Stencil() = default;
    explicit Stencil(int dim) : dim_(dim) {}

    static Stencil zero(int dim) { return Stencil(dim); }
    static Stencil identity(int dim) { return shift(dim, {0, 0}); }
    static Stencil shift(int dim, Offset z, double coeff = 1.0) {
        Stencil s(dim);
        if (coeff != 0.0) s.taps_[z] = coeff;
        return s;
    }

    static double prune_threshold() { return prune_threshold_; }
    static void set_prune_threshold(double t) { prune_threshold_ = t; }

    int dim() const { return dim_; }
    bool empty() const { return taps_.empty(); }
    std::size_t size() const { return taps_.size(); }
    const TapMap& taps() const { return taps_; }

    double tap(Offset z) const {
        auto it = taps_.find(z);
        return it == taps_.end() ? 0.0 : it->second;
    }

    double sum() const {
        double s = 0.0;
        for (auto& [z, v] : taps_) s += v;
        return s;
    }

    double max_abs() const {
        double m = 0.0;
        for (auto& [z, v] : taps_) m = std::max(m, std::abs(v));
        return m;
    }

    int radius() const {
        int r = 0;
        for (auto& [z, v] : taps_) r = std::max({r, std::abs(z[0]), std::abs(z[1])});
        return r;
    }

    void add_tap(Offset z, double coeff) {
        double& v = taps_[z];
        v += coeff;
        if (std::abs(v) < prune_threshold_) taps_.erase(z);
    }

    Stencil& operator+=(const Stencil& o);
    Stencil& operator-=(const Stencil& o);
    Stencil operator+(const Stencil& o) const {
        Stencil r = *this;
        r += o;
        return r;
    }
    Stencil operator-(const Stencil& o) const {
        Stencil r = *this;
        r -= o;
        return r;
    }
    Stencil operator*(const Stencil& o) const;  // offset-wise convolution
    Stencil scaled(double f) const;

    void prune();

private:
    static double prune_threshold_;
    int dim_ = 1;
    TapMap taps_;
};

Stencil stencil_add(const Stencil& a, const Stencil& b);
Stencil stencil_mul(const Stencil& a, const Stencil& b);

// q x q matrix over the stencil ring.
struct StencilMatrix {
    int q = 0;
    int dim = 1;
    std::vector<Stencil> e;  // row-major

    StencilMatrix() = default;
    StencilMatrix(int q_, int dim_) : q(q_), dim(dim_), e(q_ * q_, Stencil(dim_)) {}

    static StencilMatrix identity(int q, int dim) {
        StencilMatrix m(q, dim);
        for (int i = 0; i < q; ++i) m.at(i, i) = Stencil::identity(dim);
        return m;
    }
    // embed a constant matrix as offset-0 stencils
    static StencilMatrix constant(const Mat& c, int dim);

    Stencil& at(int i, int j) { return e[i * q + j]; }
    const Stencil& at(int i, int j) const { return e[i * q + j]; }

    StencilMatrix operator*(const StencilMatrix& o) const;
    StencilMatrix operator+(const StencilMatrix& o) const;
    StencilMatrix operator-(const StencilMatrix& o) const;
    StencilMatrix scaled(double f) const;
    Stencil trace() const;
    double max_abs() const;
};

// Monic characteristic polynomial p_A(x) = sum_k gamma[k] x^k  (gamma[q] == 1),
// computed with the Faddeev-LeVerrier recursion over the commutative ring.
struct CharPoly {
    std::vector<Stencil> gamma;  // size q+1, ascending powers
};

CharPoly char_poly(const StencilMatrix& a);

// Diagonal propagation operator T; entry i is p0*T^0 + pm1*T^{-e_i} + p1*T^{+e_i}
// with p0 = 1-b, pm1 = (a+b)/2, p1 = (b-a)/2.  Requires a^2 <= b <= 1 unless
// warn_only is set.
StencilMatrix build_tbar(const Lattice& lat, double a, double b, bool warn_only = false);

struct PropagationWeights {
    double p0, pm1, p1;
};
PropagationWeights propagation_weights(double a, double b, bool warn_only = false);

struct WabTriple {
    StencilMatrix w, a, b;
};

// W = M Tbar M^{-1},  A = W (I - S),  B = W S.
WabTriple build_w_a_b(const TransformMatrix& m, const Mat& s, const StencilMatrix& tbar);

// CSV rows "offset_x[,offset_y],coefficient" in deterministic order.
std::string to_csv(const Stencil& s);
Stencil stencil_from_csv(const std::string& text, int dim);

}  // namespace gpmrt

#endif
