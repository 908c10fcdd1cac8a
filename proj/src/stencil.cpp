#include "gpmrt/stencil.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace gpmrt {

double Stencil::prune_threshold_ = 1e-14;

Stencil& Stencil::operator+=(const Stencil& o) {
    if (dim_ != o.dim_ && !o.taps_.empty() && !taps_.empty())
        throw ParameterError("stencil add: dimension mismatch");
    if (taps_.empty()) dim_ = o.dim_;
    for (auto& [z, v] : o.taps_) add_tap(z, v);
    return *this;
}

Stencil& Stencil::operator-=(const Stencil& o) {
    if (dim_ != o.dim_ && !o.taps_.empty() && !taps_.empty())
        throw ParameterError("stencil sub: dimension mismatch");
    if (taps_.empty()) dim_ = o.dim_;
    for (auto& [z, v] : o.taps_) add_tap(z, -v);
    return *this;
}

Stencil Stencil::operator*(const Stencil& o) const {
    if (dim_ != o.dim_)
        throw ParameterError("stencil mul: dimension mismatch");
    Stencil r(dim_);
    for (auto& [za, va] : taps_)
        for (auto& [zb, vb] : o.taps_) {
            Offset z{za[0] + zb[0], za[1] + zb[1]};
            r.taps_[z] += va * vb;
        }
    r.prune();
    return r;
}

Stencil Stencil::scaled(double f) const {
    Stencil r(dim_);
    for (auto& [z, v] : taps_) {
        const double nv = v * f;
        if (std::abs(nv) >= prune_threshold_) r.taps_[z] = nv;
    }
    return r;
}

void Stencil::prune() {
    for (auto it = taps_.begin(); it != taps_.end();) {
        if (std::abs(it->second) < prune_threshold_)
            it = taps_.erase(it);
        else
            ++it;
    }
}

Stencil stencil_add(const Stencil& a, const Stencil& b) { return a + b; }
Stencil stencil_mul(const Stencil& a, const Stencil& b) { return a * b; }

StencilMatrix StencilMatrix::constant(const Mat& c, int dim) {
    StencilMatrix m(static_cast<int>(c.rows()), dim);
    for (int i = 0; i < m.q; ++i)
        for (int j = 0; j < m.q; ++j)
            if (c(i, j) != 0.0) m.at(i, j) = Stencil::shift(dim, {0, 0}, c(i, j));
    return m;
}

StencilMatrix StencilMatrix::operator*(const StencilMatrix& o) const {
    if (q != o.q) throw ParameterError("stencil matrix mul: size mismatch");
    StencilMatrix r(q, dim);
    for (int i = 0; i < q; ++i)
        for (int k = 0; k < q; ++k) {
            const Stencil& aik = at(i, k);
            if (aik.empty()) continue;
            for (int j = 0; j < q; ++j) {
                if (o.at(k, j).empty()) continue;
                r.at(i, j) += aik * o.at(k, j);
            }
        }
    return r;
}

StencilMatrix StencilMatrix::operator+(const StencilMatrix& o) const {
    StencilMatrix r = *this;
    for (int i = 0; i < q * q; ++i) r.e[i] += o.e[i];
    return r;
}

StencilMatrix StencilMatrix::operator-(const StencilMatrix& o) const {
    StencilMatrix r = *this;
    for (int i = 0; i < q * q; ++i) r.e[i] -= o.e[i];
    return r;
}

StencilMatrix StencilMatrix::scaled(double f) const {
    StencilMatrix r = *this;
    for (auto& s : r.e) s = s.scaled(f);
    return r;
}

Stencil StencilMatrix::trace() const {
    Stencil t(dim);
    for (int i = 0; i < q; ++i) t += at(i, i);
    return t;
}

double StencilMatrix::max_abs() const {
    double m = 0.0;
    for (auto& s : e) m = std::max(m, s.max_abs());
    return m;
}

CharPoly char_poly(const StencilMatrix& a) {
    const int q = a.q;
    const int dim = a.dim;
    // p(x) = x^q + c[q-1] x^{q-1} + ... + c[0]
    std::vector<Stencil> c(q, Stencil(dim));
    StencilMatrix mk = StencilMatrix::identity(q, dim);
    for (int k = 1; k <= q; ++k) {
        StencilMatrix am = a * mk;
        Stencil ck = am.trace().scaled(-1.0 / k);
        c[q - k] = ck;
        if (k < q) {
            mk = am;
            for (int i = 0; i < q; ++i) mk.at(i, i) += ck;
        }
    }
    CharPoly p;
    p.gamma.resize(q + 1, Stencil(dim));
    for (int k = 0; k < q; ++k) p.gamma[k] = c[k];
    p.gamma[q] = Stencil::identity(dim);
    return p;
}

PropagationWeights propagation_weights(double a, double b, bool warn_only) {
    if (!warn_only && !(b >= a * a - 1e-15 && b <= 1.0 + 1e-15))
        throw ParameterError("propagation: b must lie in [a^2, 1], got a=" +
                             std::to_string(a) + " b=" + std::to_string(b));
    return {1.0 - b, 0.5 * (a + b), 0.5 * (b - a)};
}

StencilMatrix build_tbar(const Lattice& lat, double a, double b, bool warn_only) {
    const auto p = propagation_weights(a, b, warn_only);
    StencilMatrix t(lat.q, lat.d);
    for (int i = 0; i < lat.q; ++i) {
        Stencil s(lat.d);
        s.add_tap({0, 0}, p.p0);
        s.add_tap({-lat.e[i][0], -lat.e[i][1]}, p.pm1);
        s.add_tap({lat.e[i][0], lat.e[i][1]}, p.p1);
        t.at(i, i) = s;
    }
    return t;
}

WabTriple build_w_a_b(const TransformMatrix& m, const Mat& s, const StencilMatrix& tbar) {
    const int q = tbar.q;
    const int dim = tbar.dim;
    StencilMatrix mm = StencilMatrix::constant(m.m, dim);
    StencilMatrix mi = StencilMatrix::constant(m.minv, dim);
    WabTriple r;
    r.w = mm * tbar * mi;
    Mat iq = Mat::identity(q);
    r.a = r.w * StencilMatrix::constant(iq - s, dim);
    r.b = r.w * StencilMatrix::constant(s, dim);
    return r;
}

std::string to_csv(const Stencil& s) {
    std::ostringstream out;
    char buf[40];
    for (auto& [z, v] : s.taps()) {
        out << z[0];
        if (s.dim() == 2) out << ',' << z[1];
        auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
        out << ',' << std::string_view(buf, p - buf) << '\n';
    }
    return out.str();
}

Stencil stencil_from_csv(const std::string& text, int dim) {
    Stencil s(dim);
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string tok;
        Offset z{0, 0};
        std::getline(ls, tok, ',');
        z[0] = std::stoi(tok);
        if (dim == 2) {
            std::getline(ls, tok, ',');
            z[1] = std::stoi(tok);
        }
        std::getline(ls, tok, ',');
        s.add_tap(z, std::stod(tok));
    }
    return s;
}

}  // namespace gpmrt
