#include "gpmrt/solver.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>

namespace gpmrt {

namespace {

int thread_count() {
    static int n = [] {
        if (const char* env = std::getenv("GPMRT_THREADS")) {
            const int v = std::atoi(env);
            if (v > 0) return v;
        }
        const unsigned hc = std::thread::hardware_concurrency();
        return hc ? static_cast<int>(hc) : 1;
    }();
    return n;
}

}  // namespace

void parallel_rows(int n, const std::function<void(int, int)>& body, int work) {
    const int nt = std::min(thread_count(), n);
    if (nt <= 1 || n < 4 || static_cast<long long>(n) * work < 16384) {
        body(0, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(nt - 1);
    const int chunk = (n + nt - 1) / nt;
    for (int t = 1; t < nt; ++t) {
        const int lo = t * chunk, hi = std::min(n, lo + chunk);
        if (lo < hi) pool.emplace_back(body, lo, hi);
    }
    body(0, std::min(n, chunk));
    for (auto& th : pool) th.join();
}

std::vector<double> collide_site(const std::vector<double>& f_site, const TransformMatrix& tm,
                                 const Mat& s, const std::vector<double>& feq_site,
                                 const std::vector<double>& src_site, double dt) {
    const int q = static_cast<int>(f_site.size());
    std::vector<double> m = tm.m.apply(f_site);
    std::vector<double> meq = tm.m.apply(feq_site);
    std::vector<double> mstar(q, 0.0);
    for (int i = 0; i < q; ++i) {
        double v = m[i];
        for (int j = 0; j < q; ++j) v += s(i, j) * (meq[j] - m[j]);
        mstar[i] = v;
    }
    if (!src_site.empty()) {
        std::vector<double> ft = tm.m.apply(src_site);
        for (int i = 0; i < q; ++i) mstar[i] += dt * ft[i];
    }
    return tm.minv.apply(mstar);
}

int reverse_index(const Lattice& lat, int i) {
    for (int j = 0; j < lat.q; ++j)
        if (lat.e[j][0] == -lat.e[i][0] && lat.e[j][1] == -lat.e[i][1]) return j;
    throw std::logic_error("reverse_index: lattice not symmetric");
}

namespace {

// dst[x] += p * src[wrap(x + shift)] over one row, x-periodic
inline void pull_row_wrapped(double* dst, const double* src, int nx, int shift, double p) {
    if (p == 0.0) return;
    if (shift == 0) {
        for (int x = 0; x < nx; ++x) dst[x] += p * src[x];
        return;
    }
    for (int x = 0; x < nx; ++x) {
        int xs = x + shift;
        if (xs < 0) xs += nx;
        if (xs >= nx) xs -= nx;
        dst[x] += p * src[xs];
    }
}

}  // namespace

void propagate(const PopulationField& fstar, const Lattice& lat, double a, double b,
               PopulationField& out) {
    const auto p = propagation_weights(a, b, true);
    const Grid& g = fstar.grid;
    const int nx = g.nx, ny = g.ny;
    out.grid = g;
    if (static_cast<int>(out.f.size()) != lat.q) out.f.assign(lat.q, Plane(g.size(), 0.0));

    for (int i = 0; i < lat.q; ++i) {
        const int ex = lat.e[i][0], ey = lat.e[i][1];
        const int ib = reverse_index(lat, i);
        const Plane& src = fstar.f[i];
        const Plane& srcb = fstar.f[ib];
        Plane& dst = out.f[i];

        parallel_rows(ny, [&](int ylo, int yhi) {
            for (int y = ylo; y < yhi; ++y) {
                double* d = dst.data() + g.idx(0, y);
                const double* s0 = src.data() + g.idx(0, y);
                for (int x = 0; x < nx; ++x) d[x] = p.p0 * s0[x];

                // upwind tap: source at (x - ex, y - ey)
                int ys = y - ey;
                bool outside = false;
                if (g.channel_y) {
                    outside = (ys < 0 || ys >= ny);
                } else {
                    ys = g.wrap_y(ys);
                }
                if (outside) {
                    const double* sb = srcb.data() + g.idx(0, y);
                    for (int x = 0; x < nx; ++x) d[x] += p.pm1 * sb[x];
                } else {
                    pull_row_wrapped(d, src.data() + g.idx(0, ys), nx, -ex, p.pm1);
                }

                // downwind tap: source at (x + ex, y + ey)
                ys = y + ey;
                outside = false;
                if (g.channel_y) {
                    outside = (ys < 0 || ys >= ny);
                } else {
                    ys = g.wrap_y(ys);
                }
                if (outside) {
                    const double* sb = srcb.data() + g.idx(0, y);
                    for (int x = 0; x < nx; ++x) d[x] += p.p1 * sb[x];
                } else {
                    pull_row_wrapped(d, src.data() + g.idx(0, ys), nx, ex, p.p1);
                }
            }
        }, nx);
    }
}

// ---------------------------------------------------------------------------
// CdeSolver
// ---------------------------------------------------------------------------

CdeSolver::CdeSolver(CdeModel model, const Grid& grid)
    : model_(std::move(model)), grid_(grid), f_(grid, model_.lat.q), fstar_(grid, model_.lat.q) {
    const int q = model_.lat.q;
    if (grid_.channel_y)
        throw ParameterError("CdeSolver: periodic domains only");

    // rank-structured collision: f* = f^eq + U (V f - v0 phi) + dt (G + F)
    Mat k = Mat::identity(q) - model_.s;
    std::vector<int> active;
    for (int r = 0; r < q; ++r) {
        bool nz = false;
        for (int c = 0; c < q; ++c)
            if (k(r, c) != 0.0) nz = true;
        if (nz) active.push_back(r);
    }
    const int ra = static_cast<int>(active.size());
    u_ = Mat(q, ra);
    v_ = Mat(ra, q);
    Mat km = k * model_.tm.m;
    for (int t = 0; t < ra; ++t) {
        for (int i = 0; i < q; ++i) u_(i, t) = model_.tm.minv(i, active[t]);
        for (int j = 0; j < q; ++j) v_(t, j) = km(active[t], j);
    }
    v0_ = v_.apply(model_.epop);
    em_ = model_.tm.m.apply(model_.epop);

    phi_.assign(grid_.size(), 0.0);
    phi_prev_.assign(grid_.size(), 0.0);
}

void CdeSolver::set_phi(const Plane& phi) {
    phi_ = phi;
    phi_prev_ = phi;
    const int q = model_.lat.q;
    for (int i = 0; i < q; ++i) {
        const double e = model_.epop[i];
        Plane& fi = f_.f[i];
        for (std::size_t n = 0; n < phi.size(); ++n) fi[n] = e * phi[n];
    }
    steps_ = 0;
}

void CdeSolver::set_phi_corrected(const Plane& phi, const Plane* ddx, const Plane* ddy,
                                  const Plane* d2dx2, int order, double kappa_eff) {
    set_phi(phi);
    const int q = model_.lat.q;
    const Lattice& lat = model_.lat;
    const double dx = grid_.dx;
    const double eta = grid_.dt / (dx * dx);

    Mat shat_inv(q, q);  // inverse of S with conserved rows replaced by identity
    {
        Mat shat = model_.s;
        for (int i = 0; i < q; ++i)
            for (int j = 0; j < q; ++j)
                if (i < model_.tm.n_conserved || j < model_.tm.n_conserved)
                    shat(i, j) = (i == j) ? 1.0 : 0.0;
        shat_inv = lu_invert(shat).first;
    }
    // first-shift matrices C_alpha = a M diag(e_alpha) M^-1 acting on E_m
    auto shift_image = [&](int axis) {
        std::vector<double> de(q);
        for (int i = 0; i < q; ++i) de[i] = lat.a * lat.e[i][axis] * model_.epop[i];
        return model_.tm.m.apply(de);  // = C_axis E_m
    };
    std::vector<double> cex = shift_image(0);
    std::vector<double> cey = lat.d == 2 ? shift_image(1) : std::vector<double>(q, 0.0);

    std::vector<double> vx = shat_inv.apply(cex);  // coefficient of -dx * dphi/dx
    std::vector<double> vy = shat_inv.apply(cey);
    for (auto& v : vx) v = -dx * v;
    for (auto& v : vy) v = -dx * v;

    std::vector<double> v2(q, 0.0);
    if (order >= 2 && lat.d == 1) {
        // dx^2 Shat^-1 [ C (I - Shat) Shat^-1 C + C2 - eta kappa I ] E_m
        // and  dx^2 eta u Shat^-1 E_m on the gradient
        Mat d1(q, q), d2(q, q);
        for (int i = 0; i < q; ++i) {
            d1(i, i) = lat.a * lat.e[i][0];
            d2(i, i) = 0.5 * model_.b * lat.e[i][0] * lat.e[i][0];
        }
        Mat c1 = model_.tm.m * d1 * model_.tm.minv;
        Mat c2 = model_.tm.m * d2 * model_.tm.minv;
        Mat shat = model_.s;
        for (int i = 0; i < q; ++i)
            for (int j = 0; j < q; ++j)
                if (i < model_.tm.n_conserved || j < model_.tm.n_conserved)
                    shat(i, j) = (i == j) ? 1.0 : 0.0;
        Mat ident = Mat::identity(q);
        Mat inner = c1 * (ident - shat) * shat_inv * c1 + c2;
        std::vector<double> em = model_.tm.m.apply(model_.epop);
        std::vector<double> t = inner.apply(em);
        for (int i = 0; i < q; ++i) t[i] -= eta * kappa_eff * em[i];
        v2 = shat_inv.apply(t);
        for (auto& v : v2) v *= dx * dx;
        std::vector<double> tu = shat_inv.apply(em);
        for (int i = 0; i < q; ++i) vx[i] += dx * dx * eta * model_.u[0] * tu[i];
    }
    // the conserved moment itself stays exactly phi
    for (int r = 0; r < model_.tm.n_conserved; ++r) {
        vx[r] = 0.0;
        vy[r] = 0.0;
        v2[r] = 0.0;
    }
    std::vector<double> px = model_.tm.minv.apply(vx);
    std::vector<double> py = model_.tm.minv.apply(vy);
    std::vector<double> p2 = model_.tm.minv.apply(v2);

    for (std::size_t n = 0; n < phi.size(); ++n) {
        const double gx = ddx ? (*ddx)[n] : 0.0;
        const double gy = ddy ? (*ddy)[n] : 0.0;
        const double g2 = d2dx2 ? (*d2dx2)[n] : 0.0;
        for (int i = 0; i < q; ++i) f_.f[i][n] += px[i] * gx + py[i] * gy + p2[i] * g2;
    }
}

void CdeSolver::refresh_phi() {
    const int q = model_.lat.q;
    parallel_rows(grid_.ny, [&](int ylo, int yhi) {
        const std::size_t lo = grid_.idx(0, ylo), hi = grid_.idx(0, yhi - 1) + grid_.nx;
        for (std::size_t n = lo; n < hi; ++n) {
            double s = 0.0;
            for (int i = 0; i < q; ++i) s += f_.f[i][n];
            phi_[n] = s;
        }
    }, grid_.nx);
}

void CdeSolver::source_moments(const Plane& phi, const Plane& phi_prev,
                               std::vector<Plane>& ftil) const {
    const int q = model_.lat.q;
    const Lattice& lat = model_.lat;
    ftil.assign(q, Plane(grid_.size(), 0.0));
    if (!has_source()) return;

    // moment images of the unit flux/scalar source distributions
    std::vector<double> gx(q, 0.0), gy(q, 0.0), gr(q, 0.0);
    for (int c = 0; c < q; ++c)
        for (int i = 0; i < q; ++i) {
            const double cx = lat.c * lat.e[i][0], cy = lat.c * lat.e[i][1];
            gx[c] += model_.tm.m(c, i) * lat.w[i] * cx / lat.cs2;
            gy[c] += model_.tm.m(c, i) * lat.w[i] * cy / lat.cs2;
            gr[c] += model_.tm.m(c, i) * lat.w[i];
        }

    const double ax = model_.u[0], ay = model_.u[1];
    const double h = model_.b / (2.0 * model_.a * model_.a);
    const Mat2& r = model_.r_block;
    const double inv2dx = 1.0 / (2.0 * grid_.dx);
    const double invdt = 1.0 / grid_.dt;

    parallel_rows(grid_.ny, [&](int ylo, int yhi) {
        for (int y = ylo; y < yhi; ++y) {
            const int yp = grid_.wrap_y(y + 1), ym = grid_.wrap_y(y - 1);
            for (int x = 0; x < grid_.nx; ++x) {
                const std::size_t n = grid_.idx(x, y);
                Vec2 m1g{0.0, 0.0};
                if (model_.with_g) {
                    const int xp = x + 1 == grid_.nx ? 0 : x + 1;
                    const int xm = x == 0 ? grid_.nx - 1 : x - 1;
                    const double dphidx = (phi[grid_.idx(xp, y)] - phi[grid_.idx(xm, y)]) * inv2dx;
                    const double dphidy = grid_.ny > 1
                                              ? (phi[grid_.idx(x, yp)] - phi[grid_.idx(x, ym)]) * inv2dx
                                              : 0.0;
                    const double dphidt = (phi[n] - phi_prev[n]) * invdt;
                    const Vec2 dtb{ax * dphidt, ay * dphidt};
                    const double udotgrad = ax * dphidx + ay * dphidy;
                    const Vec2 divc{ax * udotgrad, ay * udotgrad};
                    for (int al = 0; al < 2; ++al) {
                        double v = dtb[al] + divc[al];
                        for (int be = 0; be < 2; ++be)
                            v -= r[al][be] * (h * dtb[be] + 0.5 * divc[be]);
                        m1g[al] = v;
                    }
                }
                for (int c = 0; c < q; ++c)
                    ftil[c][n] = gx[c] * m1g[0] + gy[c] * m1g[1] + gr[c] * model_.source_r;
            }
        }
    }, grid_.nx);
}

void CdeSolver::collide() {
    const int q = model_.lat.q;
    const int ra = static_cast<int>(v_.rows());
    std::vector<Plane> gsrc;
    const bool src = has_source();
    if (src) {
        // population-space source dt*(G + F) rebuilt from the moment images
        source_moments(phi_, phi_prev_, gsrc);
    }

    parallel_rows(grid_.ny, [&](int ylo, int yhi) {
        std::vector<double> gloc(ra);
        std::vector<double> srcpop(q);
        for (int y = ylo; y < yhi; ++y) {
            const std::size_t base = grid_.idx(0, y);
            for (int x = 0; x < grid_.nx; ++x) {
                const std::size_t n = base + x;
                const double ph = phi_[n];
                for (int t = 0; t < ra; ++t) {
                    double s = -v0_[t] * ph;
                    for (int j = 0; j < q; ++j) s += v_(t, j) * f_.f[j][n];
                    gloc[t] = s;
                }
                if (src) {
                    for (int i = 0; i < q; ++i) {
                        double sp = 0.0;
                        for (int c = 0; c < q; ++c) sp += model_.tm.minv(i, c) * gsrc[c][n];
                        srcpop[i] = sp;
                    }
                }
                for (int i = 0; i < q; ++i) {
                    double v = model_.epop[i] * ph;
                    for (int t = 0; t < ra; ++t) v += u_(i, t) * gloc[t];
                    if (src) v += grid_.dt * srcpop[i];
                    fstar_.f[i][n] = v;
                }
            }
        }
    }, grid_.nx);
}

void CdeSolver::step() {
    collide();
    std::swap(phi_prev_, phi_);
    propagate(fstar_, model_.lat, model_.a, model_.b, f_);
    refresh_phi();
    ++steps_;
    if (!std::isfinite(phi_[0])) {
        for (std::size_t n = 0; n < phi_.size(); ++n)
            if (!std::isfinite(phi_[n])) throw DivergenceError(steps_);
    }
}

void CdeSolver::run(int steps) {
    for (int k = 0; k < steps; ++k) step();
}

double CdeSolver::total_mass() const {
    double s = 0.0;
    for (double v : phi_) s += v;
    const double cell = grid_.ny > 1 ? grid_.dx * grid_.dx : grid_.dx;
    return s * cell;
}

// ---------------------------------------------------------------------------
// NseSolver
// ---------------------------------------------------------------------------

NseSolver::NseSolver(NsePhysModel model, const Grid& grid)
    : model_(std::move(model)), grid_(grid), f_(grid, model_.lat.q), fstar_(grid, model_.lat.q) {
    const int q = model_.lat.q;
    Mat k = Mat::identity(q) - model_.s;
    std::vector<int> active;
    for (int r = 0; r < q; ++r) {
        bool nz = false;
        for (int c = 0; c < q; ++c)
            if (k(r, c) != 0.0) nz = true;
        if (nz) active.push_back(r);
    }
    const int ra = static_cast<int>(active.size());
    u_ = Mat(q, ra);
    v_ = Mat(ra, q);
    Mat km = k * model_.tm.m;
    for (int t = 0; t < ra; ++t) {
        for (int i = 0; i < q; ++i) u_(i, t) = model_.tm.minv(i, active[t]);
        for (int j = 0; j < q; ++j) v_(t, j) = km(active[t], j);
    }
}

void NseSolver::init_rest(double rho0) {
    auto feq = nse_equilibrium(rho0, {0.0, 0.0}, model_.lat);
    // mbar = m - dt/2 MF; at rest with constant F only the momentum rows shift
    auto fpop = nse_force(rho0, {0.0, 0.0}, model_.fhat, model_.lat);
    for (int i = 0; i < model_.lat.q; ++i) {
        const double v = feq[i] - 0.5 * grid_.dt * fpop[i];
        Plane& fi = f_.f[i];
        for (double& x : fi) x = v;
    }
    steps_ = 0;
}

void NseSolver::macros(Plane& rho, Plane& ux, Plane& uy) const {
    const int q = model_.lat.q;
    const Lattice& lat = model_.lat;
    rho.assign(grid_.size(), 0.0);
    ux.assign(grid_.size(), 0.0);
    uy.assign(grid_.size(), 0.0);
    parallel_rows(grid_.ny, [&](int ylo, int yhi) {
        const std::size_t lo = grid_.idx(0, ylo), hi = grid_.idx(0, yhi - 1) + grid_.nx;
        for (std::size_t n = lo; n < hi; ++n) {
            double r = 0.0, jx = 0.0, jy = 0.0;
            for (int i = 0; i < q; ++i) {
                const double fi = f_.f[i][n];
                r += fi;
                jx += lat.c * lat.e[i][0] * fi;
                jy += lat.c * lat.e[i][1] * fi;
            }
            rho[n] = r;
            ux[n] = (jx + 0.5 * grid_.dt * r * model_.fhat[0]) / r;
            uy[n] = (jy + 0.5 * grid_.dt * r * model_.fhat[1]) / r;
        }
    }, grid_.nx);
}

void NseSolver::collide() {
    const int q = model_.lat.q;
    const int ra = static_cast<int>(v_.rows());
    const Lattice& lat = model_.lat;
    const double dt = grid_.dt;

    parallel_rows(grid_.ny, [&](int ylo, int yhi) {
        std::vector<double> d(q), g(ra), feq(q), fpop(q);
        for (int y = ylo; y < yhi; ++y) {
            for (int x = 0; x < grid_.nx; ++x) {
                const std::size_t n = grid_.idx(x, y);
                double r = 0.0, jx = 0.0, jy = 0.0;
                for (int i = 0; i < q; ++i) {
                    const double fi = f_.f[i][n];
                    r += fi;
                    jx += lat.c * lat.e[i][0] * fi;
                    jy += lat.c * lat.e[i][1] * fi;
                }
                const Vec2 u{(jx + 0.5 * dt * r * model_.fhat[0]) / r,
                             (jy + 0.5 * dt * r * model_.fhat[1]) / r};
                nse_equilibrium_into(r, u, lat, feq.data());
                nse_force_into(r, u, model_.fhat, lat, fpop.data());
                for (int i = 0; i < q; ++i) {
                    feq[i] -= 0.5 * dt * fpop[i];  // effective equilibrium of mbar
                    d[i] = f_.f[i][n] - feq[i];
                }
                for (int t = 0; t < ra; ++t) {
                    double s = 0.0;
                    for (int j = 0; j < q; ++j) s += v_(t, j) * d[j];
                    g[t] = s;
                }
                for (int i = 0; i < q; ++i) {
                    double v = feq[i] + dt * fpop[i];
                    for (int t = 0; t < ra; ++t) v += u_(i, t) * g[t];
                    fstar_.f[i][n] = v;
                }
            }
        }
    }, grid_.nx);
}

void NseSolver::step() {
    collide();
    propagate(fstar_, model_.lat, model_.a, model_.b, f_);
    ++steps_;
    if (!std::isfinite(f_.f[0][0])) throw DivergenceError(steps_);
}

void NseSolver::run(int steps) {
    for (int k = 0; k < steps; ++k) step();
}

int NseSolver::run_to_steady(double tol, int max_steps) {
    Plane rho, ux, uy, ux_old, uy_old;
    macros(rho, ux_old, uy_old);
    for (int k = 0; k < max_steps; k += 100) {
        for (int s = 0; s < 100; ++s) step();
        macros(rho, ux, uy);
        double num = 0.0, den = 0.0;
        for (std::size_t n = 0; n < ux.size(); ++n) {
            const double dx = ux[n] - ux_old[n], dy = uy[n] - uy_old[n];
            num += dx * dx + dy * dy;
            den += ux[n] * ux[n] + uy[n] * uy[n];
        }
        if (den > 0.0 && std::sqrt(num / den) < tol) return steps_;
        ux_old = ux;
        uy_old = uy;
    }
    throw std::runtime_error("run_to_steady: criterion not reached in " +
                             std::to_string(max_steps) + " steps");
}

void NseSolver::conserved(std::vector<Plane>& mbar) const {
    const int q = model_.lat.q;
    mbar.assign(3, Plane(grid_.size(), 0.0));
    // rows 0..2 of M applied to fbar
    parallel_rows(grid_.ny, [&](int ylo, int yhi) {
        const std::size_t lo = grid_.idx(0, ylo), hi = grid_.idx(0, yhi - 1) + grid_.nx;
        for (std::size_t n = lo; n < hi; ++n)
            for (int r = 0; r < 3; ++r) {
                double s = 0.0;
                for (int i = 0; i < q; ++i) s += model_.tm.m(r, i) * f_.f[i][n];
                mbar[r][n] = s;
            }
    }, grid_.nx);
}

void NseSolver::macros_from_conserved(const std::vector<Plane>& mbar, Plane& rho, Plane& ux,
                                      Plane& uy) const {
    // mbar rows: rho, rho ux - dt/2 rho Fx, rho uy - dt/2 rho Fy
    const double dt = grid_.dt;
    rho = mbar[0];
    ux.assign(rho.size(), 0.0);
    uy.assign(rho.size(), 0.0);
    for (std::size_t n = 0; n < rho.size(); ++n) {
        ux[n] = (mbar[1][n] + 0.5 * dt * rho[n] * model_.fhat[0]) / rho[n];
        uy[n] = (mbar[2][n] + 0.5 * dt * rho[n] * model_.fhat[1]) / rho[n];
    }
}

void NseSolver::scheme_fields_from_macros(const Plane& rho, const Plane& ux, const Plane& uy,
                                          std::vector<Plane>& meq_slot,
                                          std::vector<Plane>& ftil_slot) const {
    const int q = model_.lat.q;
    meq_slot.assign(q, Plane(grid_.size(), 0.0));
    ftil_slot.assign(q, Plane(grid_.size(), 0.0));
    parallel_rows(grid_.ny, [&](int ylo, int yhi) {
        const std::size_t lo = grid_.idx(0, ylo), hi = grid_.idx(0, yhi - 1) + grid_.nx;
        std::vector<double> feq(q), fpop(q);
        for (std::size_t n = lo; n < hi; ++n) {
            const Vec2 u{ux[n], uy[n]};
            nse_equilibrium_into(rho[n], u, model_.lat, feq.data());
            nse_force_into(rho[n], u, model_.fhat, model_.lat, fpop.data());
            for (int c = 0; c < q; ++c) {
                double se = 0.0, sf = 0.0;
                for (int i = 0; i < q; ++i) {
                    se += model_.tm.m(c, i) * (feq[i] - 0.5 * grid_.dt * fpop[i]);
                    sf += model_.tm.m(c, i) * fpop[i];
                }
                meq_slot[c][n] = se;
                ftil_slot[c][n] = sf;
            }
        }
    }, grid_.nx);
}

void NseSolver::scheme_snapshot(std::vector<Plane>& meq_slot, std::vector<Plane>& ftil_slot) const {
    Plane rho, ux, uy;
    macros(rho, ux, uy);
    scheme_fields_from_macros(rho, ux, uy, meq_slot, ftil_slot);
}

}  // namespace gpmrt
