#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <vector>

#include "landis/fft.hpp"
#include "landis/interp.hpp"
#include "landis/mask.hpp"
#include "landis/nodal.hpp"

namespace landis {

using cplx = std::complex<double>;

inline ScalarField quotient_field(const ScalarField& u, const ScalarField& phi, double floor) {
    require_same_grid(u.grid(), phi.grid(), "quotient_field");
    if (!(floor > 0.0)) throw RegimeError("floor must be positive");
    std::vector<double> f(u.size());
    for (std::size_t k = 0; k < u.size(); ++k) {
        if (phi[k] < floor) {
            std::ostringstream os;
            os << "phi = " << phi[k] << " < floor " << floor << " at node " << k;
            throw RegimeError(os.str());
        }
        f[k] = u[k] / phi[k];
    }
    return ScalarField(u.grid(), std::move(f));
}

// ---------------------------------------------------------------- weak divergence test

struct Hat {
    Point c;
    double w = 1.0;
    double coef = 1.0;
    // C^2 bump (1 - r^2/w^2)^3 on the disk of radius w.
    double operator()(Point p) const {
        double s = 1.0 - ((p.x - c.x) * (p.x - c.x) + (p.y - c.y) * (p.y - c.y)) / (w * w);
        return s > 0.0 ? coef * s * s * s : 0.0;
    }
};

struct HatCombo {
    std::vector<Hat> hats;
    bool crosses_nodal = false;
    double operator()(Point p) const {
        double s = 0.0;
        for (const Hat& q : hats) s += q(p);
        return s;
    }
};

struct HatBatteryOptions {
    int count = 100;
    int max_hats = 3;
    double w_min = 0.1, w_max = 0.2;
    double R = 1.0;
    double margin = 0.0;       // extra clearance from dB(0,R)
    double hole_gap = 0.0;     // extra clearance from the excluded disks
    double crossing_fraction = 0.5;
    std::uint64_t seed = 11;
};

// Random combinations of hats supported in B(0,R) away from the holes; a fraction of the
// hats is centred on the nodal set so their supports straddle it.
inline std::vector<HatCombo> make_hat_battery(const NodalSet& F0, const std::vector<Disk>& holes,
                                              const HatBatteryOptions& o) {
    DiskIndex idx(holes);
    std::mt19937_64 rng(o.seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::uniform_int_distribution<int> nh(1, std::max(1, o.max_hats));
    std::vector<HatCombo> out;
    long attempts = 0;
    auto admissible = [&](const Hat& q) {
        if (norm(q.c) + q.w > o.R - o.margin) return false;
        double cap = q.w + o.hole_gap;
        return holes.empty() || idx.distance(q.c, cap) >= cap;
    };
    while (static_cast<int>(out.size()) < o.count) {
        HatCombo combo;
        int want = nh(rng);
        while (static_cast<int>(combo.hats.size()) < want) {
            if (++attempts > 2000L * o.count) throw GeometryError("could not place test hats; region too crowded");
            double r = o.R * std::sqrt(U(rng)), a = 2.0 * std::numbers::pi * U(rng);
            Hat q{{r * std::cos(a), r * std::sin(a)}, o.w_min + (o.w_max - o.w_min) * U(rng), 2.0 * U(rng) - 1.0};
            bool cross = !F0.empty() && U(rng) < o.crossing_fraction;
            if (cross) q.c = F0.closest(q.c);
            if (!admissible(q)) continue;
            combo.crosses_nodal |= cross;
            combo.hats.push_back(q);
        }
        out.push_back(std::move(combo));
    }
    return out;
}

struct DivergenceReport {
    double max_ratio = 0.0;
    int argmax = -1;
    std::vector<double> ratios;
};

// |sum_e phi_e^2 Df De h^2| / (||phi^2 grad f||_2 ||grad eta||_2) over grid edges, with
// phi_e^2 the mean of phi^2 at the edge ends; norms are taken over the edges touching supp eta.
inline DivergenceReport divergence_residual(const ScalarField& f, const ScalarField& phi,
                                            const std::vector<HatCombo>& battery) {
    const Grid2D& g = f.grid();
    require_same_grid(g, phi.grid(), "divergence_residual");
    const double h = g.h();
    DivergenceReport rep;
    std::vector<double> eta;
    for (std::size_t c = 0; c < battery.size(); ++c) {
        double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
        for (const Hat& q : battery[c].hats) {
            x0 = std::min(x0, q.c.x - q.w), x1 = std::max(x1, q.c.x + q.w);
            y0 = std::min(y0, q.c.y - q.w), y1 = std::max(y1, q.c.y + q.w);
        }
        int i0 = std::max(0, static_cast<int>(std::floor((x0 - g.origin_x()) / h)) - 1);
        int i1 = std::min(g.nx() - 1, static_cast<int>(std::ceil((x1 - g.origin_x()) / h)) + 1);
        int j0 = std::max(0, static_cast<int>(std::floor((y0 - g.origin_y()) / h)) - 1);
        int j1 = std::min(g.ny() - 1, static_cast<int>(std::ceil((y1 - g.origin_y()) / h)) + 1);
        const int w = i1 - i0 + 1;
        eta.assign(static_cast<std::size_t>(w) * (j1 - j0 + 1), 0.0);
        for (int j = j0; j <= j1; ++j)
            for (int i = i0; i <= i1; ++i) eta[static_cast<std::size_t>(j - j0) * w + (i - i0)] = battery[c](g.node(i, j));
        double s = 0.0, a = 0.0, b = 0.0;
        auto edge = [&](std::size_t k, std::size_t m, double ek, double em) {
            if (ek == 0.0 && em == 0.0) return;
            double p2 = 0.5 * (phi[k] * phi[k] + phi[m] * phi[m]);
            double df = f[m] - f[k], de = em - ek;
            s += p2 * df * de;
            a += p2 * p2 * df * df;
            b += de * de;
        };
        for (int j = j0; j <= j1; ++j)
            for (int i = i0; i <= i1; ++i) {
                std::size_t k = g.index(i, j);
                double ek = eta[static_cast<std::size_t>(j - j0) * w + (i - i0)];
                if (i < i1) edge(k, k + 1, ek, eta[static_cast<std::size_t>(j - j0) * w + (i + 1 - i0)]);
                if (j < j1) edge(k, g.index(i, j + 1), ek, eta[static_cast<std::size_t>(j + 1 - j0) * w + (i - i0)]);
            }
        double ratio = (a > 0.0 && b > 0.0) ? std::abs(s) / std::sqrt(a * b) : 0.0;
        rep.ratios.push_back(ratio);
        if (ratio > rep.max_ratio || rep.argmax < 0) {
            rep.max_ratio = std::max(rep.max_ratio, ratio);
            rep.argmax = static_cast<int>(c);
        }
    }
    return rep;
}

// ---------------------------------------------------------------- Beltrami coefficient

struct BeltramiField {
    ComplexField mu;
    double sup_mu = 0.0;
    double K_bound = 1.0;
    double phi_bound = 0.0;  // max |1 - phi^2| / (1 + phi^2) over the nodes where mu was formed
};

inline double k_bound(double sup_mu) { return (1.0 + sup_mu) / (1.0 - sup_mu); }

inline BeltramiField make_beltrami_field(ComplexField mu, double phi_bound = 0.0) {
    BeltramiField b;
    b.sup_mu = mu.max_abs();
    if (!(b.sup_mu < 1.0)) throw RegimeError("sup |mu| must be < 1");
    b.K_bound = k_bound(b.sup_mu);
    b.phi_bound = phi_bound;
    b.mu = std::move(mu);
    return b;
}

// mu = ((1 - phi^2)/(1 + phi^2)) (f_x + i f_y)/(f_x - i f_y); zero at critical points of f
// (|grad f| <= grad_floor), on the grid ring and outside omega1.
inline BeltramiField beltrami_coefficient(const ScalarField& f, const ScalarField& phi,
                                          const std::function<bool(Point)>& omega1 = {},
                                          double grad_floor = 1e-12) {
    const Grid2D& g = f.grid();
    require_same_grid(g, phi.grid(), "beltrami_coefficient");
    Gradient gr = gradient_central(f);
    std::vector<double> re(g.size(), 0.0), im(g.size(), 0.0);
    double bound = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (!gr.valid[k]) continue;
        if (omega1 && !omega1(g.node(k))) continue;
        double p2 = phi[k] * phi[k];
        double a = (1.0 - p2) / (1.0 + p2);
        bound = std::max(bound, std::abs(a));
        cplx d{gr.fx[k], gr.fy[k]};
        if (std::abs(d) <= grad_floor) continue;
        cplx m = a * d / std::conj(d);
        re[k] = m.real();
        im[k] = m.imag();
    }
    return make_beltrami_field(ComplexField(g, std::move(re), std::move(im)), bound);
}

// ---------------------------------------------------------------- quasiconformal map

struct QCSolveInfo {
    int iterations = 0;
    double residual = 0.0;  // ||psi_zbar - mu psi_z||_2 / ||psi_z||_2
    double min_jacobian = 0.0;
    int pad_nx = 0, pad_ny = 0;
};

class QCMap {
public:
    struct Inverse {
        Point z;
        double error = std::numeric_limits<double>::infinity();  // |psi(z) - w|
        bool found = false;
    };
    using SolveInfo = QCSolveInfo;

    QCMap(ComplexField psi, double K_bound, SolveInfo info = {}) : psi_(std::move(psi)), K_(K_bound), info_(info) {
        build_index();
    }

    template <class F>
    static QCMap from_values(const Grid2D& g, F&& map, double K_bound) {
        std::vector<double> re(g.size()), im(g.size());
        for (std::size_t k = 0; k < g.size(); ++k) {
            Point p = g.node(k);
            cplx w = map(cplx{p.x, p.y});
            re[k] = w.real();
            im[k] = w.imag();
        }
        return QCMap(ComplexField(g, std::move(re), std::move(im)), K_bound);
    }

    const Grid2D& grid() const { return psi_.grid(); }
    const ComplexField& psi() const { return psi_; }
    double K_bound() const { return K_; }
    const SolveInfo& info() const { return info_; }

    cplx operator()(Point z) const {
        return {bicubic(grid(), psi_.re(), z), bicubic(grid(), psi_.im(), z)};
    }

    // Locate w among the forward images of the cell triangles, start from the barycentric
    // preimage and apply one correction with the triangle's affine inverse.
    Inverse inverse(cplx w) const {
        Inverse out;
        if (cells_x_ == 0) return out;
        int bi = static_cast<int>(std::floor((w.real() - bx0_) / bcell_));
        int bj = static_cast<int>(std::floor((w.imag() - by0_) / bcell_));
        if (bi < 0 || bj < 0 || bi >= bnx_ || bj >= bny_) return out;
        std::size_t b = static_cast<std::size_t>(bj) * bnx_ + bi;
        const Grid2D& g = grid();
        const double h = g.h();
        for (std::size_t q = start_[b]; q < start_[b + 1]; ++q) {
            std::uint32_t t = tris_[q];
            std::size_t cell = t / 2;
            int i = static_cast<int>(cell % cells_x_), j = static_cast<int>(cell / cells_x_);
            Corner c[3];
            corners(i, j, t % 2, c);
            cplx e1 = c[1].w - c[0].w, e2 = c[2].w - c[0].w, d = w - c[0].w;
            double det = e1.real() * e2.imag() - e1.imag() * e2.real();
            if (det == 0.0) continue;
            double l1 = (d.real() * e2.imag() - d.imag() * e2.real()) / det;
            double l2 = (e1.real() * d.imag() - e1.imag() * d.real()) / det;
            const double tol = -1e-10;
            if (l1 < tol || l2 < tol || 1.0 - l1 - l2 < tol) continue;
            Point z0{c[0].z.x + l1 * (c[1].z.x - c[0].z.x) + l2 * (c[2].z.x - c[0].z.x),
                     c[0].z.y + l1 * (c[1].z.y - c[0].z.y) + l2 * (c[2].z.y - c[0].z.y)};
            // Affine part of the triangle map: columns are d(w)/dx and d(w)/dy.
            cplx ax, ay;
            if (t % 2 == 0) {
                ax = e1 / h;
                ay = (e2 - e1) / h;
            } else {
                ay = e2 / h;
                ax = (e1 - e2) / h;
            }
            double jdet = ax.real() * ay.imag() - ax.imag() * ay.real();
            cplx r = (*this)(z0) - w;
            Point z1 = z0;
            if (jdet != 0.0) {
                z1.x -= (ay.imag() * r.real() - ay.real() * r.imag()) / jdet;
                z1.y -= (-ax.imag() * r.real() + ax.real() * r.imag()) / jdet;
            }
            out.z = z1;
            out.error = std::abs((*this)(z1) - w);
            out.found = true;
            return out;
        }
        return out;
    }

private:
    struct Corner {
        Point z;
        cplx w;
    };
    cplx at(int i, int j) const {
        std::size_t k = grid().index(i, j);
        return {psi_.re()[k], psi_.im()[k]};
    }
    // Triangle 0: (i,j) (i+1,j) (i+1,j+1); triangle 1: (i,j) (i+1,j+1) (i,j+1).
    void corners(int i, int j, std::uint32_t t, Corner c[3]) const {
        const Grid2D& g = grid();
        c[0] = {g.node(i, j), at(i, j)};
        if (t == 0) {
            c[1] = {g.node(i + 1, j), at(i + 1, j)};
            c[2] = {g.node(i + 1, j + 1), at(i + 1, j + 1)};
        } else {
            c[1] = {g.node(i + 1, j + 1), at(i + 1, j + 1)};
            c[2] = {g.node(i, j + 1), at(i, j + 1)};
        }
    }

    void build_index() {
        const Grid2D& g = grid();
        cells_x_ = static_cast<std::size_t>(g.nx() - 1);
        const std::size_t ncell = cells_x_ * static_cast<std::size_t>(g.ny() - 1);
        bx0_ = by0_ = std::numeric_limits<double>::max();
        double bx1 = -bx0_, by1 = -by0_;
        for (std::size_t k = 0; k < psi_.size(); ++k) {
            bx0_ = std::min(bx0_, psi_.re()[k]), bx1 = std::max(bx1, psi_.re()[k]);
            by0_ = std::min(by0_, psi_.im()[k]), by1 = std::max(by1, psi_.im()[k]);
        }
        bcell_ = 2.0 * g.h();
        bnx_ = static_cast<int>((bx1 - bx0_) / bcell_) + 1;
        bny_ = static_cast<int>((by1 - by0_) / bcell_) + 1;
        start_.assign(static_cast<std::size_t>(bnx_) * bny_ + 1, 0);
        auto visit = [&](auto&& fn) {
            for (std::size_t cell = 0; cell < ncell; ++cell) {
                int i = static_cast<int>(cell % cells_x_), j = static_cast<int>(cell / cells_x_);
                for (std::uint32_t t = 0; t < 2; ++t) {
                    Corner c[3];
                    corners(i, j, t, c);
                    double x0 = std::min({c[0].w.real(), c[1].w.real(), c[2].w.real()});
                    double x1 = std::max({c[0].w.real(), c[1].w.real(), c[2].w.real()});
                    double y0 = std::min({c[0].w.imag(), c[1].w.imag(), c[2].w.imag()});
                    double y1 = std::max({c[0].w.imag(), c[1].w.imag(), c[2].w.imag()});
                    int i0 = static_cast<int>(std::floor((x0 - bx0_) / bcell_)), i1 = static_cast<int>(std::floor((x1 - bx0_) / bcell_));
                    int j0 = static_cast<int>(std::floor((y0 - by0_) / bcell_)), j1 = static_cast<int>(std::floor((y1 - by0_) / bcell_));
                    for (int bj = std::max(0, j0); bj <= std::min(bny_ - 1, j1); ++bj)
                        for (int bi = std::max(0, i0); bi <= std::min(bnx_ - 1, i1); ++bi)
                            fn(static_cast<std::size_t>(bj) * bnx_ + bi, static_cast<std::uint32_t>(2 * cell + t));
                }
            }
        };
        visit([&](std::size_t b, std::uint32_t) { ++start_[b + 1]; });
        for (std::size_t b = 1; b < start_.size(); ++b) start_[b] += start_[b - 1];
        tris_.assign(start_.back(), 0);
        std::vector<std::size_t> fill(start_.begin(), start_.end() - 1);
        visit([&](std::size_t b, std::uint32_t t) { tris_[fill[b]++] = t; });
    }

    ComplexField psi_;
    double K_ = 1.0;
    SolveInfo info_;
    std::size_t cells_x_ = 0;
    double bx0_ = 0.0, by0_ = 0.0, bcell_ = 1.0;
    int bnx_ = 0, bny_ = 0;
    std::vector<std::size_t> start_;
    std::vector<std::uint32_t> tris_;
};

struct BeltramiOptions {
    int pad = 4;
    double tol = 1e-13;
    int max_iter = 500;
    double max_sup = 0.5;
};

namespace detail {

// Central-difference Wirtinger derivatives at interior nodes.
inline void wirtinger(const Grid2D& g, const std::vector<cplx>& psi, std::size_t k, cplx& dz, cplx& dzb) {
    const std::size_t nx = static_cast<std::size_t>(g.nx());
    cplx px = (psi[k + 1] - psi[k - 1]) / (2.0 * g.h());
    cplx py = (psi[k + nx] - psi[k - nx]) / (2.0 * g.h());
    const cplx I{0.0, 1.0};
    dz = 0.5 * (px - I * py);
    dzb = 0.5 * (px + I * py);
}

}  // namespace detail

// Principal-type solution psi = z + T omega of psi_zbar = mu psi_z, with omega = mu (1 + S omega)
// by Neumann iteration; S and T are the Fourier multipliers (i kx + ky)/(i kx - ky) and
// 2/(i kx - ky) on a zero-padded periodic box. The mean of omega over the box, which the
// periodic T cannot represent, is restored as m * conj(z). Normalized so psi(0) = 0.
inline QCMap solve_beltrami(const BeltramiField& b, const BeltramiOptions& opt = {}) {
    const ComplexField& mu = b.mu;
    const Grid2D& g = mu.grid();
    if (b.sup_mu > opt.max_sup) {
        std::ostringstream os;
        os << "sup |mu| = " << b.sup_mu << " exceeds the series regime " << opt.max_sup;
        throw RegimeError(os.str());
    }
    const int nx = g.nx(), ny = g.ny();
    const int Px = fft_size(opt.pad * nx), Py = fft_size(opt.pad * ny);
    const double h = g.h();
    Fft2D fft(Py, Px);
    const cplx I{0.0, 1.0};
    std::vector<cplx> Smul(fft.size()), Tmul(fft.size());
    for (int j = 0; j < Py; ++j) {
        double ky = 2.0 * std::numbers::pi * (j < Py / 2 ? j : j - Py) / (Py * h);
        for (int i = 0; i < Px; ++i) {
            double kx = 2.0 * std::numbers::pi * (i < Px / 2 ? i : i - Px) / (Px * h);
            cplx den = I * kx - ky;
            std::size_t q = static_cast<std::size_t>(j) * Px + i;
            if (i == 0 && j == 0) {
                Smul[q] = Tmul[q] = 0.0;
            } else {
                Smul[q] = (I * kx + ky) / den;
                Tmul[q] = 2.0 / den;
            }
        }
    }
    const std::size_t n = g.size();
    std::vector<cplx> m(n), omega(n, 0.0), next(n);
    for (std::size_t k = 0; k < n; ++k) m[k] = {mu.re()[k], mu.im()[k]};
    auto apply = [&](const std::vector<cplx>& in, const std::vector<cplx>& mul, std::vector<cplx>& out) {
        std::fill(fft.data(), fft.data() + fft.size(), cplx{0.0, 0.0});
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) fft.at(i, j) = in[g.index(i, j)];
        fft.forward();
        for (std::size_t q = 0; q < fft.size(); ++q) fft.data()[q] *= mul[q];
        fft.backward();
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) out[g.index(i, j)] = fft.at(i, j);
    };

    QCMap::SolveInfo info;
    info.pad_nx = Px;
    info.pad_ny = Py;
    if (b.sup_mu > 0.0) {
        omega = m;
        for (int it = 1;; ++it) {
            apply(omega, Smul, next);
            double dn = 0.0, on = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                next[k] = m[k] * (1.0 + next[k]);
                dn += std::norm(next[k] - omega[k]);
                on += std::norm(next[k]);
            }
            omega.swap(next);
            info.iterations = it;
            if (std::sqrt(dn) <= opt.tol * std::sqrt(on)) break;
            if (it >= opt.max_iter) throw RegimeError("Neumann iteration for omega did not converge");
        }
    }
    cplx mean = 0.0;
    for (const cplx& w : omega) mean += w;
    mean /= static_cast<double>(fft.size());
    std::vector<cplx> psi(n);
    apply(omega, Tmul, psi);
    for (std::size_t k = 0; k < n; ++k) {
        Point p = g.node(k);
        cplx z{p.x, p.y};
        psi[k] += z + mean * std::conj(z);
    }
    std::vector<double> re(n), im(n);
    for (std::size_t k = 0; k < n; ++k) re[k] = psi[k].real(), im[k] = psi[k].imag();
    cplx p0 = g.covers({0.0, 0.0}) ? cplx{bicubic(g, re, {0.0, 0.0}), bicubic(g, im, {0.0, 0.0})} : cplx{0.0, 0.0};
    for (std::size_t k = 0; k < n; ++k) {
        psi[k] -= p0;
        re[k] = psi[k].real();
        im[k] = psi[k].imag();
    }

    double num = 0.0, den = 0.0, jmin = std::numeric_limits<double>::infinity();
    std::size_t jarg = 0;
    for (int j = 1; j < ny - 1; ++j)
        for (int i = 1; i < nx - 1; ++i) {
            std::size_t k = g.index(i, j);
            cplx dz, dzb;
            detail::wirtinger(g, psi, k, dz, dzb);
            num += std::norm(dzb - m[k] * dz);
            den += std::norm(dz);
            double J = std::norm(dz) - std::norm(dzb);
            if (J < jmin) jmin = J, jarg = k;
        }
    info.residual = den > 0.0 ? std::sqrt(num / den) : 0.0;
    info.min_jacobian = jmin;
    if (!(jmin > 0.0)) {
        std::ostringstream os;
        os << "discrete Jacobian " << jmin << " <= 0 at node (" << g.i_of(jarg) << "," << g.j_of(jarg) << ")";
        throw FoldingError(os.str());
    }
    return QCMap(ComplexField(g, std::move(re), std::move(im)), b.K_bound, info);
}

// ---------------------------------------------------------------- Mori distortion

struct MoriRow {
    double dist_in = 0.0, dist_out = 0.0, lower = 0.0, upper = 0.0;
    bool pass = true;
};

struct MoriReport {
    double K = 1.0;
    double R = 1.0;
    double scale = 1.0;  // post-composition factor making max |psi| on |z| = R equal to R
    std::vector<MoriRow> rows;
    int violations = 0;
    double min_lower_margin = std::numeric_limits<double>::infinity();  // dist_out / lower
    double min_upper_margin = std::numeric_limits<double>::infinity();  // upper / dist_out
    // Bounded-distortion window 1/R <= |z1 - z2| <= 2R, factor 32.
    int window_pairs = 0;
    int window_violations = 0;
    double window_min_ratio = std::numeric_limits<double>::infinity();
    double window_max_ratio = 0.0;
    bool window_premise = false;  // K <= 1 + c^2/log R
    bool pass() const { return violations == 0 && window_violations == 0; }
};

inline MoriReport verify_mori(const QCMap& map, double R, int pairs, std::uint64_t seed = 3, double c = 0.05) {
    MoriReport rep;
    rep.K = map.K_bound();
    rep.R = R;
    double smax = 0.0;
    const int m = 4096;
    for (int q = 0; q < m; ++q) {
        double a = 2.0 * std::numbers::pi * q / m;
        smax = std::max(smax, std::abs(map({R * std::cos(a), R * std::sin(a)})));
    }
    rep.scale = smax > 0.0 ? R / smax : 1.0;
    rep.window_premise = R > 1.0 && rep.K <= 1.0 + c * c / std::log(R);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    auto draw = [&] {
        for (;;) {
            Point p{R * U(rng), R * U(rng)};
            if (norm(p) < R) return p;
        }
    };
    const double K = rep.K;
    for (int t = 0; t < pairs; ++t) {
        Point z1 = draw(), z2 = draw();
        MoriRow row;
        row.dist_in = dist(z1, z2);
        row.dist_out = rep.scale * std::abs(map(z1) - map(z2));
        double s = row.dist_in / R;
        row.lower = R * std::pow(s, K) / 16.0;
        row.upper = R * 16.0 * std::pow(s, 1.0 / K);
        row.pass = row.lower <= row.dist_out && row.dist_out <= row.upper;
        if (!row.pass) ++rep.violations;
        if (row.dist_in > 0.0) {
            rep.min_lower_margin = std::min(rep.min_lower_margin, row.dist_out / row.lower);
            rep.min_upper_margin = std::min(rep.min_upper_margin, row.upper / std::max(row.dist_out, 1e-300));
        }
        if (row.dist_in >= 1.0 / R && row.dist_in <= 2.0 * R) {
            ++rep.window_pairs;
            double ratio = row.dist_out / row.dist_in;
            rep.window_min_ratio = std::min(rep.window_min_ratio, ratio);
            rep.window_max_ratio = std::max(rep.window_max_ratio, ratio);
            if (ratio < 1.0 / 32.0 || ratio > 32.0) ++rep.window_violations;
        }
        rep.rows.push_back(row);
    }
    return rep;
}

// ---------------------------------------------------------------- harmonicity after the map

struct StoilowOptions {
    double R = 1.0;
    double margin = 0.0;    // evaluation restricted to preimages in B(0, R - margin)
    double dilation = 2.0;  // holes excluded with this dilation
    double h = 0.0;         // spacing of the fresh grid; the map's grid spacing when 0
};

struct StoilowReport {
    double residual = 0.0;  // h^2 max|lap5(f o psi^-1)| / max|f o psi^-1|
    double lap_max = 0.0;
    double value_max = 0.0;
    double max_inverse_error = 0.0;
    std::size_t nodes = 0;
    Point worst;
    Grid2D grid;
    std::vector<double> values;        // f o psi^-1 on the fresh grid, 0 where unset
    std::vector<std::uint8_t> valid;
};

inline StoilowReport stoilow_harmonicity(const ScalarField& f, const QCMap& map, const std::vector<Disk>& holes,
                                         const StoilowOptions& opt) {
    const Grid2D& g = map.grid();
    require_same_grid(g, f.grid(), "stoilow_harmonicity");
    const double hn = opt.h > 0.0 ? opt.h : g.h();
    const double Rin = opt.R - opt.margin;
    double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
    const int m = 2048;
    for (int q = 0; q < m; ++q) {
        double a = 2.0 * std::numbers::pi * q / m;
        cplx w = map({Rin * std::cos(a), Rin * std::sin(a)});
        x0 = std::min(x0, w.real()), x1 = std::max(x1, w.real());
        y0 = std::min(y0, w.imag()), y1 = std::max(y1, w.imag());
    }
    int nxn = static_cast<int>(std::ceil((x1 - x0) / hn)) + 3, nyn = static_cast<int>(std::ceil((y1 - y0) / hn)) + 3;
    Grid2D fresh(std::floor(x0 / hn) * hn - hn, std::floor(y0 / hn) * hn - hn, hn, nxn, nyn);
    std::vector<double> val(fresh.size(), 0.0);
    std::vector<std::uint8_t> ok(fresh.size(), 0);
    DiskIndex idx(holes);
    const double rmax = idx.max_radius();
    StoilowReport rep;
    rep.grid = fresh;
    for (std::size_t k = 0; k < fresh.size(); ++k) {
        Point w = fresh.node(k);
        QCMap::Inverse inv = map.inverse({w.x, w.y});
        if (!inv.found) continue;
        if (norm(inv.z) >= Rin) continue;
        bool in_hole = false;
        idx.for_each_near(inv.z, opt.dilation * rmax, [&](std::size_t d) {
            if (dist(inv.z, idx.disks()[d].center()) < opt.dilation * idx.disks()[d].radius) in_hole = true;
        });
        if (in_hole) continue;
        if (inv.error > hn) {
            std::ostringstream os;
            os << "inverse interpolation error " << inv.error << " exceeds h = " << hn;
            throw AccuracyError(os.str());
        }
        rep.max_inverse_error = std::max(rep.max_inverse_error, inv.error);
        val[k] = bicubic(f, inv.z);
        ok[k] = 1;
    }
    const std::size_t nx = static_cast<std::size_t>(fresh.nx());
    for (int j = 1; j < fresh.ny() - 1; ++j)
        for (int i = 1; i < fresh.nx() - 1; ++i) {
            std::size_t k = fresh.index(i, j);
            if (!ok[k]) continue;
            rep.value_max = std::max(rep.value_max, std::abs(val[k]));
            if (!(ok[k + 1] && ok[k - 1] && ok[k + nx] && ok[k - nx])) continue;
            double lap = (val[k + 1] + val[k - 1] + val[k + nx] + val[k - nx] - 4.0 * val[k]) / (hn * hn);
            ++rep.nodes;
            if (std::abs(lap) > rep.lap_max) {
                rep.lap_max = std::abs(lap);
                rep.worst = fresh.node(k);
            }
        }
    if (rep.nodes == 0) throw EmptyRegionError("no fresh-grid node with a complete stencil");
    rep.residual = rep.value_max > 0.0 ? hn * hn * rep.lap_max / rep.value_max : 0.0;
    rep.values = std::move(val);
    rep.valid = std::move(ok);
    return rep;
}

// ---------------------------------------------------------------- stream function

struct StreamResult {
    ScalarField u;
    std::vector<std::uint8_t> valid;
    double path_dependence = 0.0;
};

// u with (u_y, -u_x) = (Fx, Fy): trapezoid integration from the origin node along the two
// rectangle paths (horizontal first, vertical first), averaged. A node is evaluated when both
// paths stay on non-exterior mask nodes.
inline StreamResult stream_function(const ScalarField& Fx, const ScalarField& Fy, const DomainMask& mask,
                                    double tol = std::numeric_limits<double>::infinity()) {
    const Grid2D& g = mask.grid();
    require_same_grid(g, Fx.grid(), "stream_function");
    require_same_grid(g, Fy.grid(), "stream_function");
    const double h = g.h();
    std::size_t o = g.nearest({0.0, 0.0});
    const int i0 = g.i_of(o), j0 = g.j_of(o);
    const int nx = g.nx(), ny = g.ny();
    auto in = [&](int i, int j) { return mask.cls(g.index(i, j)) != NodeClass::exterior; };
    if (!in(i0, j0)) throw GeometryError("origin is outside the mask");
    // row[j][i]: integral of -Fy along row j from i0 to i; col[i][j]: integral of Fx along column i from j0.
    std::vector<double> row(g.size(), 0.0), col(g.size(), 0.0);
    std::vector<std::uint8_t> rok(g.size(), 0), cok(g.size(), 0);
    for (int j = 0; j < ny; ++j) {
        std::size_t base = static_cast<std::size_t>(j) * nx;
        if (!in(i0, j)) continue;
        rok[base + i0] = 1;
        for (int i = i0 + 1; i < nx && in(i, j); ++i) {
            row[base + i] = row[base + i - 1] - 0.5 * h * (Fy(i - 1, j) + Fy(i, j));
            rok[base + i] = 1;
        }
        for (int i = i0 - 1; i >= 0 && in(i, j); --i) {
            row[base + i] = row[base + i + 1] + 0.5 * h * (Fy(i + 1, j) + Fy(i, j));
            rok[base + i] = 1;
        }
    }
    for (int i = 0; i < nx; ++i) {
        if (!in(i, j0)) continue;
        cok[g.index(i, j0)] = 1;
        for (int j = j0 + 1; j < ny && in(i, j); ++j) {
            col[g.index(i, j)] = col[g.index(i, j - 1)] + 0.5 * h * (Fx(i, j - 1) + Fx(i, j));
            cok[g.index(i, j)] = 1;
        }
        for (int j = j0 - 1; j >= 0 && in(i, j); --j) {
            col[g.index(i, j)] = col[g.index(i, j + 1)] - 0.5 * h * (Fx(i, j + 1) + Fx(i, j));
            cok[g.index(i, j)] = 1;
        }
    }
    StreamResult out;
    std::vector<double> u(g.size(), 0.0);
    out.valid.assign(g.size(), 0);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            std::size_t k = g.index(i, j);
            std::size_t a1 = g.index(i, j0), b1 = g.index(i0, j);
            // Path A: along row j0 to (i, j0), then column i. Path B: column i0 to (i0, j), then row j.
            if (!(rok[a1] && cok[k] && cok[b1] && rok[k])) continue;
            double A = row[a1] + col[k];
            double B = col[b1] + row[k];
            u[k] = 0.5 * (A + B);
            out.valid[k] = 1;
            out.path_dependence = std::max(out.path_dependence, std::abs(A - B));
        }
    if (out.path_dependence > tol) {
        std::ostringstream os;
        os << "path dependence " << out.path_dependence << " exceeds " << tol;
        throw NonIntegrableError(os.str());
    }
    out.u = ScalarField(g, std::move(u));
    return out;
}

}  // namespace landis
