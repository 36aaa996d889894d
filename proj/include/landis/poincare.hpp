#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "landis/eigen.hpp"

namespace landis {

struct PoincareEstimate {
    double lambda1 = 0.0;
    double k2 = 0.0;
    int iterations = 0;
    double residual = 0.0;
    ScalarField eigenvector;  // normalized: sum f^2 h^2 = 1, nonnegative mean
    std::vector<double> ritz_history;
};

struct PoincareOptions {
    double rel_tol = 1e-8;
    int max_iter = 4000;
    Diagnostics* diagnostics = nullptr;
};

// Edge energy sum |grad f|^2 h^2 of a field vanishing off the interior, with forward
// differences on full edges and on the shortened edges that end at cut boundary points.
inline double dirichlet_energy(const DomainMask& mask, const ScalarField& f) {
    const Grid2D& g = mask.grid();
    require_same_grid(g, f.grid(), "dirichlet_energy");
    double e = 0.0;
    for (std::size_t r = 0; r < mask.interior_count(); ++r) {
        std::size_t k = mask.node_of(r);
        int i = g.i_of(k), j = g.j_of(k);
        for (int d = 0; d < 4; ++d) {
            LinkCut c = mask.cut(k, d);
            if (c.active()) {
                e += f[k] * f[k] / c.theta;
                continue;
            }
            std::size_t m = g.index(i + kDi[d], j + kDj[d]);
            if (mask.is_interior(m)) {
                if (d == 0 || d == 2) e += (f[k] - f[m]) * (f[k] - f[m]);
            } else {
                e += f[k] * f[k];
            }
        }
    }
    return e;
}

inline double l2_norm_sq(const DomainMask& mask, const ScalarField& f) {
    double h2 = mask.grid().h() * mask.grid().h(), s = 0.0;
    for (std::size_t r = 0; r < mask.interior_count(); ++r) s += f[mask.node_of(r)] * f[mask.node_of(r)];
    return s * h2;
}

inline PoincareEstimate poincare_constant(const DomainMask& mask, const PoincareOptions& opt = {}) {
    Stopwatch sw;
    const DomainMask m0 = mask.homogeneous();
    SparseOperator op = assemble(m0);
    std::unique_ptr<Preconditioner> M;
    try {
        M = std::make_unique<MultigridPreconditioner>(m0, op.A);
    } catch (const SolverError&) {
        M = std::make_unique<JacobiPreconditioner>(op.A);
    }
    Vec ones = Vec::Ones(op.A.rows());
    PcgResult start = pcg(op.A, ones, *M, {1e-3, 30, {}});
    EigenResult er = smallest_eigenpair(op.A, *M, start.x, {opt.rel_tol, opt.max_iter});
    if (!(er.lambda > 0.0)) throw ConvergenceError("non-positive smallest eigenvalue");
    Vec x = er.x;
    if (x.sum() < 0.0) x = -x;
    x /= mask.grid().h();  // sum x^2 h^2 = 1
    PoincareEstimate pe;
    pe.lambda1 = er.lambda;
    pe.k2 = 1.0 / er.lambda;
    pe.iterations = er.iterations;
    pe.residual = er.residual;
    pe.eigenvector = scatter(m0, x, 0.0, false);
    pe.ritz_history = std::move(er.ritz_history);
    if (opt.diagnostics) {
        const Grid2D& g = mask.grid();
        opt.diagnostics->add({"poincare_constant", g.nx(), g.ny(), g.h(), mask.interior_count(), er.iterations,
                              er.residual, sw.ms(), "lobpcg-mg"});
    }
    return pe;
}

struct ThinDomainReport {
    bool applicable = false;
    double c = 0.0;       // max area fraction over unit squares
    double bound = 0.0;   // 2 + 2/(1-c)
    double k2 = 0.0;
    bool pass = true;
    // Rescaled variant: squares of side 2 sqrt(c).
    double side = 0.0, c_side = 0.0, bound_side = 0.0;
    bool applicable_side = false, pass_side = true;
    std::string notice;
};

namespace detail {

// Max count of interior nodes over all node-aligned windows of m x m nodes.
inline long max_window_count(const DomainMask& mask, int m) {
    const Grid2D& g = mask.grid();
    const int nx = g.nx(), ny = g.ny();
    std::vector<long> S(static_cast<std::size_t>(nx + 1) * (ny + 1), 0);
    auto at = [&](int i, int j) -> long& { return S[static_cast<std::size_t>(j) * (nx + 1) + i]; };
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            at(i + 1, j + 1) = at(i, j + 1) + at(i + 1, j) - at(i, j) + (mask.is_interior(g.index(i, j)) ? 1 : 0);
    long best = 0;
    int mi = std::min(m, nx), mj = std::min(m, ny);
    for (int j = 0; j + mj <= ny; ++j)
        for (int i = 0; i + mi <= nx; ++i)
            best = std::max(best, at(i + mi, j + mj) - at(i, j + mj) - at(i + mi, j) + at(i, j));
    return best;
}

}  // namespace detail

// Area fractions by node counting over every node-aligned window (a superset of any
// fixed tiling).
inline ThinDomainReport thin_domain_bound(const DomainMask& mask, double k2) {
    const double h = mask.grid().h();
    ThinDomainReport rep;
    rep.k2 = k2;
    int m = std::max(1, static_cast<int>(std::lround(1.0 / h)));
    double area = 1.0 / (m * h * m * h);
    rep.c = static_cast<double>(detail::max_window_count(mask, m)) * h * h * area;
    if (rep.c >= 1.0) {
        rep.notice = "a full unit square lies inside the domain; thin-domain bound inapplicable";
        return rep;
    }
    rep.applicable = true;
    rep.bound = 2.0 + 2.0 / (1.0 - rep.c);
    rep.pass = k2 <= rep.bound;
    int ms = std::max(1, static_cast<int>(std::lround(2.0 * std::sqrt(rep.c) / h)));
    rep.side = ms * h;
    rep.c_side = static_cast<double>(detail::max_window_count(mask, ms)) / (static_cast<double>(ms) * ms);
    if (rep.c_side < 1.0) {
        rep.applicable_side = true;
        rep.bound_side = rep.side * rep.side * (2.0 + 2.0 / (1.0 - rep.c_side));
        rep.pass_side = k2 <= rep.bound_side;
    }
    return rep;
}

}  // namespace landis
