#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <sstream>
#include <vector>

#include "landis/poincare.hpp"

namespace landis {

struct DirichletOptions {
    double rel_tol = 1e-10;
    // Nonsingularity guard k2 * ||V||_inf < guard_limit, checked when V has a positive part.
    bool guard = true;
    double guard_limit = 0.5;
    std::optional<double> k2;  // measured on demand when absent
    Diagnostics* diagnostics = nullptr;
};

struct DirichletSolution {
    ScalarField u;
    int iterations = 0;
    double relative_residual = 0.0;
    std::string method;
};

inline DirichletSolution solve_dirichlet_ex(const DomainMask& mask, const ScalarField& V, const DirichletOptions& opt = {}) {
    require_same_grid(mask.grid(), V.grid(), "solve_dirichlet");
    double vmax = 0.0, vsup = 0.0;
    for (std::size_t r = 0; r < mask.interior_count(); ++r) {
        double v = V[mask.node_of(r)];
        vmax = std::max(vmax, v);
        vsup = std::max(vsup, std::abs(v));
    }
    if (opt.guard && vmax > 0.0) {
        double k2 = opt.k2 ? *opt.k2 : poincare_constant(mask, {1e-8, 4000, opt.diagnostics}).k2;
        if (k2 * vsup >= opt.guard_limit) {
            std::ostringstream os;
            os << "k2*||V||_inf = " << k2 * vsup << " >= " << opt.guard_limit
               << " (nonsingularity guard; disable to force a solve)";
            throw RegimeError(os.str());
        }
    }
    SparseOperator op = assemble(mask, &V);
    LinearSolver solver(mask, op.A, {opt.rel_tol, 2000, true, opt.diagnostics, "solve_dirichlet"});
    LinearSolveResult r = solver.solve(op.rhs);
    return {scatter(mask, r.x), r.iterations, r.relative_residual, r.method};
}

inline ScalarField solve_dirichlet(const DomainMask& mask, const ScalarField& V, const DirichletOptions& opt = {}) {
    return solve_dirichlet_ex(mask, V, opt).u;
}

struct ManufacturedPotential {
    ScalarField V;
    double sup = 0.0;
};

// V = -laplacian5(u)/u on the valid nodes of `region` (whole grid interior when absent),
// zero elsewhere.
inline ManufacturedPotential manufacture_potential(const ScalarField& u, double floor,
                                                   const std::optional<Region>& region = std::nullopt) {
    if (!(floor > 0.0)) throw DivisionGuardError("floor must be positive");
    const Grid2D& g = u.grid();
    FlaggedField lap = laplacian5(u);
    std::vector<double> V(g.size(), 0.0);
    std::vector<std::size_t> bad;
    double sup = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (!lap.valid[k]) continue;
        if (region && !region->contains(g.node(k))) continue;
        if (std::abs(u[k]) < floor) {
            bad.push_back(k);
            continue;
        }
        V[k] = -lap.value[k] / u[k];
        sup = std::max(sup, std::abs(V[k]));
    }
    if (!bad.empty()) {
        std::ostringstream os;
        os << bad.size() << " node(s) with |u| < " << floor << ":";
        for (std::size_t q = 0; q < std::min<std::size_t>(bad.size(), 8); ++q)
            os << " (" << g.i_of(bad[q]) << "," << g.j_of(bad[q]) << ")";
        throw DivisionGuardError(os.str());
    }
    return {ScalarField(g, std::move(V)), sup};
}

struct VariationalResult {
    ScalarField u;
    double energy = 0.0;        // Phi(u) = sum |grad u|^2 h^2 + sum v u h^2
    double w12_norm = 0.0;      // (sum u^2 h^2 + sum |grad u|^2 h^2)^(1/2)
    double v_l2 = 0.0;
    double u_l2_sq = 0.0, grad_sq = 0.0;
    double ratio = 0.0;         // w12_norm / v_l2 (0 when v = 0)
    int iterations = 0;
    std::vector<double> energy_history;  // Phi after each CG iteration
};

struct VariationalOptions {
    double rel_tol = 1e-10;
    int max_iter = 2000;
    bool record_energy = false;
    Diagnostics* diagnostics = nullptr;
};

// Minimizer of Phi over fields vanishing off the interior: -Delta u = -v/2 by CG.
inline VariationalResult solve_poisson_variational(const DomainMask& mask, const ScalarField& v,
                                                   const VariationalOptions& opt = {}) {
    require_same_grid(mask.grid(), v.grid(), "solve_poisson_variational");
    Stopwatch sw;
    const DomainMask m0 = mask.homogeneous();
    const double h2 = mask.grid().h() * mask.grid().h();
    SparseOperator op = assemble(m0);
    Vec vv = gather(m0, v);
    Vec b = -0.5 * vv;
    auto phi = [&](const Vec& x) { return h2 * (x.dot(op.A * x) + vv.dot(x)); };
    VariationalResult res;
    std::unique_ptr<Preconditioner> M;
    try {
        M = std::make_unique<MultigridPreconditioner>(m0, op.A);
    } catch (const SolverError&) {
        M = std::make_unique<JacobiPreconditioner>(op.A);
    }
    PcgOptions po{opt.rel_tol, opt.max_iter, {}};
    if (opt.record_energy) po.monitor = [&](int, const Vec& x) { res.energy_history.push_back(phi(x)); };
    PcgResult r = pcg(op.A, b, *M, po);
    if (!r.converged)
        throw SolverError("variational CG did not converge: relative residual " + std::to_string(r.relative_residual));
    res.u = scatter(m0, r.x, 0.0, false);
    res.iterations = r.iterations;
    double grad2 = h2 * r.x.dot(op.A * r.x);
    res.energy = grad2 + h2 * vv.dot(r.x);
    res.u_l2_sq = h2 * r.x.squaredNorm();
    res.grad_sq = grad2;
    res.w12_norm = std::sqrt(res.u_l2_sq + grad2);
    res.v_l2 = std::sqrt(h2 * vv.squaredNorm());
    res.ratio = res.v_l2 > 0.0 ? res.w12_norm / res.v_l2 : 0.0;
    if (opt.diagnostics) {
        const Grid2D& g = mask.grid();
        opt.diagnostics->add({"solve_poisson_variational", g.nx(), g.ny(), g.h(), mask.interior_count(),
                              r.iterations, r.relative_residual, sw.ms(), "mg-pcg"});
    }
    return res;
}

// W^{1,2}_0 ratio after the dilation x -> x / sqrt(k2) that makes the Poincare constant 1.
inline double unit_poincare_ratio(const VariationalResult& r, double k2) {
    if (r.v_l2 == 0.0) return 0.0;
    // u'(y) = u(k y)/k^2, v'(y) = v(k y): |u'|^2 -> k^-6 |u|^2, |grad u'|^2 -> k^-4 |grad u|^2, |v'|^2 -> k^-2 |v|^2.
    double k = std::sqrt(k2);
    double num = std::sqrt(r.u_l2_sq / std::pow(k, 6) + r.grad_sq / std::pow(k, 4));
    double den = r.v_l2 / k;
    return num / den;
}

struct UniformBoundReport {
    std::vector<double> ratios;
    double max_ratio = 0.0;
    double c_acc = 20.0;
    bool pass = true;
};

inline double uniform_bound_ratio(const DomainMask& mask, const ScalarField& v, double k2) {
    double vs = 0.0;
    for (std::size_t r = 0; r < mask.interior_count(); ++r) vs = std::max(vs, std::abs(v[mask.node_of(r)]));
    if (vs == 0.0) return 0.0;
    VariationalResult res = solve_poisson_variational(mask, v);
    return res.u.max_abs() / (k2 * vs);
}

inline UniformBoundReport verify_uniform_bound(const DomainMask& mask, int trials, double k2, std::uint64_t seed = 1,
                                               double c_acc = 20.0) {
    UniformBoundReport rep;
    rep.c_acc = c_acc;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    const Grid2D& g = mask.grid();
    for (int t = 0; t < trials; ++t) {
        std::vector<double> v(g.size(), 0.0);
        for (std::size_t r = 0; r < mask.interior_count(); ++r) v[mask.node_of(r)] = U(rng);
        double ratio = uniform_bound_ratio(mask, ScalarField(g, std::move(v)), k2);
        rep.ratios.push_back(ratio);
        rep.max_ratio = std::max(rep.max_ratio, ratio);
    }
    rep.pass = rep.max_ratio <= c_acc;
    return rep;
}

}  // namespace landis
