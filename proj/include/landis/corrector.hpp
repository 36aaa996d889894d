#pragma once

#include <cmath>
#include <optional>
#include <sstream>
#include <vector>

#include "landis/pde.hpp"

namespace landis {

struct CorrectorOptions {
    double tol = 1e-8;
    std::optional<double> k2;  // measured when absent
    double guard_limit = 0.5;
    double max_ratio = 0.75;
    int max_terms = 200;
    double solve_tol = 1e-12;
    Diagnostics* diagnostics = nullptr;
};

struct CorrectorResult {
    ScalarField phi;  // 1 + sum phi_n inside, 1 on dirichlet and exterior nodes
    std::vector<double> terms;         // ||phi_n||_inf, n = 1, 2, ...
    std::vector<double> certificates;  // ||Delta phi_n + V phi_{n-1}||_inf / ||V phi_{n-1}||_inf
    int n_terms = 0;
    double k2_used = 0.0;
    double v_sup = 0.0;
    double sup_deviation = 0.0;  // ||phi - 1||_inf
    double residual = 0.0;       // ||Delta phi + V phi||_inf / ||V||_inf on interior nodes
    double max_ratio = 0.0;      // max ||phi_{n+1}|| / ||phi_n||
    double tail_bound = 0.0;
    double min_phi = 1.0;
};

// phi = 1 + phi_1 + phi_2 + ..., Delta phi_1 = -V, Delta phi_n = -V phi_{n-1}, zero boundary data.
inline CorrectorResult build_corrector(const DomainMask& mask, const ScalarField& V, const CorrectorOptions& opt = {}) {
    const Grid2D& g = mask.grid();
    require_same_grid(g, V.grid(), "build_corrector");
    CorrectorResult res;
    const DomainMask m0 = mask.homogeneous();
    const std::size_t n = m0.interior_count();
    Vec v(static_cast<Eigen::Index>(n));
    for (std::size_t r = 0; r < n; ++r) {
        v[static_cast<Eigen::Index>(r)] = V[m0.node_of(r)];
        res.v_sup = std::max(res.v_sup, std::abs(V[m0.node_of(r)]));
    }
    if (res.v_sup == 0.0) {
        res.phi = ScalarField(g, 1.0);
        res.k2_used = opt.k2.value_or(0.0);
        return res;
    }
    res.k2_used = opt.k2 ? *opt.k2 : poincare_constant(mask, {1e-8, 4000, opt.diagnostics}).k2;
    if (res.k2_used * res.v_sup >= opt.guard_limit) {
        std::ostringstream os;
        os << "k2*||V||_inf = " << res.k2_used * res.v_sup << " >= " << opt.guard_limit;
        throw RegimeError(os.str());
    }
    SparseOperator op = assemble(m0);
    LinearSolver solver(m0, op.A, {opt.solve_tol, 2000, true, opt.diagnostics, "build_corrector"});
    Vec sum = Vec::Zero(static_cast<Eigen::Index>(n));
    Vec prev = Vec::Ones(static_cast<Eigen::Index>(n));
    Vec last;
    for (int t = 1; t <= opt.max_terms; ++t) {
        Vec rhs = v.cwiseProduct(prev);  // -Delta phi_t = V phi_{t-1}
        LinearSolveResult r = solver.solve(rhs);
        double s = r.x.lpNorm<Eigen::Infinity>();
        double rs = rhs.lpNorm<Eigen::Infinity>();
        res.certificates.push_back(rs > 0.0 ? (op.A * r.x - rhs).lpNorm<Eigen::Infinity>() / rs : 0.0);
        if (!res.terms.empty()) {
            double q = s / res.terms.back();
            res.max_ratio = std::max(res.max_ratio, q);
            if (q > opt.max_ratio) {
                std::ostringstream os;
                os << "term " << t << " ratio " << q << " exceeds " << opt.max_ratio;
                throw DivergenceError(os.str());
            }
        }
        res.terms.push_back(s);
        sum += r.x;
        prev = std::move(r.x);
        if (s < opt.tol * res.v_sup) break;
        if (t == opt.max_terms) throw DivergenceError("series did not reach tolerance within max_terms");
    }
    res.n_terms = static_cast<int>(res.terms.size());
    double q = res.max_ratio > 0.0 ? res.max_ratio : 0.0;
    res.tail_bound = q < 1.0 ? res.terms.back() * q / (1.0 - q) : std::numeric_limits<double>::infinity();

    ScalarField dev = scatter(m0, sum, 0.0, false);
    std::vector<double> phi(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) phi[k] = 1.0 + dev[k];
    res.phi = ScalarField(g, std::move(phi));
    res.sup_deviation = sum.lpNorm<Eigen::Infinity>();
    res.min_phi = std::min(1.0, 1.0 + sum.minCoeff());
    // Delta phi + V phi = -A(phi - 1) + V phi on interior unknowns.
    Vec phi_in = Vec::Ones(static_cast<Eigen::Index>(n)) + sum;
    res.residual = (v.cwiseProduct(phi_in) - op.A * sum).lpNorm<Eigen::Infinity>() / res.v_sup;
    return res;
}

struct OutcomeReport {
    double residual = 0.0;
    bool residual_pass = true;
    double boundary_deviation = 0.0;
    bool boundary_pass = true;
    std::optional<double> epsilon;
    double eps_ratio = 0.0;  // sup_deviation / (eps^2 ||V||_inf)
    double c_eps = 50.0;
    bool eps_pass = true;
    double k2_ratio = 0.0;  // sup_deviation / (k2 ||V||_inf)
    double c_k2 = 10.0;
    bool k2_pass = true;
    bool pass() const { return residual_pass && boundary_pass && eps_pass && k2_pass; }
};

inline OutcomeReport verify_outcome(const CorrectorResult& res, const DomainMask& mask, double tol = 1e-8,
                                    std::optional<double> epsilon = std::nullopt, double c_eps = 50.0,
                                    double c_k2 = 10.0) {
    OutcomeReport rep;
    rep.residual = res.residual;
    rep.residual_pass = res.residual <= 10.0 * tol;
    const Grid2D& g = mask.grid();
    for (std::size_t k = 0; k < g.size(); ++k)
        if (!mask.is_interior(k)) rep.boundary_deviation = std::max(rep.boundary_deviation, std::abs(res.phi[k] - 1.0));
    rep.boundary_pass = rep.boundary_deviation == 0.0;
    rep.c_eps = c_eps;
    rep.c_k2 = c_k2;
    if (res.v_sup > 0.0) {
        rep.k2_ratio = res.sup_deviation / (res.k2_used * res.v_sup);
        rep.k2_pass = rep.k2_ratio <= c_k2;
        if (epsilon) {
            rep.epsilon = epsilon;
            rep.eps_ratio = res.sup_deviation / (*epsilon * *epsilon * res.v_sup);
            rep.eps_pass = rep.eps_ratio <= c_eps;
        }
    }
    return rep;
}

}  // namespace landis
