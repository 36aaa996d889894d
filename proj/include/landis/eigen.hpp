#pragma once

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>
#include <vector>

#include "landis/linalg.hpp"

namespace landis {

struct EigenOptions {
    double rel_tol = 1e-8;
    int max_iter = 4000;
    int refresh = 25;  // recompute A-images from scratch every this many steps
};

struct EigenResult {
    double lambda = 0.0;
    Vec x;  // unit 2-norm
    int iterations = 0;
    double residual = 0.0;  // ||Ax - lambda x|| / lambda
    std::vector<double> ritz_history;
};

// Smallest eigenpair of a symmetric positive definite matrix by preconditioned
// inverse iteration with three-term Rayleigh-Ritz acceleration (locally optimal
// block of current iterate, preconditioned residual and previous direction).
inline EigenResult smallest_eigenpair(const SpMat& A, const Preconditioner& M, Vec x0, const EigenOptions& opt = {}) {
    EigenResult res;
    const Eigen::Index n = A.rows();
    if (x0.size() != n || x0.norm() == 0.0) x0 = Vec::Ones(n);
    Vec x = x0.normalized();
    Vec Ax = A * x;
    double theta = x.dot(Ax);
    Vec p, Ap, w, Aw, r;
    bool have_p = false;
    for (int it = 0; it <= opt.max_iter; ++it) {
        if (it > 0 && it % opt.refresh == 0) {
            x.normalize();
            Ax = A * x;
            if (have_p) Ap = A * p;
        }
        theta = x.dot(Ax);
        r = Ax - theta * x;
        double rel = r.norm() / std::abs(theta);
        res.ritz_history.push_back(theta);
        res.iterations = it;
        if (rel <= opt.rel_tol) {
            x.normalize();
            Ax = A * x;
            theta = x.dot(Ax);
            r = Ax - theta * x;
            rel = r.norm() / std::abs(theta);
            if (rel <= opt.rel_tol) {
                res.lambda = theta;
                res.x = x;
                res.residual = rel;
                return res;
            }
        }
        if (it == opt.max_iter) break;

        M.apply(r, w);
        for (int pass = 0; pass < 2; ++pass) w -= x.dot(w) * x;
        double wn = w.norm();
        if (wn == 0.0) break;
        w /= wn;
        Aw = A * w;

        int k = have_p ? 3 : 2;
        if (have_p) {
            double pn0 = p.norm();
            for (int pass = 0; pass < 2; ++pass) {
                double a = x.dot(p), b = w.dot(p);
                p -= a * x + b * w;
                Ap -= a * Ax + b * Aw;
            }
            double pn = p.norm();
            if (pn <= 1e-10 * pn0) {
                k = 2;
            } else {
                p /= pn;
                Ap /= pn;
            }
        }
        Eigen::MatrixXd G(k, k);
        const Vec* S[3] = {&x, &w, &p};
        const Vec* AS[3] = {&Ax, &Aw, &Ap};
        for (int a = 0; a < k; ++a)
            for (int b = a; b < k; ++b) G(a, b) = G(b, a) = 0.5 * (S[a]->dot(*AS[b]) + S[b]->dot(*AS[a]));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
        Eigen::VectorXd c = es.eigenvectors().col(0);
        Vec pn = c[1] * w, Apn = c[1] * Aw;
        if (k == 3) {
            pn += c[2] * p;
            Apn += c[2] * Ap;
        }
        x = c[0] * x + pn;
        Ax = c[0] * Ax + Apn;
        double xn = x.norm();
        x /= xn;
        Ax /= xn;
        p = std::move(pn);
        Ap = std::move(Apn);
        have_p = true;
    }
    std::ostringstream os;
    os << "eigen iteration stagnated after " << res.iterations << " steps; Ritz history tail:";
    std::size_t from = res.ritz_history.size() > 8 ? res.ritz_history.size() - 8 : 0;
    for (std::size_t i = from; i < res.ritz_history.size(); ++i) os << ' ' << res.ritz_history[i];
    throw ConvergenceError(os.str());
}

}  // namespace landis
