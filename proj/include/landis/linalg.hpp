#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <chrono>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "landis/mask.hpp"

namespace landis {

using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;
using Vec = Eigen::VectorXd;

struct SparseOperator {
    SpMat A;
    Vec rhs;  // Dirichlet data folded in: A u = rhs solves the homogeneous equation
    bool symmetric = true;
    std::size_t dimension() const { return static_cast<std::size_t>(A.rows()); }
};

// Discrete -laplacian5 - V on the interior unknowns of the mask. Cut links use
// the symmetric ghost-point elimination: diagonal 1/(theta h^2), data value/(theta h^2).
inline SparseOperator assemble(const DomainMask& mask, const ScalarField* V = nullptr) {
    const Grid2D& g = mask.grid();
    if (V) require_same_grid(g, V->grid(), "assemble");
    const std::size_t n = mask.interior_count();
    const double ih2 = 1.0 / (g.h() * g.h());
    SparseOperator op;
    op.A.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    op.A.reserve(Eigen::VectorXi::Constant(static_cast<Eigen::Index>(n), 5));
    op.rhs = Vec::Zero(static_cast<Eigen::Index>(n));
    // Column order within a row: -y, -x, diag, +x, +y.
    static constexpr int order[4] = {3, 1, 0, 2};
    for (std::size_t r = 0; r < n; ++r) {
        std::size_t k = mask.node_of(r);
        int i = g.i_of(k), j = g.j_of(k);
        double diag = 0.0, rhs = 0.0;
        std::int32_t cols[4] = {-1, -1, -1, -1};
        for (int d = 0; d < 4; ++d) {
            LinkCut c = mask.cut(k, d);
            if (c.active()) {
                diag += ih2 / c.theta;
                rhs += c.value * ih2 / c.theta;
                continue;
            }
            std::size_t m = g.index(i + kDi[d], j + kDj[d]);
            diag += ih2;
            if (mask.is_interior(m))
                cols[d] = mask.unknown(m);
            else
                rhs += mask.boundary_value(m) * ih2;
        }
        if (V) diag -= (*V)[k];
        const auto row = static_cast<Eigen::Index>(r);
        for (int q = 0; q < 2; ++q)
            if (cols[order[q]] >= 0) op.A.insert(row, cols[order[q]]) = -ih2;
        op.A.insert(row, row) = diag;
        for (int q = 2; q < 4; ++q)
            if (cols[order[q]] >= 0) op.A.insert(row, cols[order[q]]) = -ih2;
        op.rhs[row] = rhs;
    }
    op.A.makeCompressed();
    return op;
}

// Interior unknowns -> full grid field, boundary values on dirichlet nodes, `fill` elsewhere.
inline ScalarField scatter(const DomainMask& mask, const Vec& x, double fill = 0.0, bool with_boundary = true) {
    const Grid2D& g = mask.grid();
    std::vector<double> v(g.size(), fill);
    for (std::size_t k = 0; k < g.size(); ++k)
        if (with_boundary && mask.cls(k) == NodeClass::dirichlet) v[k] = mask.boundary_value(k);
    for (std::size_t r = 0; r < mask.interior_count(); ++r) v[mask.node_of(r)] = x[static_cast<Eigen::Index>(r)];
    return ScalarField(g, std::move(v));
}

inline Vec gather(const DomainMask& mask, const ScalarField& f) {
    Vec x(static_cast<Eigen::Index>(mask.interior_count()));
    for (std::size_t r = 0; r < mask.interior_count(); ++r) x[static_cast<Eigen::Index>(r)] = f[mask.node_of(r)];
    return x;
}

class Preconditioner {
public:
    virtual ~Preconditioner() = default;
    virtual void apply(const Vec& r, Vec& z) const = 0;
};

class IdentityPreconditioner final : public Preconditioner {
public:
    void apply(const Vec& r, Vec& z) const override { z = r; }
};

class JacobiPreconditioner final : public Preconditioner {
public:
    explicit JacobiPreconditioner(const SpMat& A) : inv_(A.rows()) {
        for (Eigen::Index r = 0; r < A.rows(); ++r) {
            double d = A.coeff(r, r);
            inv_[r] = d != 0.0 ? 1.0 / d : 1.0;
        }
    }
    void apply(const Vec& r, Vec& z) const override { z = inv_.cwiseProduct(r); }

private:
    Vec inv_;
};

// Galerkin multigrid on the mask's interior unknowns: bilinear prolongation from the
// even-index subgrid, coarse operators P^T A P, symmetric Gauss-Seidel smoothing and a
// dense Cholesky solve on the coarsest level. One V-cycle is a symmetric positive
// definite preconditioner when A is.
class MultigridPreconditioner final : public Preconditioner {
public:
    struct Options {
        int sweeps = 2;
        std::size_t coarse_size = 1500;
        int max_levels = 16;
    };

    MultigridPreconditioner(const DomainMask& mask, const SpMat& A) : MultigridPreconditioner(mask, A, Options{}) {}

    MultigridPreconditioner(const DomainMask& mask, const SpMat& A, Options opt) : opt_(opt) {
        int nx = mask.grid().nx(), ny = mask.grid().ny();
        std::vector<std::int32_t> umap = mask.unknown_map();
        levels_.push_back(Level{});
        levels_.back().A = A;
        while (true) {
            Level& L = levels_.back();
            finish_level(L);
            const auto n = static_cast<std::size_t>(L.A.rows());
            if (n <= opt_.coarse_size || static_cast<int>(levels_.size()) >= opt_.max_levels) break;
            int cnx = (nx + 1) / 2, cny = (ny + 1) / 2;
            std::vector<std::int32_t> cmap(static_cast<std::size_t>(cnx) * cny, -1);
            std::int32_t nc = 0;
            for (int J = 0; J < cny; ++J)
                for (int I = 0; I < cnx; ++I) {
                    int i = 2 * I, j = 2 * J;
                    if (i < nx && j < ny && umap[static_cast<std::size_t>(j) * nx + i] >= 0)
                        cmap[static_cast<std::size_t>(J) * cnx + I] = nc++;
                }
            if (nc == 0 || static_cast<std::size_t>(nc) * 10 > n * 7) break;
            std::vector<Eigen::Triplet<double>> trip;
            trip.reserve(n * 4);
            for (int j = 0; j < ny; ++j)
                for (int i = 0; i < nx; ++i) {
                    std::int32_t f = umap[static_cast<std::size_t>(j) * nx + i];
                    if (f < 0) continue;
                    int is[2], js[2], ni = 0, nj = 0;
                    if (i % 2 == 0) is[ni++] = i / 2; else is[ni++] = (i - 1) / 2, is[ni++] = (i + 1) / 2;
                    if (j % 2 == 0) js[nj++] = j / 2; else js[nj++] = (j - 1) / 2, js[nj++] = (j + 1) / 2;
                    double w = 1.0 / (ni * nj);
                    for (int a = 0; a < ni; ++a)
                        for (int b = 0; b < nj; ++b) {
                            if (is[a] >= cnx || js[b] >= cny) continue;
                            std::int32_t c = cmap[static_cast<std::size_t>(js[b]) * cnx + is[a]];
                            if (c >= 0) trip.emplace_back(f, c, w);
                        }
                }
            Eigen::SparseMatrix<double, Eigen::ColMajor, int> P(static_cast<Eigen::Index>(n), nc);
            P.setFromTriplets(trip.begin(), trip.end());
            L.P = P;
            Eigen::SparseMatrix<double, Eigen::ColMajor, int> AP = L.A * P;
            SpMat Ac = SpMat(P.transpose() * AP);
            Ac.prune(0.0);
            levels_.push_back(Level{});
            levels_.back().A = std::move(Ac);
            nx = cnx, ny = cny;
            umap = std::move(cmap);
        }
        Level& C = levels_.back();
        Eigen::MatrixXd dense = Eigen::MatrixXd(C.A);
        coarse_.compute(dense);
        if (coarse_.info() != Eigen::Success) throw SolverError("coarse operator is not positive definite");
    }

    std::size_t levels() const { return levels_.size(); }

    void apply(const Vec& r, Vec& z) const override {
        levels_[0].b = r;
        vcycle(0);
        z = levels_[0].x;
    }

private:
    struct Level {
        SpMat A;
        Eigen::SparseMatrix<double, Eigen::ColMajor, int> P;
        Vec inv_diag;
        mutable Vec x, b, r;
    };

    static void finish_level(Level& L) {
        L.inv_diag.resize(L.A.rows());
        for (Eigen::Index i = 0; i < L.A.rows(); ++i) {
            double d = L.A.coeff(i, i);
            L.inv_diag[i] = d != 0.0 ? 1.0 / d : 0.0;
        }
    }

    static void gauss_seidel(const Level& L, bool forward) {
        const Eigen::Index n = L.A.rows();
        const int* outer = L.A.outerIndexPtr();
        const int* inner = L.A.innerIndexPtr();
        const double* val = L.A.valuePtr();
        double* x = L.x.data();
        const double* b = L.b.data();
        for (Eigen::Index s = 0; s < n; ++s) {
            Eigen::Index i = forward ? s : n - 1 - s;
            double acc = b[i];
            for (int p = outer[i]; p < outer[i + 1]; ++p) acc -= val[p] * x[inner[p]];
            x[i] += acc * L.inv_diag[i];
        }
    }

    void vcycle(std::size_t l) const {
        const Level& L = levels_[l];
        if (l + 1 == levels_.size()) {
            L.x = coarse_.solve(L.b);
            return;
        }
        L.x.setZero(L.A.rows());
        for (int s = 0; s < opt_.sweeps; ++s) gauss_seidel(L, true);
        L.r = L.b - L.A * L.x;
        const Level& C = levels_[l + 1];
        C.b = L.P.transpose() * L.r;
        vcycle(l + 1);
        L.x += L.P * C.x;
        for (int s = 0; s < opt_.sweeps; ++s) gauss_seidel(L, false);
    }

    Options opt_;
    std::vector<Level> levels_;
    Eigen::LLT<Eigen::MatrixXd> coarse_;
};

struct PcgOptions {
    double rel_tol = 1e-10;
    int max_iter = 5000;
    // Called after every iteration with the current iterate.
    std::function<void(int, const Vec&)> monitor;
};

struct PcgResult {
    Vec x;
    int iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
    bool indefinite = false;  // non-positive curvature p^T A p met
};

inline PcgResult pcg(const SpMat& A, const Vec& b, const Preconditioner& M, const PcgOptions& opt,
                     const Vec* x0 = nullptr) {
    PcgResult res;
    const double bnorm = b.norm();
    res.x = x0 ? *x0 : Vec::Zero(b.size());
    if (bnorm == 0.0) {
        res.x.setZero(b.size());
        res.converged = true;
        return res;
    }
    Vec r = b - A * res.x, z(b.size()), p, Ap;
    M.apply(r, z);
    p = z;
    double rz = r.dot(z);
    for (int it = 1; it <= opt.max_iter; ++it) {
        Ap.noalias() = A * p;
        double curv = p.dot(Ap);
        if (!(curv > 0.0)) {
            res.indefinite = true;
            res.iterations = it;
            break;
        }
        double alpha = rz / curv;
        res.x.noalias() += alpha * p;
        r.noalias() -= alpha * Ap;
        res.iterations = it;
        if (opt.monitor) opt.monitor(it, res.x);
        if (r.norm() <= opt.rel_tol * bnorm) {
            double true_res = (b - A * res.x).norm() / bnorm;
            if (true_res <= opt.rel_tol * 1.5) {
                res.converged = true;
                res.relative_residual = true_res;
                return res;
            }
            r = b - A * res.x;
        }
        M.apply(r, z);
        double rz_new = r.dot(z);
        p = z + (rz_new / rz) * p;
        rz = rz_new;
    }
    res.relative_residual = (b - A * res.x).norm() / bnorm;
    res.converged = res.relative_residual <= opt.rel_tol;
    return res;
}

// Record of one linear or eigen solve.
struct SolveRecord {
    std::string operation;
    int nx = 0, ny = 0;
    double h = 0.0;
    std::size_t unknowns = 0;
    int iterations = 0;
    double relative_residual = 0.0;
    double wall_time_ms = 0.0;
    std::string method;
};

class Diagnostics {
public:
    void add(SolveRecord r) { records_.push_back(std::move(r)); }
    const std::vector<SolveRecord>& records() const { return records_; }

private:
    std::vector<SolveRecord> records_;
};

class Stopwatch {
public:
    Stopwatch() : t0_(std::chrono::steady_clock::now()) {}
    double ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0_).count();
    }

private:
    std::chrono::steady_clock::time_point t0_;
};

struct LinearSolveOptions {
    double rel_tol = 1e-10;
    int max_iter = 2000;
    bool allow_direct = true;
    Diagnostics* diagnostics = nullptr;
    std::string operation = "linear_solve";
};

struct LinearSolveResult {
    Vec x;
    int iterations = 0;
    double relative_residual = 0.0;
    std::string method;
};

// Reusable solver for one operator: multigrid-preconditioned CG, sparse LU when the
// operator is indefinite or CG fails.
class LinearSolver {
public:
    LinearSolver(const DomainMask& mask, const SpMat& A, LinearSolveOptions opt = {})
        : mask_(&mask), A_(&A), opt_(std::move(opt)) {
        try {
            mg_ = std::make_unique<MultigridPreconditioner>(mask, A);
        } catch (const SolverError&) {
            mg_.reset();
        }
    }

    const Preconditioner* preconditioner() const { return mg_.get(); }

    LinearSolveResult solve(const Vec& b, const Vec* x0 = nullptr, const std::function<void(int, const Vec&)>& monitor = {}) {
        Stopwatch sw;
        LinearSolveResult out;
        const double bnorm = b.norm();
        if (mg_ && !lu_) {
            PcgOptions po{opt_.rel_tol, opt_.max_iter, monitor};
            PcgResult r = pcg(*A_, b, *mg_, po, x0);
            if (r.converged) {
                out = {std::move(r.x), r.iterations, r.relative_residual, "mg-pcg"};
                record(out, sw);
                return out;
            }
            if (!opt_.allow_direct)
                throw SolverError("conjugate gradient did not converge (relative residual " +
                                  std::to_string(r.relative_residual) + (r.indefinite ? ", indefinite operator)" : ")"));
        }
        if (!opt_.allow_direct) throw SolverError("no usable preconditioner and direct fallback disabled");
        if (!lu_) {
            lu_ = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<double, Eigen::ColMajor, int>>>();
            Eigen::SparseMatrix<double, Eigen::ColMajor, int> Ac = *A_;
            lu_->analyzePattern(Ac);
            lu_->factorize(Ac);
            if (lu_->info() != Eigen::Success)
                throw SolverError("sparse LU failed: operator singular to working precision (" + lu_->lastErrorMessage() + ")");
        }
        out.x = lu_->solve(b);
        out.relative_residual = bnorm > 0 ? (b - *A_ * out.x).norm() / bnorm : 0.0;
        out.method = "sparse-lu";
        if (!(out.relative_residual <= std::max(opt_.rel_tol, 1e-8)))
            throw SolverError("direct solve residual " + std::to_string(out.relative_residual) +
                              " indicates an ill-conditioned operator");
        record(out, sw);
        return out;
    }

private:
    void record(const LinearSolveResult& r, const Stopwatch& sw) {
        if (!opt_.diagnostics) return;
        const Grid2D& g = mask_->grid();
        opt_.diagnostics->add({opt_.operation, g.nx(), g.ny(), g.h(), mask_->interior_count(), r.iterations,
                               r.relative_residual, sw.ms(), r.method});
    }

    const DomainMask* mask_;
    const SpMat* A_;
    LinearSolveOptions opt_;
    std::unique_ptr<MultigridPreconditioner> mg_;
    std::unique_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double, Eigen::ColMajor, int>>> lu_;
};

}  // namespace landis
