#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "landis/quasiconformal.hpp"

using namespace landis;

namespace {

ComplexField disk_mu(const Grid2D& g, cplx mu0, double a) {
    std::vector<double> re(g.size(), 0.0), im(g.size(), 0.0);
    for (std::size_t k = 0; k < g.size(); ++k)
        if (norm(g.node(k)) < a) re[k] = mu0.real(), im[k] = mu0.imag();
    return ComplexField(g, std::move(re), std::move(im));
}

// Principal solution for mu = mu0 on |z| < a: the Cauchy transform of the disk indicator is
// conj(z) inside and a^2/z outside.
cplx disk_oracle(cplx z, cplx mu0, double a) {
    return std::abs(z) < a ? z + mu0 * std::conj(z) : z + mu0 * a * a / z;
}

}  // namespace

TEST(Beltrami, ZeroCoefficientGivesIdentity) {
    Grid2D g = Grid2D::centered(1.0, 1.0 / 32);
    QCMap map = solve_beltrami(make_beltrami_field(ComplexField(g)));
    for (std::size_t k = 0; k < g.size(); ++k) {
        Point p = g.node(k);
        ASSERT_NEAR(map.psi().re()[k], p.x, 1e-14);
        ASSERT_NEAR(map.psi().im()[k], p.y, 1e-14);
    }
}

TEST(Beltrami, ConstantCoefficientOnFullBoxIsAffine) {
    // 64 x 64 nodes fill the periodic box exactly when unpadded.
    Grid2D g(-1.0, -1.0, 1.0 / 32, 64, 64);
    const cplx mu0{0.2, -0.1};
    std::vector<double> re(g.size(), mu0.real()), im(g.size(), mu0.imag());
    BeltramiOptions o;
    o.pad = 1;
    QCMap map = solve_beltrami(make_beltrami_field(ComplexField(g, re, im)), o);
    for (std::size_t k = 0; k < g.size(); ++k) {
        Point p = g.node(k);
        cplx e = cplx{p.x, p.y} + mu0 * cplx{p.x, -p.y};
        ASSERT_NEAR(map.psi().re()[k], e.real(), 1e-12);
        ASSERT_NEAR(map.psi().im()[k], e.imag(), 1e-12);
    }
    EXPECT_LT(map.info().residual, 1e-12);
}

TEST(Beltrami, ConstantCoefficientOnDiskMatchesAffineOracle) {
    const cplx mu0{0.3, 0.2};
    const double a = 0.5;
    double prev = 0.0;
    for (double h : {1.0 / 64, 1.0 / 128}) {
        Grid2D g = Grid2D::centered(1.0, h);
        QCMap map = solve_beltrami(make_beltrami_field(disk_mu(g, mu0, a)));
        double rel = 0.0;
        for (std::size_t k = 0; k < g.size(); ++k) {
            Point p = g.node(k);
            double r = norm(p);
            if (r > 0.8 * a || r < 0.1) continue;
            cplx z{p.x, p.y}, w{map.psi().re()[k], map.psi().im()[k]};
            rel = std::max(rel, std::abs(w - disk_oracle(z, mu0, a)) / std::abs(disk_oracle(z, mu0, a)));
        }
        EXPECT_LT(rel, 1e-2) << "h = " << h;
        if (prev > 0.0) {
            EXPECT_LT(rel, prev);
        }
        prev = rel;
        EXPECT_GT(map.info().min_jacobian, 0.0);
    }
}

TEST(Beltrami, RegimeAndKBound) {
    Grid2D g = Grid2D::centered(1.0, 0.1);
    EXPECT_NEAR(k_bound(0.5), 3.0, 1e-15);
    EXPECT_THROW(make_beltrami_field(disk_mu(g, {1.0, 0.0}, 0.5)), RegimeError);
    EXPECT_THROW(solve_beltrami(make_beltrami_field(disk_mu(g, {0.7, 0.0}, 0.5))), RegimeError);
}

TEST(Beltrami, CoefficientFromQuotient) {
    Grid2D g = Grid2D::centered(1.0, 0.1);
    ScalarField phi(g, 0.5);
    const double a = (1 - 0.25) / (1 + 0.25);
    BeltramiField bx = beltrami_coefficient(ScalarField::sample(g, [](double x, double) { return x; }), phi);
    BeltramiField by = beltrami_coefficient(ScalarField::sample(g, [](double, double y) { return y; }), phi);
    std::size_t c = g.nearest({0.0, 0.0});
    EXPECT_NEAR(bx.mu.re()[c], a, 1e-14);
    EXPECT_NEAR(by.mu.re()[c], -a, 1e-14);
    EXPECT_NEAR(bx.sup_mu, a, 1e-14);
    EXPECT_NEAR(bx.phi_bound, a, 1e-14);
    EXPECT_EQ(bx.mu.re()[0], 0.0);
    BeltramiField none = beltrami_coefficient(ScalarField(g, 1.0), phi);
    EXPECT_EQ(none.sup_mu, 0.0);
}

TEST(Stream, RecoversXY) {
    Grid2D g = Grid2D::centered(1.0, 1.0 / 16);
    MaskSpec s;
    s.level_sets = {inside_box(-0.9, -0.9, 0.9, 0.9)};
    DomainMask m = build_mask(g, s);
    ScalarField Fx = ScalarField::sample(g, [](double x, double) { return x; });
    ScalarField Fy = ScalarField::sample(g, [](double, double y) { return -y; });
    StreamResult r = stream_function(Fx, Fy, m, 1e-12);
    int n = 0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (!r.valid[k]) continue;
        ++n;
        Point p = g.node(k);
        ASSERT_NEAR(r.u[k], p.x * p.y, 1e-13);
    }
    EXPECT_GT(n, 500);
    ScalarField Gy = ScalarField::sample(g, [](double x, double) { return x; });
    EXPECT_THROW(stream_function(Fx, Gy, m, 1e-6), NonIntegrableError);
}

TEST(Divergence, HatBatteryRespectsExclusions) {
    Grid2D g = Grid2D::centered(2.0, 1.0 / 32);
    ScalarField u = ScalarField::sample(g, [](double x, double) { return x - 0.3; });
    NodalSet F0 = extract_nodal_set(u);
    std::vector<Disk> holes{Disk(-0.8, 0.5, 0.1), Disk(0.8, -0.5, 0.1)};
    HatBatteryOptions o;
    o.R = 1.8;
    o.margin = 0.1;
    o.hole_gap = 0.05;
    o.count = 60;
    auto bat = make_hat_battery(F0, holes, o);
    ASSERT_EQ(bat.size(), 60u);
    int crossing = 0;
    for (const HatCombo& c : bat) {
        crossing += c.crosses_nodal;
        for (const Hat& q : c.hats) {
            EXPECT_LE(norm(q.c) + q.w, o.R - o.margin + 1e-12);
            for (const Disk& d : holes) EXPECT_GE(dist(q.c, d.center()), d.radius + q.w + o.hole_gap - 1e-12);
        }
    }
    EXPECT_GT(crossing, 10);
}

TEST(Divergence, WeakResidualConvergesAndControlFires) {
    std::vector<HatCombo> bat;
    double prev = 0.0;
    for (double h : {1.0 / 32, 1.0 / 64, 1.0 / 128}) {
        Grid2D g = Grid2D::centered(1.5, h);
        ScalarField f = ScalarField::sample(g, [](double x, double y) { return std::exp(x) * std::sin(y) - 0.2; });
        if (bat.empty()) {
            HatBatteryOptions o;
            o.R = 1.2;
            o.w_min = 0.2;
            o.w_max = 0.4;
            bat = make_hat_battery(extract_nodal_set(f), {}, o);
        }
        ScalarField one(g, 1.0);
        DivergenceReport r = divergence_residual(f, one, bat);
        if (prev > 0.0) {
            EXPECT_GT(prev / r.max_ratio, 3.0);
            EXPECT_LT(prev / r.max_ratio, 5.0);
        }
        prev = r.max_ratio;
        std::vector<double> af(f.size());
        for (std::size_t k = 0; k < f.size(); ++k) af[k] = std::abs(f[k]);
        EXPECT_GT(divergence_residual(ScalarField(g, af), one, bat).max_ratio, 0.1);
    }
    EXPECT_LT(prev, 1e-3);
}

TEST(Mori, AffineMapHasNoViolations) {
    Grid2D g = Grid2D::centered(3.5, 1.0 / 16);
    const cplx mu0{0.1, 0.05};
    QCMap map = QCMap::from_values(g, [&](cplx z) { return z + mu0 * std::conj(z); }, k_bound(std::abs(mu0)));
    MoriReport r = verify_mori(map, 3.0, 2000);
    EXPECT_EQ(r.violations, 0);
    EXPECT_EQ(r.window_violations, 0);
    EXPECT_GT(r.min_lower_margin, 1.0);
    EXPECT_NEAR(r.window_min_ratio, r.scale * (1 - std::abs(mu0)), 1e-3);
    EXPECT_NEAR(r.window_max_ratio, r.scale * (1 + std::abs(mu0)), 1e-3);
}

TEST(Mori, DetectsCollapsedMap) {
    Grid2D g = Grid2D::centered(3.5, 1.0 / 16);
    QCMap map = QCMap::from_values(g, [](cplx z) { return cplx{z.real(), 1e-3 * z.imag()}; }, 1.01);
    EXPECT_GT(verify_mori(map, 3.0, 500).violations, 0);
}

TEST(Stoilow, HarmonicAfterAffineMap) {
    const cplx mu0{0.2, 0.1};
    double prev = 0.0;
    for (double h : {1.0 / 16, 1.0 / 32}) {
        Grid2D g = Grid2D::centered(1.2, h);
        QCMap map = QCMap::from_values(g, [&](cplx z) { return z + mu0 * std::conj(z); }, k_bound(std::abs(mu0)));
        // f = Re(psi^3) pulled back: f o psi^-1 = Re w^3 is harmonic.
        ScalarField f = ScalarField::sample(g, [&](double x, double y) {
            cplx w = cplx{x, y} + mu0 * cplx{x, -y};
            return std::pow(w, 3).real() + std::exp(w.real()) * std::cos(w.imag());
        });
        StoilowOptions o;
        o.R = 1.0;
        o.margin = 4 * h;
        StoilowReport r = stoilow_harmonicity(f, map, {}, o);
        EXPECT_GT(r.nodes, 100u);
        EXPECT_LT(r.max_inverse_error, 1e-3 * h);
        if (prev > 0.0) {
            EXPECT_GT(prev / r.residual, 3.0);
        }
        prev = r.residual;
    }
    EXPECT_LT(prev, 1e-2);
}

TEST(Stoilow, InverseRoundTrip) {
    Grid2D g = Grid2D::centered(1.0, 1.0 / 32);
    const cplx mu0{-0.25, 0.1};
    QCMap map = QCMap::from_values(g, [&](cplx z) { return z + mu0 * std::conj(z); }, k_bound(std::abs(mu0)));
    for (double t = 0.0; t < 6.0; t += 0.7) {
        Point z{0.6 * std::cos(t), 0.5 * std::sin(t)};
        QCMap::Inverse inv = map.inverse(map(z));
        ASSERT_TRUE(inv.found);
        EXPECT_NEAR(inv.z.x, z.x, 1e-9);
        EXPECT_NEAR(inv.z.y, z.y, 1e-9);
    }
    EXPECT_FALSE(map.inverse({50.0, 0.0}).found);
}
