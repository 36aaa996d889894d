#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "landis/nodal.hpp"
#include "landis/puncture.hpp"

using namespace landis;

namespace {

double bessel_zero(double lo, double hi) {
    for (int it = 0; it < 200; ++it) {
        double m = 0.5 * (lo + hi);
        (std::cyl_bessel_j(0.0, lo) * std::cyl_bessel_j(0.0, m) <= 0.0 ? hi : lo) = m;
    }
    return 0.5 * (lo + hi);
}

ScalarField bessel(const Grid2D& g) {
    return ScalarField::sample(g, [](double x, double y) { return std::cyl_bessel_j(0.0, std::hypot(x, y)); });
}

}  // namespace

TEST(Nodal, BesselCirclesHausdorff) {
    const double h = 1.0 / 64;
    Grid2D g = Grid2D::centered(6.0, h);
    NodalSet F0 = extract_nodal_set(bessel(g));
    const double z1 = bessel_zero(2.0, 3.0), z2 = bessel_zero(5.0, 6.0);
    EXPECT_NEAR(z1, 2.404825557695773, 1e-12);
    double far = 0.0;
    for (const Segment& s : F0.segments())
        for (Point p : {s.a, s.b}) far = std::max(far, std::min(std::abs(norm(p) - z1), std::abs(norm(p) - z2)));
    EXPECT_LT(far, 1e-4);
    double gap = 0.0;
    for (double z : {z1, z2})
        for (int q = 0; q < 720; ++q) {
            double t = 2 * std::numbers::pi * q / 720;
            gap = std::max(gap, F0.distance({z * std::cos(t), z * std::sin(t)}));
        }
    EXPECT_LT(gap, h);
    EXPECT_NEAR(F0.length(), 2 * std::numbers::pi * (z1 + z2), 1e-3);
    EXPECT_EQ(F0.chains().size(), 2u);
}

TEST(Nodal, HarmonicPolynomialRays) {
    for (int n : {2, 3, 5}) {
        Grid2D g = Grid2D::centered(1.0, 1.0 / 100);
        ScalarField u = ScalarField::sample(g, [n](double x, double y) { return std::pow(std::complex<double>(x, y), n).real(); });
        NodalSet F0 = extract_nodal_set(u);
        // Zero set of Re z^n: rays at angle (2k+1) pi / (2n).
        auto ray_dist = [n](Point p) {
            double best = 1e9;
            for (int k = 0; k < 2 * n; ++k) {
                double t = (2 * k + 1) * std::numbers::pi / (2 * n);
                double along = p.x * std::cos(t) + p.y * std::sin(t);
                if (along < 0) continue;
                best = std::min(best, std::abs(-p.x * std::sin(t) + p.y * std::cos(t)));
            }
            return std::min(best, norm(p));
        };
        double worst = 0.0;
        for (const Segment& s : F0.segments())
            if (norm(s.a) > 0.1) worst = std::max(worst, ray_dist(s.a));
        EXPECT_LT(worst, 1e-3) << "n = " << n;
    }
}

TEST(Nodal, CirclePropertyHoldsOnSolution) {
    Grid2D g = Grid2D::centered(4.0, 1.0 / 40);
    ScalarField u = bessel(g);
    NodalSet F0 = extract_nodal_set(u);
    CircleReport r = verify_circle_property(u, F0, 0.5, 300, 3.5);
    EXPECT_GT(r.tested, 200);
    EXPECT_TRUE(r.pass());
}

TEST(Nodal, CirclePropertyFlagsPlantedDefect) {
    // Zero set is a tiny circle; u keeps one sign outside it, so larger circles centred on it
    // neither meet the zero set again nor see a sign change.
    Grid2D g = Grid2D::centered(1.0, 0.005);
    ScalarField u = ScalarField::sample(g, [](double x, double y) { return x * x + y * y - 4e-4; });
    NodalSet F0 = extract_nodal_set(u);
    CircleReport r = verify_circle_property(u, F0, 0.5, 100);
    EXPECT_FALSE(r.pass());
    EXPECT_GT(r.violations.size(), 50u);
}

TEST(Nodal, EmptyForOneSignedField) {
    Grid2D g = Grid2D::centered(1.0, 0.1);
    EXPECT_TRUE(extract_nodal_set(ScalarField(g, 1.0)).empty());
}

class PunctureFixture : public ::testing::Test {
protected:
    static constexpr double R = 3.0, eps = 0.1, C = 3.0;
    Grid2D g = Grid2D::centered(R + 0.1, eps / 4);
    ScalarField u = bessel(g);
    NodalSet F0 = extract_nodal_set(u);
    PunctureConfig cfg() const {
        PunctureConfig c;
        c.epsilon = eps;
        c.C = C;
        c.R = R;
        c.avoid = {{0.0, 0.0}};
        return c;
    }
};

TEST_F(PunctureFixture, InvariantsAndNet) {
    PunctureSet F1 = puncture(F0, cfg());
    EXPECT_FALSE(F1.disks.empty());
    EXPECT_TRUE(F1.invariants_hold);
    EXPECT_TRUE(F1.net.pass);
    EXPECT_GE(F1.min_pair_gap, C * eps * (1 - 1e-12));
    EXPECT_GE(F1.min_nodal_clearance, C * eps * (1 - 1e-12));
    EXPECT_GE(F1.min_boundary_clearance, C * eps * (1 - 1e-12));
}

TEST_F(PunctureFixture, BruteForceMaximality) {
    PunctureConfig c = cfg();
    PunctureSet F1 = puncture(F0, c);
    const double rho = (C + 1) * eps;
    auto seg_dist = [&](Point p) {
        double d = 1e9;
        for (const Segment& s : F0.segments()) d = std::min(d, point_segment_distance(p, s));
        return d;
    };
    for (std::size_t a = 0; a < F1.disks.size(); ++a)
        for (std::size_t b = a + 1; b < F1.disks.size(); ++b)
            ASSERT_GE(dist(F1.disks[a].center(), F1.disks[b].center()), 2 * rho * (1 - 1e-12));
    int blocked = 0;
    for (Point p : detail::candidate_lattice(g, R, 0.5 * rho)) {
        bool taken = false, near_disk = false;
        for (const Disk& d : F1.disks) {
            taken |= dist(p, d.center()) == 0.0;
            near_disk |= dist(p, d.center()) < 2 * rho;
        }
        if (taken) continue;
        bool excluded = norm(p) + rho > R || norm(p) < rho || near_disk || seg_dist(p) < rho;
        EXPECT_TRUE(excluded) << "candidate (" << p.x << ", " << p.y << ") could still be added";
        ++blocked;
    }
    EXPECT_GT(blocked, 0);
}

TEST_F(PunctureFixture, AnnulusKeepsInnerClearance) {
    PunctureConfig c = cfg();
    c.avoid.clear();
    c.r_in = 1.0;
    PunctureSet F1 = puncture(F0, c);
    for (const Disk& d : F1.disks) {
        EXPECT_GE(norm(d.center()) - eps, 1.0 + C * eps * (1 - 1e-12));
    }
    EXPECT_TRUE(F1.invariants_hold);
}

TEST_F(PunctureFixture, ConfigErrors) {
    PunctureConfig c = cfg();
    c.epsilon = g.h();
    EXPECT_THROW(puncture(F0, c), ResolutionError);
    c = cfg();
    c.C = 2.0;
    EXPECT_THROW(puncture(F0, c), ConfigError);
    c = cfg();
    c.r_in = 5.0;
    EXPECT_THROW(puncture(F0, c), ConfigError);
}
