#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "landis/field_io.hpp"
#include "landis/fundamental.hpp"
#include "landis/grid.hpp"
#include "landis/interp.hpp"

using namespace landis;

TEST(Grid, CenteredGridHasNodeAtOrigin) {
    Grid2D g = Grid2D::centered(1.0, 0.1);
    EXPECT_EQ(g.nx(), 21);
    Point p = g.node(g.nearest({0.0, 0.0}));
    EXPECT_NEAR(p.x, 0.0, 1e-15);
    EXPECT_NEAR(p.y, 0.0, 1e-15);
    EXPECT_NEAR(g.xmax(), 1.0, 1e-12);
}

TEST(Grid, RejectsDegenerateGrids) {
    EXPECT_THROW(Grid2D(0, 0, 0.0, 5, 5), DimensionError);
    EXPECT_THROW(Grid2D(0, 0, 0.1, 2, 5), DimensionError);
    Grid2D g = Grid2D::centered(1.0, 0.1);
    EXPECT_THROW(ScalarField(g, std::vector<double>(3)), DimensionError);
    EXPECT_THROW(ScalarField(g, std::nan("")), DimensionError);
}

TEST(Grid, LaplacianExactOnQuadratics) {
    Grid2D g = Grid2D::centered(1.0, 0.05);
    ScalarField q = ScalarField::sample(g, [](double x, double y) { return 3 * x * x - y * y + 2 * x * y + x; });
    FlaggedField L = laplacian5(q);
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (g.on_ring(g.i_of(k), g.j_of(k))) {
            EXPECT_EQ(L.valid[k], 0);
            continue;
        }
        EXPECT_EQ(L.valid[k], 1);
        EXPECT_NEAR(L.value[k], 4.0, 1e-9);
    }
}

TEST(Grid, LaplacianSecondOrderOnSmoothField) {
    double prev = 0.0;
    for (double h : {0.04, 0.02, 0.01}) {
        Grid2D g = Grid2D::centered(1.0, h);
        ScalarField f = ScalarField::sample(g, [](double x, double y) { return std::sin(x) * std::exp(y); });
        FlaggedField L = laplacian5(f);
        double err = 0.0;
        for (std::size_t k = 0; k < g.size(); ++k)
            if (L.valid[k]) err = std::max(err, std::abs(L.value[k]));
        if (prev > 0.0) {
            EXPECT_NEAR(prev / err, 4.0, 0.2);
        }
        prev = err;
    }
}

TEST(Grid, SupOnRegionRespectsHoles) {
    Grid2D g = Grid2D::centered(2.0, 0.01);
    ScalarField f = ScalarField::sample(g, [](double x, double y) { return std::exp(-((x - 1) * (x - 1) + y * y) * 4); });
    SupResult full = sup_on_region(f, Region::ball({0, 0}, 1.5));
    EXPECT_NEAR(full.value, 1.0, 1e-12);
    SupResult holed = sup_on_region(f, Region::ball_minus({0, 0}, 1.5, {Disk(1.0, 0.0, 0.2)}, 2.0));
    EXPECT_NEAR(holed.value, std::exp(-4 * 0.16), 0.02);
    EXPECT_GE(dist(holed.at, {1.0, 0.0}), 0.4);
    EXPECT_THROW(sup_on_region(f, Region::annulus({0, 0}, 0.001, 0.002)), EmptyRegionError);
    EXPECT_THROW(Region::annulus({0, 0}, 1.0, 0.5), GeometryError);
    EXPECT_THROW(Disk(0, 0, -1), GeometryError);
}

TEST(Grid, BicubicReproducesQuadraticsAndNodes) {
    Grid2D g = Grid2D::centered(1.0, 0.1);
    auto p3 = [](double x, double y) { return x * x - 2 * x * y + y + 0.5; };
    ScalarField f = ScalarField::sample(g, p3);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> U(-0.7, 0.7);
    for (int t = 0; t < 50; ++t) {
        Point p{U(rng), U(rng)};
        EXPECT_NEAR(bicubic(f, p), p3(p.x, p.y), 1e-12);
    }
    ScalarField c = ScalarField::sample(g, [](double x, double y) { return std::sin(5 * x) * y * y * y; });
    for (std::size_t k = 0; k < g.size(); k += 7) {
        int i = g.i_of(k), j = g.j_of(k);
        if (i < 2 || j < 2 || i > g.nx() - 3 || j > g.ny() - 3) continue;
        EXPECT_NEAR(bicubic(c, g.node(k)), c[k], 1e-14);
    }
}

TEST(FieldIo, RoundTripIsBitExact) {
    Grid2D g(-0.3, 0.7, 1.0 / 3.0, 7, 5);
    ScalarField f = ScalarField::sample(g, [](double x, double y) { return std::sin(x * 17.0) / 3.0 + y * 1e-300; });
    auto path = std::filesystem::temp_directory_path() / "landis_roundtrip.field";
    write_field(path.string(), f);
    ScalarField r = read_scalar_field(path.string());
    ASSERT_TRUE(r.grid() == g);
    for (std::size_t k = 0; k < g.size(); ++k) {
        EXPECT_EQ(r[k], f[k]);
    }
    ComplexField c(g, f.values(), std::vector<double>(g.size(), -2.5));
    write_field(path.string(), c);
    ComplexField rc = read_complex_field(path.string());
    for (std::size_t k = 0; k < g.size(); ++k) {
        EXPECT_EQ(rc.im()[k], -2.5);
    }
    EXPECT_THROW(read_scalar_field(path.string()), FormatError);
    std::filesystem::remove(path);
}

// Newtonian potential of the indicator of the disk of radius a: (r^2 - a^2)/4 + (a^2/2) log a
// inside, (a^2/2) log r outside.
TEST(Fundamental, DiskPotentialOracle) {
    const double a = 0.5;
    auto exact = [a](double r) { return r < a ? (r * r - a * a) / 4 + 0.5 * a * a * std::log(a) : 0.5 * a * a * std::log(r); };
    double prev = 0.0;
    for (double h : {1.0 / 32, 1.0 / 64, 1.0 / 128}) {
        Grid2D g = Grid2D::centered(1.0, h);
        // Cell-fraction weights keep the source second-order accurate.
        ScalarField src = ScalarField::sample(g, [&](double x, double y) {
            int in = 0;
            for (int s = 0; s < 8; ++s)
                for (int t = 0; t < 8; ++t)
                    in += std::hypot(x + (s + 0.5) * h / 8 - h / 2, y + (t + 0.5) * h / 8 - h / 2) < a;
            return in / 64.0;
        });
        ScalarField u = convolve_fundamental(src);
        double err = 0.0;
        for (std::size_t k = 0; k < g.size(); ++k) {
            Point p = g.node(k);
            if (norm(p) > 0.9) continue;
            err = std::max(err, std::abs(u[k] - exact(norm(p))));
        }
        EXPECT_LT(err, 2e-3);
        if (prev > 0.0) {
            EXPECT_GT(prev / err, 1.8);
        }
        prev = err;
    }
}

TEST(Fundamental, RejectsSourceOnRing) {
    Grid2D g = Grid2D::centered(1.0, 0.25);
    std::vector<double> v(g.size(), 0.0);
    v[0] = 1.0;
    EXPECT_THROW(convolve_fundamental(ScalarField(g, v)), SupportError);
}
