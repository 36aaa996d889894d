#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "landis/toy.hpp"

using namespace landis;

namespace {

ToySpec single(Point c, double charge, cplx constant, int grid_n = 257) {
    ToySpec s;
    s.centers = {c};
    s.charges = {charge};
    s.poly = {constant};
    s.grid_n = grid_n;
    return s;
}

ToyInstance harmonic_polynomial(int n, double R) {
    std::vector<cplx> poly(static_cast<std::size_t>(n + 1), cplx{0.0, 0.0});
    poly.back() = 1.0;
    return assemble_instance(R, {}, {}, poly, 513);
}

}  // namespace

TEST(Toy, SingleChargeHarnackRatioIsOne) {
    ToyInstance t = generate_instance(single({50.0, 20.0}, 1.3, 0.5));
    HarnackReport r = harnack_ratios(t);
    ASSERT_EQ(r.rows.size(), 1u);
    EXPECT_NEAR(r.max_ratio, 1.0, 1e-6);
    EXPECT_NEAR(r.rows[0].min_abs, 1.3 * std::log(3.0) + 0.5, 1e-12);
    EXPECT_NEAR(r.rows[0].max_grad, 1.3 / 3.0, 1e-12);
    EXPECT_TRUE(r.pass);
}

TEST(Toy, HarmonicCertificate) {
    ToyInstance t = generate_instance(single({50.0, 20.0}, 1.0, 0.5));
    EXPECT_LE(t.harmonic_ratio, 10.0);
    EXPECT_GT(t.harmonic_ratio, 0.0);
}

TEST(Toy, SignChangeInAnnulusIsRejected) {
    // log(|z - c| / 3) vanishes on the circle of radius 3 inside 5D \ D.
    EXPECT_THROW(generate_instance(single({50.0, 0.0}, 1.0, -std::log(3.0))), GenerationReject);
    ToyInstance probe = assemble_instance(200.0, {{50.0, 0.0}}, {1.0}, {-std::log(3.0)}, 65);
    SignCheck sc = check_sign_condition(probe, 0.25);
    EXPECT_FALSE(sc.holds);
    EXPECT_EQ(sc.disk, 0);
    EXPECT_NEAR(dist(sc.witness, {50.0, 0.0}), 3.0, 0.3);
}

TEST(Toy, LayoutErrors) {
    EXPECT_THROW(generate_instance(single({2.0, 0.0}, 1.0, 0.5)), GeometryError);
    ToySpec s = single({50.0, 0.0}, 1.0, 0.5);
    s.centers.push_back({100.0, 0.0});
    s.charges.push_back(1.0);
    EXPECT_THROW(generate_instance(s), GeometryError);
}

TEST(Toy, WitnessClosedFormSingleDisk) {
    const Point c{40.0, -30.0};
    ToyInstance t = generate_instance(single(c, 1.0, 0.5));
    const double m = std::log(3.0) + 0.5;
    const double k = 2.0;
    WitnessState w = witness_chase(t, WitnessMode::toy, k);
    ASSERT_EQ(w.disk.size(), 1u);
    EXPECT_NEAR(w.m[0], m, 1e-12);
    EXPECT_NEAR(w.z[0].x, c.x + 3.0, 1e-12);
    EXPECT_NEAR(w.log_weight[0], std::log(m) + k * (c.x + 3.0), 1e-12);
    // |grad h| = 1/3 on the circle, so max log|f| sits at the rightmost point.
    EXPECT_NEAR(w.f_log_max[0], -std::log(3.0) + k * (c.x + 3.0), 1e-9);
    EXPECT_TRUE(w.max_principle);

    WitnessState l = witness_chase(t, WitnessMode::local3, k);
    ASSERT_EQ(l.disk.size(), 1u);
    const double rz = norm(c) - 3.0;
    EXPECT_NEAR(norm(l.z[0]), rz, 1e-12);
    EXPECT_NEAR(l.log_weight[0], std::log(m) - k * std::log(rz), 1e-12);
    EXPECT_TRUE(l.max_principle);
    EXPECT_THROW(witness_chase(t, WitnessMode::toy, 0.5), ConfigError);
}

TEST(Toy, WitnessChoiceIsScaleInvariant) {
    ToySpec s;
    s.R_prime = 200.0;
    s.grid_n = 257;
    s.seed = 3;
    int checked = 0;
    generate_ensemble(s, 3, [&](const ToyInstance& t) {
        for (WitnessMode mode : {WitnessMode::toy, WitnessMode::local3}) {
            WitnessState a = witness_chase(t, mode, 2.0);
            WitnessState b = witness_chase(t.scaled(7.5), mode, 2.0);
            ASSERT_EQ(a.j0, b.j0);
            if (a.j0 >= 0) {
                EXPECT_NEAR(b.log_weight[a.j0] - a.log_weight[a.j0], std::log(7.5), 1e-9);
            }
            EXPECT_TRUE(a.max_principle);
            ++checked;
        }
    });
    EXPECT_EQ(checked, 6);
}

TEST(Toy, GeneratedInstancesSatisfyTheirContract) {
    ToySpec s = ToySpec::reduced(80.0);
    s.grid_n = 257;
    int seen = 0;
    EnsembleStats st = generate_ensemble(s, 5, [&](const ToyInstance& t) {
        ++seen;
        EXPECT_TRUE(t.reduced_scale);
        EXPECT_TRUE(check_sign_condition(t, 0.25).holds);
        for (std::size_t a = 0; a < t.disks.size(); ++a) {
            EXPECT_GT(norm(t.disks[a].center()), 3.0);
            for (std::size_t b = a + 1; b < t.disks.size(); ++b) {
                EXPECT_GE(dist(t.disks[a].center(), t.disks[b].center()) - 2.0, 10.0 - 1e-9);
            }
        }
        EXPECT_LE(t.harmonic_ratio, 10.0);
        ThreeBallsReport tb = three_balls_check(t, t.R_prime / 4.0);
        EXPECT_TRUE(std::isfinite(tb.C_impl));
    });
    EXPECT_EQ(st.accepted, 5);
    EXPECT_EQ(seen, 5);
}

TEST(Toy, ThreeBallsHarmonicPolynomial) {
    for (int n : {1, 2, 3, 4}) {
        const double R = 200.0;
        ToyInstance t = (harmonic_polynomial(n, R));
        ThreeBallsReport tb = three_balls_check(t, R / 4.0);
        EXPECT_NEAR(tb.S_R, std::pow(R, n), 1e-9 * std::pow(R, n));
        EXPECT_NEAR(tb.C_impl / (n / R), 1.0, 0.05) << "n = " << n;
        EXPECT_TRUE(tb.pass);
    }
    ToyInstance t = (harmonic_polynomial(2, 40.0));
    EXPECT_THROW(three_balls_check(t, 20.0), GeometryError);
}

TEST(Carleman, QuotientAboveProofConstant) {
    const double R = 10.0, h = 0.1;
    Grid2D g = Grid2D::centered(R + 4 * h, h);
    MaskSpec ms;
    ms.level_sets = {inside_ball({0, 0}, R)};
    DomainMask m = build_mask(g, ms);
    for (double k : {1.0, 2.0, 4.0}) {
        CarlemanReport r = carleman_quotient(R, k, 20, m);
        EXPECT_TRUE(r.positive);
        EXPECT_GE(r.min_q, std::numbers::pi * std::numbers::pi / 8.0);
        EXPECT_TRUE(r.pass);
    }
    EXPECT_THROW(carleman_quotient(R, 0.0, 1, m), ConfigError);
}

TEST(Carleman, ShiftDoesNotChangeQuotient) {
    const double R = 40.0, h = 0.25;
    Grid2D g = Grid2D::centered(R + 4 * h, h);
    MaskSpec ms;
    ms.level_sets = {inside_ball({0, 0}, R)};
    DomainMask m = build_mask(g, ms);
    ScalarField u = ScalarField::sample(g, [](double x, double y) {
        double s = 1.0 - (x * x + y * y) / 100.0;
        return s > 0.0 ? s * s * s * s : 0.0;
    });
    const double k = 8.0;  // kR = 320 takes the shifted branch
    auto [num, den] = detail::carleman_sums(m, u, k, 0.0);
    double direct = num / ((k * k / (R * R)) * den);
    EXPECT_NEAR(carleman_q(m, u, R, k) / direct, 1.0, 1e-12);
}

TEST(Carleman, SplitIdentity) {
    const double R = 6.0, h = 0.05;
    Grid2D g = Grid2D::centered(R + 4 * h, h);
    MaskSpec ms;
    ms.level_sets = {inside_ball({0, 0}, R)};
    DomainMask m = build_mask(g, ms);
    ScalarField v = ScalarField::sample(g, [](double x, double y) {
        double s = 1.0 - ((x - 1) * (x - 1) + y * y) / 9.0;
        return s > 0.0 ? s * s * s * s : 0.0;
    });
    for (double k : {1.0, 2.0, 4.0}) {
        CarlemanSplit sp = carleman_split(m, v, k);
        EXPECT_NEAR((sp.main_term + sp.drift_term) / sp.lhs, 1.0, 0.05) << "k = " << k;
        EXPECT_GE(sp.lhs, sp.drift_term * 0.95);
    }
}

TEST(Carleman, DecayExperiment) {
    ToySpec s;
    s.R_prime = 200.0;
    s.grid_n = 257;
    s.boundary_margin = 20.0;
    int n = 0;
    generate_ensemble(s, 2, [&](const ToyInstance& t) {
        CarlemanDecayReport r = carleman_decay_experiment(t);
        EXPECT_GT(r.inner, 0.0);
        EXPECT_GT(r.outer, 0.0);
        EXPECT_TRUE(std::isfinite(r.C_fit));
        ++n;
    });
    EXPECT_EQ(n, 2);
    ToyInstance edge = generate_instance(single({193.0, 0.0}, 1.0, 0.5));
    EXPECT_THROW(carleman_decay_experiment(edge), GeometryError);
}
