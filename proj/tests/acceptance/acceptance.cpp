// Prints one PASS/FAIL line per acceptance criterion; exit status 1 when any fails.
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "landis/landis.hpp"

using namespace landis;
namespace fs = std::filesystem;

namespace tol {
constexpr double manufactured_error = 5e-4;
constexpr double manufactured_lo = 3.5, manufactured_hi = 4.5;
constexpr double manufactured_V = 1.01;
constexpr double manufactured_seconds = 60.0;
constexpr double poincare_rel = 1e-2;
constexpr double poincare_seconds = 120.0;
constexpr double porous_spread = 4.0, porous_max = 50.0;
constexpr double corrector_oracle = 1e-3;
constexpr double corrector_c = 10.0;
constexpr double halving_lo = 3.0, halving_hi = 5.0;
constexpr double control_min = 0.1;
constexpr double affine_rel = 1e-2;
constexpr double beltrami_residual = 1e-3;
constexpr int mori_pairs = 10000;
constexpr double harnack_max = 50.0;
constexpr double single_charge = 1e-6;
constexpr double rezn_rel = 0.05;
constexpr double growth_max = 2.0;
constexpr double carleman_seconds = 120.0;
constexpr double vanishing = 1e-3;
}  // namespace tol

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

fs::path work_dir(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("landis-acceptance-" + name);
    fs::remove_all(p);
    return p;
}

Config pipeline(const fs::path& dir, std::initializer_list<std::pair<const char*, std::string>> sets) {
    Config c = pipeline_config();
    c.set("output.dir", dir.string());
    c.set("output.plots", "false");
    for (auto& [k, v] : sets) c.set(k, v);
    return c;
}

double bessel_zero(double lo, double hi) {
    for (int it = 0; it < 200; ++it) {
        double m = 0.5 * (lo + hi);
        (std::cyl_bessel_j(0.0, lo) * std::cyl_bessel_j(0.0, m) <= 0.0 ? hi : lo) = m;
    }
    return 0.5 * (lo + hi);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome manufactured() {
    auto t0 = Clock::now();
    std::vector<double> err;
    double vsup = 0.0;
    for (double h : {1.0 / 64, 1.0 / 128, 1.0 / 256}) {
        Grid2D g = Grid2D::centered(4.0 + 2 * h, h);
        auto exact = [](Point p) { return std::exp(-norm(p)); };
        MaskSpec s;
        s.level_sets = {inside_ball({0, 0}, 4.0), outside_ball({0, 0}, 1.0)};
        s.boundary = exact;
        DomainMask mask = build_mask(g, s);
        ScalarField V = ScalarField::sample(g, [](double x, double y) {
            double r = std::hypot(x, y);
            return r > 0.5 ? 1.0 / r - 1.0 : 0.0;
        });
        ScalarField u = solve_dirichlet(mask, V);
        double e = 0.0;
        for (std::size_t q = 0; q < mask.interior_count(); ++q) {
            std::size_t k = mask.node_of(q);
            e = std::max(e, std::abs(u[k] - exact(g.node(k))));
            vsup = std::max(vsup, std::abs(V[k]));
        }
        err.push_back(e);
    }
    double f1 = err[0] / err[1], f2 = err[1] / err[2], t = seconds_since(t0);
    bool ok = err[2] <= tol::manufactured_error && vsup <= tol::manufactured_V && t <= tol::manufactured_seconds;
    for (double f : {f1, f2}) ok = ok && f >= tol::manufactured_lo && f <= tol::manufactured_hi;
    return {ok, fmt("err(1/256)=%.3g factors %.3f %.3f ||V||=%.4f %.1fs", err[2], f1, f2, vsup, t)};
}

Outcome poincare_oracles() {
    auto t0 = Clock::now();
    const double h = 1.0 / 64, j01 = bessel_zero(2.0, 3.0), sq = 2 * std::numbers::pi * std::numbers::pi;
    Grid2D gd = Grid2D::centered(1.0 + 2 * h, h);
    MaskSpec sd;
    sd.level_sets = {inside_ball({0, 0}, 1.0)};
    sd.cut = true;
    double disk = poincare_constant(build_mask(gd, sd)).lambda1;
    Grid2D gs = Grid2D::centered(0.5 + 2 * h, h);
    MaskSpec ss;
    ss.level_sets = {inside_box(-0.5, -0.5, 0.5, 0.5)};
    double square = poincare_constant(build_mask(gs, ss)).lambda1;
    double ed = std::abs(disk / (j01 * j01) - 1), es = std::abs(square / sq - 1), t = seconds_since(t0);
    bool ok = ed <= tol::poincare_rel && es <= tol::poincare_rel && t <= tol::poincare_seconds;
    return {ok, fmt("disk %.5f (rel %.2g) square %.4f (rel %.2g) %.1fs", disk, ed, square, es, t)};
}

Outcome porous() {
    std::vector<double> q;
    std::string d;
    for (double eps : {0.1, 0.05, 0.025}) {
        Config c = pipeline(work_dir("porous"), {{"puncture.epsilon", fmt("%.17g", eps)},
                                                 {"geometry.h", fmt("%.17g", eps / 4)},
                                                 {"stages.stop_after", "poincare"}});
        PipelineResult r = run_pipeline(c);
        if (r.exit_code == 2) return {false, "eps " + fmt("%g", eps) + ": " + r.error_message};
        q.push_back(r.report.get("poincare", "k2_over_eps2"));
        d += fmt("eps=%g:%.3f ", eps, q.back());
    }
    double lo = *std::min_element(q.begin(), q.end()), hi = *std::max_element(q.begin(), q.end());
    return {hi / lo <= tol::porous_spread && hi <= tol::porous_max, d + fmt("spread %.3f", hi / lo)};
}

Outcome corrector(const std::vector<const Report*>& runs) {
    const double h = 1.0 / 256;
    Grid2D g = Grid2D::centered(0.5 + 2 * h, h);
    MaskSpec s;
    s.level_sets = {inside_ball({0, 0}, 0.5)};
    CorrectorResult cr = build_corrector(build_mask(g, s), ScalarField(g, 1.0));
    double oracle = 1.0 / std::cyl_bessel_j(0.0, 0.5) - 1.0, e = std::abs(cr.sup_deviation - oracle);
    bool ok = e <= tol::corrector_oracle;
    std::string d = fmt("disk |dev - oracle|=%.2g", e);
    for (const Report* r : runs) {
        double bound = tol::corrector_c * r->get("poincare", "k2") * r->get("input", "V_sup");
        double dev = r->get("corrector", "sup_deviation");
        ok = ok && dev <= bound;
        d += fmt(" pipeline %.4g<=%.4g", dev, bound);
    }
    return {ok, d};
}

struct Ladder {
    std::vector<double> div, control, stoilow;
    std::string error;
};

Ladder refinement_ladder() {
    Ladder L;
    std::vector<HatCombo> battery;
    for (double h : {1.0 / 40, 1.0 / 80, 1.0 / 160}) {
        Config c = pipeline(work_dir("ladder"), {{"geometry.R", "3"},
                                                 {"puncture.epsilon", "0.1"},
                                                 {"geometry.h", fmt("%.17g", h)},
                                                 {"stages.act3", "false"}});
        PipelineResult r = run_pipeline(c, battery.empty() ? nullptr : &battery);
        if (r.exit_code == 2) {
            L.error = r.error_stage + ": " + r.error_message;
            return L;
        }
        if (battery.empty()) battery = r.battery;
        L.div.push_back(r.report.get("divergence", "max_ratio"));
        L.control.push_back(r.report.get("divergence", "control_ratio"));
        L.stoilow.push_back(r.report.get("stoilow", "residual"));
    }
    return L;
}

Outcome halving(const std::vector<double>& v, const std::string& extra = "", bool extra_ok = true) {
    bool ok = extra_ok;
    std::string d = "factors";
    for (std::size_t k = 1; k < v.size(); ++k) {
        double f = v[k - 1] / v[k];
        ok = ok && f >= tol::halving_lo && f <= tol::halving_hi;
        d += fmt(" %.3f", f);
    }
    return {ok, d + extra};
}

Outcome divergence(const Ladder& L) {
    if (!L.error.empty()) return {false, L.error};
    double cmin = *std::min_element(L.control.begin(), L.control.end());
    return halving(L.div, fmt(" control min %.3f", cmin), cmin > tol::control_min);
}

Outcome stoilow(const Ladder& L) {
    if (!L.error.empty()) return {false, L.error};
    return halving(L.stoilow);
}

Outcome beltrami(const Report& run) {
    const cplx mu0{0.3, 0.2};
    const double a = 0.5;
    Grid2D g = Grid2D::centered(1.0, 1.0 / 128);
    std::vector<double> re(g.size(), 0.0), im(g.size(), 0.0);
    for (std::size_t k = 0; k < g.size(); ++k)
        if (norm(g.node(k)) < a) re[k] = mu0.real(), im[k] = mu0.imag();
    QCMap map = solve_beltrami(make_beltrami_field(ComplexField(g, std::move(re), std::move(im))));
    double rel = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        Point p = g.node(k);
        if (norm(p) > 0.8 * a || norm(p) < 0.1) continue;
        cplx z{p.x, p.y}, w{map.psi().re()[k], map.psi().im()[k]}, e = z + mu0 * std::conj(z);
        rel = std::max(rel, std::abs(w - e) / std::abs(e));
    }
    double res = run.get("beltrami", "residual");
    double pairs = 0, viol = 0, wviol = 0;
    for (const Assertion& x : run.assertions()) {
        if (x.stage == "mori" && x.name == "violations") viol = x.value;
        if (x.stage == "mori" && x.name == "window_violations") wviol = x.value;
    }
    pairs = run.get("mori", "window_pairs");
    bool ok = rel <= tol::affine_rel && res <= tol::beltrami_residual && viol == 0 && wviol == 0;
    return {ok, fmt("affine rel %.2g residual %.2g mori violations %g window violations %g over %g pairs", rel, res, viol,
                    wviol, pairs)};
}

Outcome harnack() {
    ToySpec s;
    s.grid_n = 257;
    double worst = 0.0;
    int n = 0;
    generate_ensemble(s, 100, [&](const ToyInstance& t) {
        worst = std::max(worst, harnack_ratios(t, tol::harnack_max).max_ratio);
        ++n;
    });
    ToySpec one;
    one.centers = {{50.0, 20.0}};
    one.charges = {1.3};
    one.poly = {0.5};
    one.grid_n = 129;
    double single = harnack_ratios(generate_instance(one)).max_ratio;
    bool ok = n == 100 && worst <= tol::harnack_max && std::abs(single - 1.0) <= tol::single_charge;
    return {ok, fmt("%d instances max ratio %.3f single charge |ratio - 1|=%.2g", n, worst, std::abs(single - 1.0))};
}

Outcome three_balls() {
    bool ok = true;
    std::string d = "Re z^n:";
    const double R = 200.0;
    for (int n = 1; n <= 4; ++n) {
        std::vector<cplx> poly(static_cast<std::size_t>(n + 1), cplx{0.0, 0.0});
        poly.back() = 1.0;
        double c = three_balls_check(assemble_instance(R, {}, {}, poly, 513), R / 4).C_impl;
        double rel = std::abs(c / (n / R) - 1.0);
        ok = ok && rel <= tol::rezn_rel;
        d += fmt(" %.2g", rel);
    }
    std::vector<double> maxes;
    for (double Rp : {200.0, 400.0, 800.0}) {
        ToySpec s;
        s.R_prime = Rp;
        s.grid_n = 513;
        double m = 0.0;
        generate_ensemble(s, 20, [&](const ToyInstance& t) {
            double c = three_balls_check(t, Rp / 4).C_impl;
            if (!std::isfinite(c)) ok = false;
            m = std::max(m, c);
        });
        maxes.push_back(m);
    }
    double growth = std::max(maxes[1], maxes[2]) / maxes[0];
    ok = ok && growth <= tol::growth_max;
    return {ok, d + fmt(" ensemble max C_impl %.4g %.4g %.4g growth %.3f", maxes[0], maxes[1], maxes[2], growth)};
}

Outcome carleman() {
    auto t0 = Clock::now();
    const double R = 10.0, h = 0.1;
    Grid2D g = Grid2D::centered(R + 4 * h, h);
    MaskSpec ms;
    ms.level_sets = {inside_ball({0, 0}, R)};
    DomainMask m = build_mask(g, ms);
    bool ok = true;
    std::string d;
    for (double k : {1.0, 2.0, 4.0}) {
        CarlemanReport r = carleman_quotient(R, k, 100, m);
        ok = ok && r.min_q >= std::numbers::pi * std::numbers::pi / 8.0;
        d += fmt("k=%g min Q %.3f ", k, r.min_q);
    }
    double t = seconds_since(t0);
    return {ok && t <= tol::carleman_seconds, d + fmt("%.1fs", t)};
}

Outcome vanishing_orders() {
    Grid2D g = Grid2D::centered(1.0, 1.0 / 256);
    double worst = 0.0;
    for (int n = 1; n <= 6; ++n) {
        ScalarField u = ScalarField::sample(g, [&](double x, double y) { return std::pow(cplx{x, y}, n).real(); });
        worst = std::max(worst, std::abs(vanishing_order(u, {0.0625, 0.125, 0.25, 0.5}).order - n));
    }
    return {worst <= tol::vanishing, fmt("max |order - n| %.2g", worst)};
}

Outcome determinism(const fs::path& a, const fs::path& b) {
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(a)) {
        std::string ext = e.path().extension().string();
        if (ext != ".csv" && ext != ".json") continue;
        fs::path other = b / e.path().filename();
        if (!fs::exists(other) || slurp(e.path()) != slurp(other))
            return {false, e.path().filename().string() + " differs"};
        ++files;
    }
    return {files > 0, fmt("%zu CSV/JSON files identical", files)};
}

}  // namespace

int main() {
    int failed = 0;
    auto report = [&](int id, const char* name, const std::function<Outcome()>& fn) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failed;
        std::printf("%s [%2d] %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
        std::fflush(stdout);
    };

    fs::path run_a = work_dir("bessel-a"), run_b = work_dir("bessel-b"), run_exp = work_dir("exp");
    const std::string pairs = std::to_string(tol::mori_pairs);
    PipelineResult bessel = run_pipeline(pipeline(run_a, {{"mori.pairs", pairs}}));
    PipelineResult bessel_again = run_pipeline(pipeline(run_b, {{"mori.pairs", pairs}}));
    PipelineResult expd = run_pipeline(pipeline(run_exp, {{"input.source", "exp-decay"}}));
    Ladder ladder;

    report(1, "manufactured solution convergence", manufactured);
    report(2, "Poincare oracle values", poincare_oracles);
    report(3, "porous Poincare scaling", porous);
    report(4, "corrector bound", [&] {
        if (bessel.exit_code == 2 || expd.exit_code == 2) return Outcome{false, bessel.error_message + expd.error_message};
        return corrector({&bessel.report, &expd.report});
    });
    report(5, "divergence-form residual", [&] {
        ladder = refinement_ladder();
        return divergence(ladder);
    });
    report(6, "Beltrami solver and distortion", [&] {
        if (bessel.exit_code == 2) return Outcome{false, bessel.error_message};
        return beltrami(bessel.report);
    });
    report(7, "Stoilow harmonicity", [&] { return stoilow(ladder); });
    report(8, "Harnack ratios", harnack);
    report(9, "three-balls constant", three_balls);
    report(10, "Carleman quotient", carleman);
    report(11, "vanishing order", vanishing_orders);
    report(12, "determinism", [&] { return determinism(run_a, run_b); });

    std::printf("%d of 12 criteria failed\n", failed);
    return failed == 0 ? 0 : 1;
}
