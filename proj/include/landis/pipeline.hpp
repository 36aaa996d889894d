#pragma once

#include <cmath>
#include <filesystem>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "landis/config.hpp"
#include "landis/corrector.hpp"
#include "landis/decay.hpp"
#include "landis/field_io.hpp"
#include "landis/poincare.hpp"
#include "landis/puncture.hpp"
#include "landis/quasiconformal.hpp"
#include "landis/report.hpp"
#include "landis/svg.hpp"
#include "landis/toy.hpp"

namespace landis {

inline constexpr int kSchemaVersion = 1;

inline std::vector<ConfigKey> pipeline_schema() {
    return {
        {"input", "source", "bessel-disk", "bessel-disk | harmonic-Rezn | exp-decay | file"},
        {"input", "n", "3", "order n of Re z^n (harmonic-Rezn)"},
        {"input", "field", "", "field file holding u (source = file)"},
        {"input", "potential", "", "field file holding V; manufactured from u when empty"},
        {"geometry", "R", "", "outer radius; builtin default when empty (2.8)"},
        {"geometry", "r_in", "", "inner radius of an annular domain; 1 for exp-decay, 0 otherwise"},
        {"geometry", "grid", "512", "nodes per side (odd count used: 2m+1 <= grid)"},
        {"geometry", "h", "", "grid spacing; overrides geometry.grid when set"},
        {"puncture", "c", "0.05", "eps = c / sqrt(log R)"},
        {"puncture", "C", "3", "separation constant"},
        {"puncture", "epsilon", "", "explicit eps; overrides the c-rule"},
        {"puncture", "avoid_origin", "true", "keep puncture disks away from the origin"},
        {"mask", "cut", "true", "cut-cell boundaries (false: staircase)"},
        {"corrector", "tol", "1e-8", "series stopping tolerance relative to ||V||_inf"},
        {"corrector", "guard", "0.5", "regime guard on k2 ||V||_inf"},
        {"corrector", "c_eps", "50", "acceptance constant for ||phi - 1|| <= c eps^2 ||V||"},
        {"corrector", "c_k2", "10", "acceptance constant for ||phi - 1|| <= c k2 ||V||"},
        {"corrector", "phi_floor", "0.1", "floor for phi in the quotient u/phi"},
        {"divergence", "hats", "100", "test-function combinations"},
        {"divergence", "seed", "11", "hat battery seed"},
        {"divergence", "tol", "1e-2", "acceptance bound on the weak residual"},
        {"divergence", "control_min", "0.1", "required residual of the |f| negative control"},
        {"beltrami", "pad", "4", "zero-padding factor per dimension"},
        {"beltrami", "tol", "1e-13", "Neumann iteration tolerance"},
        {"beltrami", "residual_max", "1e-3", "acceptance bound on the Beltrami residual"},
        {"mori", "pairs", "10000", "random pairs for the distortion check"},
        {"mori", "seed", "3", "pair seed"},
        {"stoilow", "tol", "1e-2", "acceptance bound on h^2 max|lap| / max|h|"},
        {"three_balls", "C_acc", "10", "acceptance bound on C_impl"},
        {"decay", "radii", "", "comma-separated radii; 12 evenly spaced radii when empty"},
        {"stages", "act2", "true", "run corrector, divergence and the quasiconformal map"},
        {"stages", "act3", "true", "run the punctured-harmonic checks on the mapped field"},
        {"stages", "stop_after", "", "stage name after which the run ends"},
        {"output", "dir", "landis-out", "output directory"},
        {"output", "plots", "true", "write SVG plots"},
        {"output", "fields", "false", "write u, V, phi, f and psi as field files"},
        {"toy", "R_prime", "200", "outer radius R'"},
        {"toy", "separation", "100", "boundary-to-boundary separation of the unit disks"},
        {"toy", "reduced", "false", "label the run as reduced scale"},
        {"toy", "count", "20", "accepted instances to generate"},
        {"toy", "seed", "1", "first instance seed"},
        {"toy", "grid", "1025", "nodes per side of the instance grid"},
        {"toy", "poly_degree", "1", "degree of the random harmonic polynomial"},
        {"toy", "mixed_signs", "true", "random charge signs"},
        {"toy", "mode", "toy", "witness chase mode: toy | local3"},
        {"toy", "k", "2", "witness exponent"},
        {"toy", "A_acc", "50", "acceptance bound on Harnack ratios"},
        {"carleman", "R", "10", "ball radius"},
        {"carleman", "k", "1,2,4", "weights e^{k x_1}"},
        {"carleman", "trials", "100", "random compactly supported fields per k"},
        {"carleman", "h", "0.1", "grid spacing"},
        {"carleman", "seed", "5", "field seed"},
    };
}

inline Config pipeline_config() { return Config(pipeline_schema()); }

// ---------------------------------------------------------------- inputs

struct InputField {
    std::string name, formula;
    ScalarField u, V;
    double R = 0.0, r_in = 0.0;
    int order = 0;  // known vanishing order at 0, -1 when not applicable
};

inline Grid2D pipeline_grid(double R, int grid_n, std::optional<double> h) {
    if (h) {
        if (!(*h > 0.0)) throw ConfigError("geometry.h must be positive");
        return Grid2D::centered(R + 8.0 * *h, *h);
    }
    int m = (grid_n - 1) / 2;
    if (m < 24) throw ConfigError("geometry.grid too small");
    if (grid_n > 2049) throw ConfigError("geometry.grid exceeds the 2048 cap");
    double hh = R / (m - 8);
    return Grid2D::centered(m * hh, hh);
}

inline InputField make_builtin(const std::string& name, double R, const Grid2D& g, int n) {
    InputField in;
    in.name = name;
    in.R = R;
    in.order = -1;
    if (name == "bessel-disk") {
        in.formula = "u = J0(|x|), V = 1";
        in.u = ScalarField::sample(g, [](double x, double y) { return std::cyl_bessel_j(0.0, std::hypot(x, y)); });
        in.V = ScalarField(g, 1.0);
        in.order = 0;
    } else if (name == "harmonic-Rezn") {
        if (n < 1) throw ConfigError("input.n must be >= 1");
        in.formula = "u = Re z^" + std::to_string(n) + ", V = 0";
        in.u = ScalarField::sample(g, [n](double x, double y) { return std::pow(cplx{x, y}, n).real(); });
        in.V = ScalarField(g, 0.0);
        in.order = n;
    } else if (name == "exp-decay") {
        in.formula = "u = exp(-|x|), V = 1/|x| - 1 on 1 < |x| < R";
        in.r_in = 1.0;
        in.u = ScalarField::sample(g, [](double x, double y) { return std::exp(-std::hypot(x, y)); });
        in.V = ScalarField::sample(g, [](double x, double y) {
            double r = std::hypot(x, y);
            return r >= 0.5 ? 1.0 / r - 1.0 : 0.0;
        });
    } else {
        throw ConfigError("unknown builtin '" + name + "'");
    }
    return in;
}

inline InputField load_input(const Config& cfg) {
    const std::string src = cfg.str("input.source");
    std::optional<double> h;
    if (!cfg.empty("geometry.h")) h = cfg.num("geometry.h");
    if (src == "file") {
        if (cfg.empty("input.field")) throw ConfigError("input.field is required for source = file");
        InputField in;
        in.name = "file";
        in.u = read_scalar_field(cfg.str("input.field"));
        in.R = cfg.empty("geometry.R") ? 0.0 : cfg.num("geometry.R");
        in.r_in = cfg.empty("geometry.r_in") ? 0.0 : cfg.num("geometry.r_in");
        if (!(in.R > 0.0)) throw ConfigError("geometry.R is required for source = file");
        if (!cfg.empty("input.potential")) {
            in.V = read_scalar_field(cfg.str("input.potential"));
            require_same_grid(in.u.grid(), in.V.grid(), "input");
            in.formula = "u, V from files";
        } else {
            in.V = manufacture_potential(in.u, 1e-8, Region::ball({0.0, 0.0}, in.R)).V;
            in.formula = "u from file, V = -lap5(u)/u";
        }
        in.order = -1;
        return in;
    }
    double R = cfg.empty("geometry.R") ? 2.8 : cfg.num("geometry.R");
    Grid2D g = pipeline_grid(R, static_cast<int>(cfg.integer("geometry.grid")), h);
    InputField in = make_builtin(src, R, g, static_cast<int>(cfg.integer("input.n")));
    if (!cfg.empty("geometry.r_in")) in.r_in = cfg.num("geometry.r_in");
    return in;
}

// ---------------------------------------------------------------- Act I

struct ActOne {
    double eps = 0.0, C = 3.0;
    NodalSet F0;
    PunctureSet F1;
    std::shared_ptr<DiskIndex> holes;
    DomainMask mask;
};

inline double epsilon_rule(double c, double R) {
    if (!(R > 2.0)) throw ConfigError("R must exceed 2");
    return c / std::sqrt(std::log(R));
}

inline ActOne build_act_one(const InputField& in, NodalSet F0, double eps, double C, bool avoid_origin, bool cut) {
    const Grid2D& g = in.u.grid();
    PunctureConfig pc;
    pc.epsilon = eps;
    pc.C = C;
    pc.R = in.R;
    pc.r_in = in.r_in;
    if (avoid_origin && in.r_in == 0.0) pc.avoid.push_back({0.0, 0.0});
    if (in.r_in == 0.0) {
        Point zmax = argmax_abs_in_ball(in.u, in.R / 2.0);
        if (pc.avoid.empty() || dist(zmax, pc.avoid.front()) > 0.0) pc.avoid.push_back(zmax);
    }
    PunctureSet F1 = puncture(F0, pc);
    auto holes = std::make_shared<DiskIndex>(F1.disks);
    MaskSpec ms;
    ms.level_sets = {inside_ball({0.0, 0.0}, in.R), outside_disks(holes)};
    if (in.r_in > 0.0) ms.level_sets.push_back(outside_ball({0.0, 0.0}, in.r_in));
    ms.nodal = &in.u;
    ms.cut = cut;
    DomainMask mask = build_mask(g, ms);
    return ActOne{eps, C, std::move(F0), std::move(F1), std::move(holes), std::move(mask)};
}

inline ActOne build_act_one(const InputField& in, double eps, double C, bool avoid_origin, bool cut) {
    return build_act_one(in, extract_nodal_set(in.u), eps, C, avoid_origin, cut);
}

// ---------------------------------------------------------------- pipeline run

struct PipelineResult {
    Report report;
    int exit_code = 0;
    std::string error_stage, error_message;
    Grid2D grid;
    std::vector<HatCombo> battery;  // as used by the divergence stage
};

namespace detail {

inline std::vector<double> default_radii(const InputField& in) {
    const double h = in.u.grid().h();
    double lo = std::max(in.r_in + 4.0 * h, in.R / 8.0), hi = in.R - 4.0 * h;
    lo = std::max(lo, 1.0 + 4.0 * h);
    std::vector<double> r;
    if (!(hi > lo)) return r;
    for (int k = 0; k < 12; ++k) r.push_back(lo + (hi - lo) * k / 11.0);
    return r;
}

inline ojson config_json(const Config& cfg) {
    ojson j = ojson::object();
    for (auto& [k, v] : cfg.entries())
        if (k != "output.dir") j[k] = v;
    return j;
}

}  // namespace detail

// One JSON object per line; the only output that carries wall-clock times.
inline void write_diagnostics(const std::string& path, const Diagnostics& d) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write " + path);
    for (const SolveRecord& r : d.records()) {
        ojson j = {{"operation", r.operation},
                   {"grid", {{"nx", r.nx}, {"ny", r.ny}, {"h", r.h}}},
                   {"unknowns", r.unknowns},
                   {"method", r.method},
                   {"iterations", r.iterations},
                   {"relative_residual", json_num(r.relative_residual)},
                   {"wall_time_ms", r.wall_time_ms}};
        out << j.dump() << '\n';
    }
}

// Runs every stage in order; an exception halts the run and is filed under the stage that raised it.
inline PipelineResult run_pipeline(const Config& cfg, const std::vector<HatCombo>* preset_battery = nullptr) {
    PipelineResult out;
    Report& rep = out.report;
    const std::filesystem::path dir = cfg.str("output.dir");
    std::filesystem::create_directories(dir);
    const bool plots = cfg.flag("output.plots");
    std::string current = "config";
    const std::string stop_after = cfg.str("stages.stop_after");
    const bool fields = cfg.flag("output.fields");
    struct Halt {};
    auto begin = [&](const std::string& s) { current = s; };
    auto done = [&](const std::string& s) {
        rep.stage(s, "ok");
        if (s == stop_after) throw Halt{};
    };
    auto save = [&](const std::string& name, const auto& field) {
        if (fields) write_field((dir / (name + ".field")).string(), field);
    };
    std::vector<std::vector<double>> puncture_rows, term_rows, decay_rows, ritz_rows, tb_rows, poincare_rows, corrector_rows,
        mori_rows;
    bool punctured = false;
    ojson puncture_doc;
    Diagnostics diag;
    svg::Scatter scatter;

    try {
        const bool act2 = cfg.flag("stages.act2");
        const bool act3 = cfg.flag("stages.act3") && act2;

        begin("input");
        InputField in = load_input(cfg);
        const Grid2D& g = in.u.grid();
        out.grid = g;
        if (!(in.R > 2.0)) throw ConfigError("R must exceed 2");
        const double eps = cfg.empty("puncture.epsilon") ? epsilon_rule(cfg.num("puncture.c"), in.R) : cfg.num("puncture.epsilon");
        double vsup = 0.0;
        for (std::size_t k = 0; k < g.size(); ++k) {
            double r = norm(g.node(k));
            if (r <= in.R && r >= in.r_in) vsup = std::max(vsup, std::abs(in.V[k]));
        }
        rep.text("input", "source", in.name);
        rep.text("input", "formula", in.formula);
        rep.value("input", "h", g.h(), "grid spacing");
        rep.value("input", "nx", g.nx(), "nodes per row");
        rep.value("input", "R", in.R, "outer radius");
        rep.value("input", "r_in", in.r_in, "inner radius");
        rep.value("input", "epsilon", eps, cfg.empty("puncture.epsilon") ? "c / sqrt(log R)" : "configured");
        rep.value("input", "V_sup", vsup, "max |V| over the domain nodes");
        save("u", in.u);
        save("V", in.V);
        if (eps < 4.0 * g.h()) {
            std::ostringstream os;
            os << "eps = " << eps << " < 4h = " << 4.0 * g.h();
            throw ResolutionError(os.str());
        }
        done("input");

        begin("nodal");
        NodalSet F0 = extract_nodal_set(in.u);
        rep.value("nodal", "segments", static_cast<double>(F0.segments().size()), "marching-squares segments of u = 0");
        rep.value("nodal", "chains", static_cast<double>(F0.chains().size()), "stitched polylines");
        rep.value("nodal", "length", F0.length(), "sum of segment lengths");
        if (!F0.empty()) {
            double r0 = 0.5 / std::max(1.0, std::sqrt(vsup));
            CircleReport cr = verify_circle_property(in.u, F0, r0, 200, in.R);
            rep.value("nodal", "circle_tested", cr.tested, "circles C(z0, r), z0 on F0, r < r0");
            rep.value("nodal", "circle_r0", r0, "0.5 / max(1, sqrt(||V||))");
            rep.check("nodal", "circle_violations", static_cast<double>(cr.violations.size()), "==", 0.0);
        }
        done("nodal");

        begin("puncture");
        ActOne a1 = build_act_one(in, std::move(F0), eps, cfg.num("puncture.C"), cfg.flag("puncture.avoid_origin"),
                                  cfg.flag("mask.cut"));
        const PunctureSet& F1 = a1.F1;
        rep.value("puncture", "disks", static_cast<double>(F1.disks.size()), "accepted eps-disks");
        rep.value("puncture", "lattice_spacing", F1.lattice_spacing, "(C+1) eps / 2");
        rep.value("puncture", "min_pair_gap", F1.min_pair_gap, "min |c_a - c_b| - 2 eps");
        rep.value("puncture", "min_nodal_clearance", F1.min_nodal_clearance, "min dist(c, F0) - eps");
        rep.value("puncture", "min_boundary_clearance", F1.min_boundary_clearance, "min (R - |c|) - eps");
        rep.value("puncture", "covering_radius", F1.net.covering_radius, "max over nodes of dist(x, F0 u F1 u dB)");
        rep.check("puncture", "invariants", F1.invariants_hold ? 1.0 : 0.0, "==", 1.0, "separations >= C eps");
        rep.check("puncture", "net_covering_radius", F1.net.covering_radius, "<=", F1.net.threshold, "10 C eps");
        for (const Disk& d : F1.disks) puncture_rows.push_back({d.cx, d.cy, d.radius});
        punctured = true;
        puncture_doc = {{"epsilon", F1.config.epsilon}, {"C", F1.config.C}, {"R", F1.config.R},
                        {"avoid", ojson::array()}, {"disks", ojson::array()}};
        for (Point a : F1.config.avoid) puncture_doc["avoid"].push_back({{"x", a.x}, {"y", a.y}});
        for (const Disk& d : F1.disks) puncture_doc["disks"].push_back({{"cx", d.cx}, {"cy", d.cy}, {"r", d.radius}});
        done("puncture");

        begin("mask");
        rep.value("mask", "interior_nodes", static_cast<double>(a1.mask.interior_count()), "unknowns of Omega");
        rep.text("mask", "boundary", cfg.flag("mask.cut") ? "cut" : "staircase");
        done("mask");

        begin("poincare");
        PoincareOptions po;
        po.diagnostics = &diag;
        PoincareEstimate pe = poincare_constant(a1.mask, po);
        ThinDomainReport thin = thin_domain_bound(a1.mask, pe.k2);
        poincare_rows.push_back({eps, pe.lambda1, pe.k2, pe.k2 / (eps * eps), thin.c,
                                 thin.applicable ? thin.bound : std::numeric_limits<double>::quiet_NaN()});
        rep.value("poincare", "lambda1", pe.lambda1, "smallest Dirichlet eigenvalue of -lap5 on Omega");
        rep.value("poincare", "k2", pe.k2, "1 / lambda1");
        rep.value("poincare", "k2_over_eps2", pe.k2 / (eps * eps), "k2 / eps^2");
        rep.value("poincare", "iterations", pe.iterations, "LOBPCG iterations");
        rep.check("poincare", "k2_over_eps2", pe.k2 / (eps * eps), "<=", 50.0, "porous Poincare bound");
        for (std::size_t k = 0; k < pe.ritz_history.size(); ++k)
            ritz_rows.push_back({static_cast<double>(k + 1), pe.ritz_history[k]});
        done("poincare");

        scatter.title = "nodal set and puncture disks";
        scatter.extent = in.R * 1.05;
        scatter.disks = F1.disks;
        scatter.polylines = a1.F0.chains();
        scatter.circles = {in.R};
        if (in.r_in > 0.0) scatter.circles.push_back(in.r_in);

        if (!act2) {
            rep.stage("corrector", "skipped", "stages.act2 = false");
        } else {
            begin("corrector");
            CorrectorOptions co;
            co.tol = cfg.num("corrector.tol");
            co.guard_limit = cfg.num("corrector.guard");
            co.k2 = pe.k2;
            co.diagnostics = &diag;
            CorrectorResult cr = build_corrector(a1.mask, in.V, co);
            OutcomeReport oc = verify_outcome(cr, a1.mask, co.tol, eps, cfg.num("corrector.c_eps"), cfg.num("corrector.c_k2"));
            rep.value("corrector", "terms", cr.n_terms, "Neumann terms until ||phi_n|| < tol ||V||");
            rep.value("corrector", "sup_deviation", cr.sup_deviation, "||phi - 1||_inf");
            rep.value("corrector", "residual", cr.residual, "||lap phi + V phi||_inf / ||V||_inf");
            rep.value("corrector", "max_ratio", cr.max_ratio, "max ||phi_{n+1}|| / ||phi_n||");
            rep.value("corrector", "min_phi", cr.min_phi, "min phi");
            rep.value("corrector", "k2_ratio", oc.k2_ratio, "||phi - 1|| / (k2 ||V||)");
            rep.value("corrector", "eps_ratio", oc.eps_ratio, "||phi - 1|| / (eps^2 ||V||)");
            rep.check("corrector", "residual", cr.residual, "<=", 10.0 * co.tol);
            rep.check("corrector", "boundary_deviation", oc.boundary_deviation, "==", 0.0, "phi = 1 off Omega");
            rep.check("corrector", "k2_ratio", oc.k2_ratio, "<=", oc.c_k2);
            rep.check("corrector", "eps_ratio", oc.eps_ratio, "<=", oc.c_eps);
            corrector_rows.push_back({static_cast<double>(cr.n_terms), cr.sup_deviation, cr.k2_used, cr.residual});
            for (std::size_t k = 0; k < cr.terms.size(); ++k)
                term_rows.push_back({static_cast<double>(k + 1), cr.terms[k], cr.certificates[k]});
            done("corrector");

            begin("divergence");
            ScalarField f = quotient_field(in.u, cr.phi, cfg.num("corrector.phi_floor"));
            save("phi", cr.phi);
            save("f", f);
            std::vector<Disk> excl = F1.disks;
            if (in.r_in > 0.0) excl.emplace_back(0.0, 0.0, in.r_in);
            if (preset_battery) {
                out.battery = *preset_battery;
            } else {
                HatBatteryOptions ho;
                ho.count = static_cast<int>(cfg.integer("divergence.hats"));
                ho.R = in.R;
                ho.w_min = 1.5 * eps;
                ho.w_max = 2.5 * eps;
                ho.margin = 2.0 * eps;
                ho.hole_gap = eps;
                ho.seed = static_cast<std::uint64_t>(cfg.integer("divergence.seed"));
                out.battery = make_hat_battery(a1.F0, excl, ho);
            }
            DivergenceReport dr = divergence_residual(f, cr.phi, out.battery);
            rep.value("divergence", "max_ratio", dr.max_ratio, "max over hats |<phi^2 grad f, grad eta>| / norms");
            rep.check("divergence", "max_ratio", dr.max_ratio, "<=", cfg.num("divergence.tol"));
            if (!a1.F0.empty()) {
                std::vector<double> af(f.size());
                for (std::size_t k = 0; k < f.size(); ++k) af[k] = std::abs(f[k]);
                DivergenceReport bad = divergence_residual(ScalarField(g, std::move(af)), cr.phi, out.battery);
                rep.value("divergence", "control_ratio", bad.max_ratio, "same test on |f| (kink across F0)");
                rep.check("divergence", "control_ratio", bad.max_ratio, ">=", cfg.num("divergence.control_min"));
            }
            done("divergence");

            begin("beltrami");
            const double Rr = in.R, ri = in.r_in;
            auto holes = a1.holes;
            auto om1 = [Rr, ri, holes](Point p) {
                double r = norm(p);
                return r < Rr && r > ri && holes->level(p) < 0.0;
            };
            BeltramiField bf = beltrami_coefficient(f, cr.phi, om1);
            BeltramiOptions bo;
            bo.pad = static_cast<int>(cfg.integer("beltrami.pad"));
            bo.tol = cfg.num("beltrami.tol");
            QCMap map = solve_beltrami(bf, bo);
            save("mu", bf.mu);
            save("psi", map.psi());
            rep.value("beltrami", "sup_mu", bf.sup_mu, "max |mu|");
            rep.value("beltrami", "phi_bound", bf.phi_bound, "max |1 - phi^2| / (1 + phi^2)");
            rep.value("beltrami", "K", bf.K_bound, "(1 + sup|mu|) / (1 - sup|mu|)");
            rep.value("beltrami", "iterations", map.info().iterations, "Neumann iterations");
            rep.value("beltrami", "residual", map.info().residual, "||psi_zbar - mu psi_z||_2 / ||psi_z||_2");
            rep.value("beltrami", "min_jacobian", map.info().min_jacobian, "min |psi_z|^2 - |psi_zbar|^2");
            rep.check("beltrami", "residual", map.info().residual, "<=", cfg.num("beltrami.residual_max"));
            rep.check("beltrami", "sup_mu_vs_phi_bound", bf.sup_mu, "<=", bf.phi_bound * (1.0 + 1e-12) + 1e-300);
            done("beltrami");

            begin("mori");
            MoriReport mr = verify_mori(map, in.R, static_cast<int>(cfg.integer("mori.pairs")),
                                        static_cast<std::uint64_t>(cfg.integer("mori.seed")), cfg.num("puncture.c"));
            for (const MoriRow& row : mr.rows)
                mori_rows.push_back({row.dist_in, row.dist_out, row.lower, row.upper, row.pass ? 1.0 : 0.0});
            rep.value("mori", "scale", mr.scale, "R / max_{|z|=R} |psi|");
            rep.value("mori", "min_lower_margin", mr.min_lower_margin, "min |psi z1 - psi z2| / lower bound");
            rep.value("mori", "min_upper_margin", mr.min_upper_margin, "min upper bound / |psi z1 - psi z2|");
            rep.value("mori", "window_pairs", mr.window_pairs, "pairs with 1/R <= |z1 - z2| <= 2R");
            rep.value("mori", "window_min_ratio", mr.window_min_ratio, "min |psi z1 - psi z2| / |z1 - z2|");
            rep.value("mori", "window_max_ratio", mr.window_max_ratio, "max |psi z1 - psi z2| / |z1 - z2|");
            rep.value("mori", "window_premise", mr.window_premise ? 1.0 : 0.0, "K <= 1 + c^2 / log R");
            rep.check("mori", "violations", mr.violations, "==", 0.0);
            rep.check("mori", "window_violations", mr.window_violations, "==", 0.0, "ratios within [1/32, 32]");
            done("mori");

            begin("stoilow");
            StoilowOptions so;
            so.R = in.R;
            so.margin = 4.0 * g.h();
            so.dilation = 2.0;
            std::vector<Disk> sh = F1.disks;
            if (in.r_in > 0.0) sh.emplace_back(0.0, 0.0, (in.r_in + 4.0 * g.h()) / so.dilation);
            StoilowReport st = stoilow_harmonicity(f, map, sh, so);
            rep.value("stoilow", "residual", st.residual, "h^2 max|lap5(f o psi^-1)| / max|f o psi^-1|");
            rep.value("stoilow", "nodes", static_cast<double>(st.nodes), "fresh-grid nodes with full stencils");
            rep.value("stoilow", "max_inverse_error", st.max_inverse_error, "max |psi(psi^-1 w) - w|");
            rep.check("stoilow", "residual", st.residual, "<=", cfg.num("stoilow.tol"));
            done("stoilow");

            if (!act3) {
                rep.stage("three_balls", "skipped", "stages.act3 = false");
            } else if (in.r_in > 0.0) {
                rep.stage("three_balls", "skipped", "origin outside an annular domain");
            } else {
                begin("three_balls");
                const double s = 1.0 / (32.0 * eps);
                const Grid2D& fg = st.grid;
                Grid2D sg(fg.origin_x() * s, fg.origin_y() * s, fg.h() * s, fg.nx(), fg.ny());
                ScalarField hf(sg, st.values);
                std::vector<Disk> img;
                for (const Disk& d : F1.disks) {
                    cplx c = map(d.center());
                    double rad = 0.0;
                    for (int q = 0; q < 64; ++q) {
                        double t = 2.0 * std::numbers::pi * q / 64;
                        rad = std::max(rad, std::abs(map({d.cx + d.radius * std::cos(t), d.cy + d.radius * std::sin(t)}) - c));
                    }
                    img.emplace_back(c.real() * s, c.imag() * s, rad * s);
                }
                double rmin = std::numeric_limits<double>::infinity();
                const double Rin = in.R - so.margin - g.h();
                for (int q = 0; q < 256; ++q) {
                    double t = 2.0 * std::numbers::pi * q / 256;
                    rmin = std::min(rmin, std::abs(map({Rin * std::cos(t), Rin * std::sin(t)})));
                }
                const double Rp = rmin * s;
                ToyInstance ti = field_instance(std::move(hf), std::move(img), Rp);
                ThreeBallsReport tb = three_balls_check(ti, Rp / 4.0, std::nullopt, cfg.num("three_balls.C_acc"));
                rep.value("three_balls", "rescale", s, "1 / (32 eps)");
                rep.value("three_balls", "R_prime", Rp, "min_{|z| = R_in} |psi(z)| / (32 eps)");
                rep.value("three_balls", "r", tb.r, "R' / 4");
                rep.value("three_balls", "S_r", tb.S_r, "sup over B(0, r) minus 3 x mapped holes");
                rep.value("three_balls", "S_mid", tb.S_mid, "sup over B(0, R' - R'/64) minus holes");
                rep.value("three_balls", "S_R", tb.S_R, "sup over B(0, R') minus holes");
                rep.value("three_balls", "N_meas", tb.N_meas, "log(S_R / S_mid)");
                rep.value("three_balls", "C_impl", tb.C_impl, "log(S_R / S_r) / ((R' + N) log(R'/r))");
                rep.check("three_balls", "C_impl", tb.C_impl, "<=", tb.C_acc, "artifact-chosen constant");
                tb_rows.push_back({tb.r, tb.R, tb.S_r, tb.S_mid, tb.S_R, tb.N_meas, tb.C_impl});
                if (in.order >= 0) {
                    double hh = sg.h();
                    std::vector<double> rr;
                    for (int k : {4, 6, 8, 12, 16}) rr.push_back(k * hh);
                    while (!rr.empty() && rr.back() > Rp / 4.0) rr.pop_back();
                    if (rr.size() >= 3) {
                        VanishingOrder vo = vanishing_order(ti.h, rr);
                        rep.value("three_balls", "mapped_vanishing_order", vo.order, "slope of log sup_{B(0,r)} |h| vs log r");
                    }
                }
                done("three_balls");
            }
        }

        begin("decay");
        std::vector<double> radii = cfg.empty("decay.radii") ? detail::default_radii(in) : cfg.list("decay.radii");
        if (radii.size() >= 4) {
            DecayProfile dp = decay_profile(in.u, radii);
            for (const DecayFit& fit : dp.fits) {
                rep.value("decay", fit.model + "_constant", fit.constant, "least-squares C in log M = a - C g(r)");
                rep.value("decay", fit.model + "_residual", fit.residual, "rms misfit of log M");
            }
            rep.text("decay", "best_model", dp.best >= 0 ? dp.fits[static_cast<std::size_t>(dp.best)].model : "non-decaying");
            for (std::size_t k = 0; k < dp.radii.size(); ++k) {
                std::vector<double> row{dp.radii[k], dp.M[k]};
                double r = dp.radii[k];
                double gs[3] = {r, r * std::sqrt(std::log(r)), std::pow(r, 4.0 / 3.0)};
                for (int m = 0; m < 3; ++m) row.push_back(std::exp(dp.fits[m].intercept - dp.fits[m].constant * gs[m]));
                decay_rows.push_back(row);
            }
            done("decay");
        } else {
            rep.stage("decay", "skipped", "fewer than 4 admissible radii");
        }

        if (in.order >= 0 && in.r_in == 0.0) {
            begin("vanishing");
            std::vector<double> rr;
            for (int k : {4, 8, 12, 16, 24, 32}) rr.push_back(k * g.h());
            VanishingOrder vo = vanishing_order(in.u, rr);
            rep.value("vanishing", "order", vo.order, "slope of log sup_{B(0,r)} |u| vs log r");
            rep.value("vanishing", "expected", in.order, "order of the builtin at 0");
            done("vanishing");
        }
    } catch (const Halt&) {
    } catch (const std::exception& e) {
        out.error_stage = current;
        out.error_message = e.what();
        rep.stage(current, "error", e.what());
    }

    out.exit_code = rep.has_error() ? 2 : (rep.all_pass() ? 0 : 1);

    ojson j = ojson::object();
    j["schema_version"] = kSchemaVersion;
    j["config"] = detail::config_json(cfg);
    j["stages"] = rep.to_json();
    j["assertions"] = rep.assertions_json();
    j["status"] = out.exit_code == 0 ? "pass" : (out.exit_code == 1 ? "fail" : "error");
    j["exit_code"] = out.exit_code;
    if (!out.error_stage.empty()) j["error"] = {{"stage", out.error_stage}, {"message", out.error_message}};
    write_json((dir / "report.json").string(), j);
    rep.write_values_csv((dir / "values.csv").string());
    rep.write_assertions_csv((dir / "assertions.csv").string());
    if (punctured) {
        write_table_csv((dir / "puncture.csv").string(), {"cx", "cy", "radius"}, puncture_rows);
        write_json((dir / "puncture.json").string(), puncture_doc);
    }
    if (!poincare_rows.empty())
        write_table_csv((dir / "poincare.csv").string(), {"epsilon", "lambda1", "k2", "ratio_k2_eps2", "c_thin", "bound_thin"},
                        poincare_rows);
    if (!corrector_rows.empty())
        write_table_csv((dir / "corrector.csv").string(), {"n_terms", "sup_deviation", "k2_used", "residual"}, corrector_rows);
    if (!mori_rows.empty())
        write_table_csv((dir / "mori.csv").string(), {"dist_in", "dist_out", "lower_bound", "upper_bound", "pass"}, mori_rows);
    write_diagnostics((dir / "diagnostics.jsonl").string(), diag);
    if (!term_rows.empty()) write_table_csv((dir / "corrector_terms.csv").string(), {"n", "norm_inf", "certificate"}, term_rows);
    if (!ritz_rows.empty()) write_table_csv((dir / "ritz.csv").string(), {"iteration", "lambda"}, ritz_rows);
    if (!decay_rows.empty())
        write_table_csv((dir / "decay.csv").string(), {"r", "M", "fit_exp", "fit_exp_sqrt_log", "fit_meshkov"}, decay_rows);
    if (!tb_rows.empty())
        write_table_csv((dir / "three_balls.csv").string(), {"r", "R", "S_r", "S_mid", "S_R", "N_meas", "C_impl"}, tb_rows);

    if (plots) {
        if (!scatter.title.empty()) svg::write((dir / "disks.svg").string(), scatter);
        if (!ritz_rows.empty()) {
            svg::Series s{"Ritz value", {}, {}, true, false};
            for (auto& r : ritz_rows) s.x.push_back(r[0]), s.y.push_back(r[1]);
            svg::write((dir / "eigen.svg").string(), svg::LineChart{"smallest eigenvalue iteration", "iteration", "lambda", {s}});
        }
        if (!term_rows.empty()) {
            svg::Series s{"||phi_n||", {}, {}, true, false};
            for (auto& r : term_rows) s.x.push_back(r[0]), s.y.push_back(std::log10(r[1]));
            svg::write((dir / "corrector.svg").string(), svg::LineChart{"corrector terms", "n", "log10 ||phi_n||_inf", {s}});
        }
        if (!decay_rows.empty()) {
            svg::LineChart c{"decay profile", "r", "log M(r)", {}};
            const char* names[4] = {"M(r)", "exp(-Cr)", "exp(-Cr sqrt(log r))", "exp(-c r^(4/3))"};
            for (int m = 0; m < 4; ++m) {
                svg::Series s{names[m], {}, {}, m == 0, m > 0};
                for (auto& r : decay_rows) s.x.push_back(r[0]), s.y.push_back(std::log(r[1 + m]));
                c.series.push_back(s);
            }
            svg::write((dir / "decay.svg").string(), c);
        }
    }
    return out;
}

}  // namespace landis
