#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "landis/interp.hpp"
#include "landis/mask.hpp"

namespace landis {

using cplx = std::complex<double>;

// ---------------------------------------------------------------- instances

struct ToySpec {
    double R_prime = 200.0;
    double separation = 100.0;       // boundary-to-boundary, unit disks
    bool reduced_scale = false;      // separation 10, R' in [40, 160]
    std::vector<Point> centers;      // explicit layout; random when empty
    int max_disks = 0;               // 0: as many as the dart thrower places
    double boundary_margin = 16.0;   // random centres stay in B(0, R' - margin)
    std::vector<double> charges;     // explicit; random when empty
    double charge_min = 0.5, charge_max = 2.0;
    bool mixed_signs = true;
    int poly_degree = 1;
    std::vector<cplx> poly;          // explicit coefficients of p, constant first
    double poly_scale = 1.0;         // random c_k ~ poly_scale / R'^k
    int grid_n = 1025;
    std::uint64_t seed = 1;

    static ToySpec reduced(double R_prime) {
        ToySpec s;
        s.R_prime = R_prime;
        s.separation = 10.0;
        s.reduced_scale = true;
        return s;
    }
};

struct ToyInstance {
    double R_prime = 0.0;
    double separation = 0.0;
    bool reduced_scale = false;
    std::uint64_t seed = 0;
    std::vector<Disk> disks;
    std::vector<double> charges;
    std::vector<cplx> poly;
    bool analytic = true;  // false for fields handed over from a grid
    ScalarField h;
    double harmonic_ratio = 0.0;  // max |lap5 h| / (h^2 L) outside the disks
    std::vector<double> annulus_min;  // sampled min |h| on (5D_j \ D_j) n B(0, R')

    double value(Point p) const {
        if (!analytic) return bicubic(h, p);
        double s = 0.0;
        for (std::size_t j = 0; j < disks.size(); ++j) {
            double dx = p.x - disks[j].cx, dy = p.y - disks[j].cy;
            s += 0.5 * charges[j] * std::log(dx * dx + dy * dy);
        }
        return s + poly_eval(p).real();
    }

    // h_x - i h_y, which is 2 dh/dz.
    cplx dz2(Point p) const {
        if (!analytic) {
            double e = 0.5 * h.grid().h();
            double hx = (bicubic(h, {p.x + e, p.y}) - bicubic(h, {p.x - e, p.y})) / (2 * e);
            double hy = (bicubic(h, {p.x, p.y + e}) - bicubic(h, {p.x, p.y - e})) / (2 * e);
            return {hx, -hy};
        }
        cplx z{p.x, p.y}, s{0.0, 0.0};
        for (std::size_t j = 0; j < disks.size(); ++j) s += charges[j] / (z - cplx{disks[j].cx, disks[j].cy});
        cplx d{0.0, 0.0};
        for (std::size_t k = poly.size(); k-- > 1;) d = d * z + static_cast<double>(k) * poly[k];
        return s + d;
    }

    // Bound on |u_xxxx| + |u_yyyy| / 2 used by the harmonicity certificate.
    double fourth_scale(Point p) const {
        double L = 0.0;
        for (std::size_t j = 0; j < disks.size(); ++j) {
            double d = dist(p, disks[j].center());
            L += std::abs(charges[j]) / (d * d * d * d);
        }
        cplx z{p.x, p.y}, d4{0.0, 0.0};
        for (std::size_t k = poly.size(); k-- > 4;)
            d4 = d4 * z + static_cast<double>(k * (k - 1) * (k - 2) * (k - 3)) * poly[k];
        return L + std::abs(d4) / 6.0;
    }

    ToyInstance scaled(double lambda) const {
        ToyInstance out = *this;
        for (double& a : out.charges) a *= lambda;
        for (cplx& c : out.poly) c *= lambda;
        std::vector<double> v = h.values();
        for (double& x : v) x *= lambda;
        out.h = ScalarField(h.grid(), std::move(v));
        for (double& m : out.annulus_min) m *= std::abs(lambda);
        return out;
    }

private:
    cplx poly_eval(Point p) const {
        cplx z{p.x, p.y}, s{0.0, 0.0};
        for (std::size_t k = poly.size(); k-- > 0;) s = s * z + poly[k];
        return s;
    }
};

struct SignCheck {
    bool holds = true;
    int disk = -1;
    Point witness;
    std::vector<double> min_abs;
    std::vector<int> sign;
};

// Samples each (5D_j \ D_j) n B(0, R') on a polar net of spacing <= step, closed at both radii.
inline SignCheck check_sign_condition(const ToyInstance& inst, double step) {
    SignCheck out;
    for (std::size_t j = 0; j < inst.disks.size(); ++j) {
        Point c = inst.disks[j].center();
        int nr = std::max(2, static_cast<int>(std::ceil(4.0 / step)));
        int s0 = 0;
        double mn = std::numeric_limits<double>::infinity();
        for (int a = 0; a <= nr && out.holds; ++a) {
            double rho = 1.0 + 4.0 * a / nr;
            int na = std::max(16, static_cast<int>(std::ceil(2.0 * std::numbers::pi * rho / step)));
            for (int b = 0; b < na; ++b) {
                double t = 2.0 * std::numbers::pi * b / na;
                Point p{c.x + rho * std::cos(t), c.y + rho * std::sin(t)};
                if (norm(p) > inst.R_prime) continue;
                double v = inst.value(p);
                int s = v > 0.0 ? 1 : (v < 0.0 ? -1 : 0);
                if (s0 == 0) s0 = s;
                if (s == 0 || s != s0) {
                    out.holds = false;
                    out.disk = static_cast<int>(j);
                    out.witness = p;
                    break;
                }
                mn = std::min(mn, std::abs(v));
            }
        }
        out.min_abs.push_back(mn);
        out.sign.push_back(s0);
        if (!out.holds) break;
    }
    return out;
}

namespace detail {

inline void check_layout(const std::vector<Point>& c, double sep, double R_prime) {
    for (std::size_t a = 0; a < c.size(); ++a) {
        if (norm(c[a]) <= 3.0) throw GeometryError("0 lies in some 3D_j");
        if (norm(c[a]) - 1.0 >= R_prime) throw GeometryError("disk outside B(0, R')");
        for (std::size_t b = a + 1; b < c.size(); ++b)
            if (dist(c[a], c[b]) - 2.0 < sep * (1.0 - 1e-12)) {
                std::ostringstream os;
                os << "disks " << a << " and " << b << " are " << dist(c[a], c[b]) - 2.0 << " apart, need " << sep;
                throw GeometryError(os.str());
            }
    }
}

inline std::vector<Point> dart_layout(const ToySpec& s, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    const double rmax = s.R_prime - s.boundary_margin, gap = s.separation + 2.0;
    std::vector<Point> out;
    if (rmax <= 4.0) return out;
    const double per = (rmax / gap + 1.0);
    const long attempts = static_cast<long>(400.0 * per * per);
    for (long t = 0; t < attempts; ++t) {
        if (s.max_disks > 0 && static_cast<int>(out.size()) >= s.max_disks) break;
        Point p{rmax * U(rng), rmax * U(rng)};
        double r = norm(p);
        if (r > rmax || r < 4.0) continue;
        bool ok = true;
        for (Point q : out)
            if (dist(p, q) < gap) {
                ok = false;
                break;
            }
        if (ok) out.push_back(p);
    }
    return out;
}

}  // namespace detail

// h sampled on a grid over B(0, R') with the harmonicity certificate; no sign verification.
inline ToyInstance assemble_instance(double R_prime, std::vector<Point> centers, std::vector<double> charges,
                                     std::vector<cplx> poly, int grid_n) {
    if (centers.size() != charges.size()) throw ConfigError("one charge per disk required");
    if (grid_n < 16) throw DimensionError("toy grid too coarse");
    ToyInstance inst;
    inst.R_prime = R_prime;
    for (Point c : centers) inst.disks.emplace_back(c.x, c.y, 1.0);
    inst.charges = std::move(charges);
    inst.poly = std::move(poly);
    const double hg = 2.0 * R_prime / (grid_n - 1);
    Grid2D g = Grid2D::centered(R_prime, hg);
    std::vector<double> v(g.size(), 0.0);
    DiskIndex idx(inst.disks);
    for (std::size_t k = 0; k < g.size(); ++k) {
        Point p = g.node(k);
        if (idx.level(p) > 0.0) continue;  // inside a disk: left at zero
        v[k] = inst.value(p);
    }
    inst.h = ScalarField(g, std::move(v));
    FlaggedField lap = laplacian5(inst.h);
    const double h2 = hg * hg;
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (!lap.valid[k]) continue;
        Point p = g.node(k);
        if (!inst.disks.empty() && idx.distance(p, 1.0 + 2.0 * hg + 1.0) < 2.0 * hg) continue;
        double floor = 64.0 * std::numeric_limits<double>::epsilon() * (std::abs(inst.h[k]) + 1.0) / h2;
        double ratio = std::abs(lap.value[k]) / std::max(h2 * inst.fourth_scale(p), floor);
        inst.harmonic_ratio = std::max(inst.harmonic_ratio, ratio);
    }
    return inst;
}

inline ToyInstance generate_instance(const ToySpec& s) {
    if (!(s.R_prime > 0.0) || !(s.separation > 0.0)) throw ConfigError("R' and separation must be positive");
    std::mt19937_64 rng(s.seed);
    std::vector<Point> centers = s.centers.empty() ? detail::dart_layout(s, rng) : s.centers;
    detail::check_layout(centers, s.separation, s.R_prime);
    std::vector<double> charges = s.charges;
    if (charges.empty()) {
        std::uniform_real_distribution<double> A(s.charge_min, s.charge_max), U(0.0, 1.0);
        for (std::size_t j = 0; j < centers.size(); ++j) {
            double a = A(rng);
            charges.push_back(s.mixed_signs && U(rng) < 0.5 ? -a : a);
        }
    }
    std::vector<cplx> poly = s.poly;
    if (poly.empty() && s.poly_degree >= 0) {
        std::uniform_real_distribution<double> U(-1.0, 1.0);
        for (int k = 0; k <= s.poly_degree; ++k) {
            double sc = s.poly_scale / std::pow(s.R_prime, k);
            poly.emplace_back(sc * U(rng), k == 0 ? 0.0 : sc * U(rng));
        }
    }
    // Cheap sign verification before sampling the grid.
    ToyInstance probe;
    probe.R_prime = s.R_prime;
    for (Point c : centers) probe.disks.emplace_back(c.x, c.y, 1.0);
    probe.charges = charges;
    probe.poly = poly;
    const double hg = 2.0 * s.R_prime / (s.grid_n - 1);
    SignCheck sc = check_sign_condition(probe, std::min(hg, 0.25));
    if (!sc.holds) {
        std::ostringstream os;
        os << "h changes sign in the annulus of disk " << sc.disk << " near (" << sc.witness.x << ", "
           << sc.witness.y << ")";
        throw GenerationReject(os.str());
    }
    ToyInstance inst = assemble_instance(s.R_prime, std::move(centers), std::move(charges), std::move(poly), s.grid_n);
    inst.separation = s.separation;
    inst.reduced_scale = s.reduced_scale;
    inst.seed = s.seed;
    inst.annulus_min = std::move(sc.min_abs);
    return inst;
}

// A grid field with its holes, e.g. the mapped and rescaled pipeline field.
inline ToyInstance field_instance(ScalarField h, std::vector<Disk> holes, double R_prime) {
    ToyInstance inst;
    inst.analytic = false;
    inst.R_prime = R_prime;
    inst.disks = std::move(holes);
    inst.h = std::move(h);
    return inst;
}

struct EnsembleStats {
    int accepted = 0;
    int rejected = 0;
    std::vector<std::string> reasons;
};

// Seeds spec.seed, spec.seed + 1, ... until `count` instances pass the sign check.
template <class F>
EnsembleStats generate_ensemble(ToySpec spec, int count, F&& visit, int max_attempts = 0) {
    EnsembleStats st;
    if (max_attempts <= 0) max_attempts = 50 * count;
    for (int t = 0; t < max_attempts && st.accepted < count; ++t, ++spec.seed) {
        try {
            ToyInstance inst = generate_instance(spec);
            ++st.accepted;
            visit(inst);
        } catch (const GenerationReject& e) {
            ++st.rejected;
            st.reasons.emplace_back(e.what());
        }
    }
    return st;
}

// ---------------------------------------------------------------- Harnack ratios

struct HarnackRow {
    int disk = -1;
    double max_abs = 0.0, min_abs = 0.0, max_grad = 0.0;
    double ratio = 0.0, grad_ratio = 0.0;
};

struct HarnackReport {
    std::vector<HarnackRow> rows;
    double max_ratio = 0.0, max_grad_ratio = 0.0;
    double A_acc = 50.0;
    bool pass = true;
};

inline HarnackReport harnack_ratios(const ToyInstance& inst, double A_acc = 50.0, int samples = 1440) {
    HarnackReport rep;
    rep.A_acc = A_acc;
    for (std::size_t j = 0; j < inst.disks.size(); ++j) {
        Point c = inst.disks[j].center();
        if (norm(c) + 5.0 > inst.R_prime) continue;
        HarnackRow row;
        row.disk = static_cast<int>(j);
        row.min_abs = std::numeric_limits<double>::infinity();
        for (int q = 0; q < samples; ++q) {
            double t = 2.0 * std::numbers::pi * q / samples;
            Point p{c.x + 3.0 * std::cos(t), c.y + 3.0 * std::sin(t)};
            double v = std::abs(inst.value(p));
            row.max_abs = std::max(row.max_abs, v);
            row.min_abs = std::min(row.min_abs, v);
            row.max_grad = std::max(row.max_grad, std::abs(inst.dz2(p)));
        }
        const double inf = std::numeric_limits<double>::infinity();
        row.ratio = row.min_abs > 0.0 ? row.max_abs / row.min_abs : inf;
        row.grad_ratio = row.min_abs > 0.0 ? row.max_grad / row.min_abs : inf;
        rep.max_ratio = std::max(rep.max_ratio, row.ratio);
        rep.max_grad_ratio = std::max(rep.max_grad_ratio, row.grad_ratio);
        rep.rows.push_back(row);
    }
    rep.pass = rep.max_ratio <= A_acc && rep.max_grad_ratio <= A_acc;
    return rep;
}

// ---------------------------------------------------------------- witness chase

enum class WitnessMode { toy, local3 };

struct WitnessOptions {
    double R_outer = 0.0;  // control circle; R' when 0
    double r_inner = 0.0;  // local3: inner circle r/2; R'/8 when 0
    int boundary_samples_per_h = 8;
};

struct RayTrace {
    Point start, end;
    double length = 0.0;
    double grad_integral = 0.0;  // int |grad h| along the ray
    double h_start = 0.0, h_end = 0.0;
    int hit_disk = -1;  // disk whose 3D_j stops the ray; -1 when it leaves the region
};

struct WitnessState {
    WitnessMode mode = WitnessMode::toy;
    double k = 1.0;
    std::vector<int> disk;
    std::vector<double> m;           // min |h| on dB_j, dB_j = d(3D_j)
    std::vector<Point> z;
    std::vector<double> log_weight;  // log m_j + k Re z_j, or log m_j - k log|z_j|
    int j0 = -1;                     // position in `disk`
    std::vector<double> f_log_max;   // max log|f| on each dB_j
    double boundary_log_max = -std::numeric_limits<double>::infinity();
    double interior_log_max = -std::numeric_limits<double>::infinity();
    Point interior_argmax;
    double argmax_gap = 0.0;  // distance of the interior argmax to the region boundary
    double grid_h = 0.0;
    bool max_principle = false;
    bool argmax_near_boundary = false;
    RayTrace trace;
};

namespace detail {

inline double log_f(const ToyInstance& inst, WitnessMode mode, double k, Point p) {
    double g = std::log(std::abs(inst.dz2(p)));
    return mode == WitnessMode::toy ? g + k * p.x : g - k * std::log(norm(p));
}

}  // namespace detail

inline WitnessState witness_chase(const ToyInstance& inst, WitnessMode mode, double k, const WitnessOptions& opt = {}) {
    if (!(k >= 1.0)) throw ConfigError("witness exponent k must be >= 1");
    WitnessState st;
    st.mode = mode;
    st.k = k;
    const double Rout = opt.R_outer > 0.0 ? opt.R_outer : inst.R_prime;
    const double rin = mode == WitnessMode::local3 ? (opt.r_inner > 0.0 ? opt.r_inner : inst.R_prime / 8.0) : 0.0;
    const Grid2D& g = inst.h.grid();
    st.grid_h = g.h();
    const double ds = g.h() / opt.boundary_samples_per_h;
    auto in_region = [&](Point p) {
        double r = norm(p);
        if (r > Rout || r < rin) return false;
        for (const Disk& d : inst.disks)
            if (dist(p, d.center()) < 3.0) return false;
        return true;
    };
    auto circle = [&](Point c, double rad, auto&& f) {
        int n = std::max(64, static_cast<int>(std::ceil(2.0 * std::numbers::pi * rad / ds)));
        for (int q = 0; q < n; ++q) {
            double t = 2.0 * std::numbers::pi * q / n;
            f(Point{c.x + rad * std::cos(t), c.y + rad * std::sin(t)});
        }
    };

    for (std::size_t j = 0; j < inst.disks.size(); ++j) {
        Point c = inst.disks[j].center();
        double r = norm(c);
        bool use = mode == WitnessMode::toy ? r + 3.0 <= Rout : (r + 3.0 <= Rout - 1.0 && r - 3.0 >= rin);
        if (!use) continue;
        double mn = std::numeric_limits<double>::infinity(), fl = -std::numeric_limits<double>::infinity();
        circle(c, 3.0, [&](Point p) {
            mn = std::min(mn, std::abs(inst.value(p)));
            fl = std::max(fl, detail::log_f(inst, mode, k, p));
        });
        Point zj = mode == WitnessMode::toy ? Point{c.x + 3.0, c.y} : Point{c.x * (1.0 - 3.0 / r), c.y * (1.0 - 3.0 / r)};
        st.disk.push_back(static_cast<int>(j));
        st.m.push_back(mn);
        st.z.push_back(zj);
        double lw = std::log(mn) + (mode == WitnessMode::toy ? k * zj.x : -k * std::log(norm(zj)));
        st.log_weight.push_back(lw);
        st.f_log_max.push_back(fl);
        if (st.j0 < 0 || lw > st.log_weight[static_cast<std::size_t>(st.j0)]) st.j0 = static_cast<int>(st.disk.size()) - 1;
    }

    // Boundary of the region: hole circles, the control circle and the inner circle.
    auto take_boundary = [&](Point p) {
        double r = norm(p);
        if (r > Rout * (1.0 + 1e-12) || r < rin * (1.0 - 1e-12)) return;
        for (const Disk& d : inst.disks)
            if (dist(p, d.center()) < 3.0 * (1.0 - 1e-12)) return;
        st.boundary_log_max = std::max(st.boundary_log_max, detail::log_f(inst, mode, k, p));
    };
    for (const Disk& d : inst.disks)
        if (norm(d.center()) - 3.0 < Rout) circle(d.center(), 3.0, take_boundary);
    circle({0.0, 0.0}, Rout, take_boundary);
    if (rin > 0.0) circle({0.0, 0.0}, rin, take_boundary);

    for (std::size_t q = 0; q < g.size(); ++q) {
        Point p = g.node(q);
        if (!in_region(p)) continue;
        double lf = detail::log_f(inst, mode, k, p);
        if (lf > st.interior_log_max) {
            st.interior_log_max = lf;
            st.interior_argmax = p;
        }
    }
    if (std::isfinite(st.interior_log_max)) {
        Point p = st.interior_argmax;
        double gap = Rout - norm(p);
        if (rin > 0.0) gap = std::min(gap, norm(p) - rin);
        for (const Disk& d : inst.disks) gap = std::min(gap, dist(p, d.center()) - 3.0);
        st.argmax_gap = gap;
    }
    st.max_principle = st.interior_log_max <= st.boundary_log_max + 1e-9 * std::max(1.0, std::abs(st.boundary_log_max));
    st.argmax_near_boundary = st.argmax_gap <= 2.0 * g.h();

    if (st.j0 >= 0) {
        // Diagnostic ray from z_{j0}: to the right (toy) or toward the origin (local3).
        RayTrace& tr = st.trace;
        Point z0 = st.z[static_cast<std::size_t>(st.j0)];
        Point dir = mode == WitnessMode::toy ? Point{1.0, 0.0} : Point{-z0.x / norm(z0), -z0.y / norm(z0)};
        int self = st.disk[static_cast<std::size_t>(st.j0)];
        tr.start = z0;
        tr.h_start = inst.value(z0);
        const double step = std::min(0.05, 0.5 * g.h());
        double prev = std::abs(inst.dz2(z0));
        Point p = z0;
        for (int it = 0; it < 100000000; ++it) {
            Point q{p.x + step * dir.x, p.y + step * dir.y};
            double r = norm(q);
            bool stop = r > Rout || r < rin;
            for (std::size_t j = 0; j < inst.disks.size() && !stop; ++j)
                if (static_cast<int>(j) != self && dist(q, inst.disks[j].center()) < 3.0) {
                    tr.hit_disk = static_cast<int>(j);
                    stop = true;
                }
            if (stop) break;
            double cur = std::abs(inst.dz2(q));
            tr.grad_integral += 0.5 * step * (prev + cur);
            tr.length += step;
            prev = cur;
            p = q;
        }
        tr.end = p;
        tr.h_end = inst.value(p);
    }
    return st;
}

// ---------------------------------------------------------------- three balls

struct ThreeBallsReport {
    double r = 0.0, R = 0.0;
    double S_r = 0.0, S_mid = 0.0, S_R = 0.0;  // S_mid = sup over B(0, R - R/64)
    double N_meas = 0.0;
    double C_impl = 0.0;
    double C_acc = 10.0;
    double dilation = 3.0;
    Point at_r, at_R;
    bool pass = true;
};

inline ThreeBallsReport three_balls_check(const ToyInstance& inst, double r, std::optional<double> N = std::nullopt,
                                          double C_acc = 10.0, double dilation = 3.0) {
    ThreeBallsReport rep;
    rep.R = inst.R_prime;
    rep.r = r;
    rep.C_acc = C_acc;
    rep.dilation = dilation;
    if (!(r > 0.0) || r > rep.R / 4.0) throw GeometryError("three balls needs 0 < r <= R/4");
    const Point o{0.0, 0.0};
    SupResult a = sup_on_region(inst.h, Region::ball_minus(o, r, inst.disks, dilation));
    SupResult b = sup_on_region(inst.h, Region::ball_minus(o, rep.R - rep.R / 64.0, inst.disks, dilation));
    SupResult c = sup_on_region(inst.h, Region::ball_minus(o, rep.R, inst.disks, dilation));
    rep.S_r = a.value;
    rep.S_mid = b.value;
    rep.S_R = c.value;
    rep.at_r = a.at;
    rep.at_R = c.at;
    rep.N_meas = N ? *N : (rep.S_mid > 0.0 ? std::log(rep.S_R / rep.S_mid) : std::numeric_limits<double>::infinity());
    rep.C_impl = rep.S_r > 0.0 ? std::log(rep.S_R / rep.S_r) / ((rep.R + rep.N_meas) * std::log(rep.R / r))
                               : std::numeric_limits<double>::infinity();
    rep.pass = std::isfinite(rep.C_impl) && rep.C_impl <= C_acc;
    return rep;
}

// ---------------------------------------------------------------- Carleman

struct CarlemanReport {
    double R = 0.0, k = 0.0;
    std::vector<double> quotients;
    double min_q = std::numeric_limits<double>::infinity();
    double c_acc = std::numbers::pi * std::numbers::pi / 8.0;
    bool log_space = false;
    bool positive = true;
    bool pass = true;
};

namespace detail {

// Weighted sums over interior nodes: sum |lap u|^2 w, sum u^2 w, with w = e^{k(x - shift)}.
inline std::pair<double, double> carleman_sums(const DomainMask& mask, const ScalarField& u, double k, double shift) {
    const Grid2D& g = mask.grid();
    FlaggedField lap = laplacian5(u);
    double num = 0.0, den = 0.0;
    for (std::size_t r = 0; r < mask.interior_count(); ++r) {
        std::size_t n = mask.node_of(r);
        if (!lap.valid[n]) continue;
        double w = std::exp(k * (g.node(n).x - shift));
        num += lap.value[n] * lap.value[n] * w;
        den += u[n] * u[n] * w;
    }
    double h2 = g.h() * g.h();
    return {num * h2, den * h2};
}

}  // namespace detail

inline double carleman_q(const DomainMask& mask, const ScalarField& u, double R, double k) {
    double shift = k * R > 300.0 ? R : 0.0;
    auto [num, den] = detail::carleman_sums(mask, u, k, shift);
    return num / ((k * k / (R * R)) * den);
}

// Random sums of (1 - |x - a|^2/w^2)^4 bumps supported in B(0, R - 2h).
inline CarlemanReport carleman_quotient(double R, double k, int trials, const DomainMask& mask,
                                        std::uint64_t seed = 5) {
    if (!(k > 0.0)) throw ConfigError("Carleman weight needs k > 0");
    CarlemanReport rep;
    rep.R = R;
    rep.k = k;
    rep.log_space = k * R > 300.0;
    const Grid2D& g = mask.grid();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const double lim = R - 2.0 * g.h();
    for (int t = 0; t < trials; ++t) {
        int nb = 1 + static_cast<int>(U(rng) * 4.0);
        std::vector<double> v(g.size(), 0.0);
        for (int b = 0; b < nb; ++b) {
            double w = lim * (0.1 + 0.4 * U(rng));
            double rr = (lim - w) * std::sqrt(U(rng)), a = 2.0 * std::numbers::pi * U(rng);
            Point c{rr * std::cos(a), rr * std::sin(a)};
            double coef = 2.0 * U(rng) - 1.0;
            for (std::size_t n = 0; n < g.size(); ++n) {
                Point p = g.node(n);
                double s = 1.0 - ((p.x - c.x) * (p.x - c.x) + (p.y - c.y) * (p.y - c.y)) / (w * w);
                if (s > 0.0) v[n] += coef * s * s * s * s;
            }
        }
        double q = carleman_q(mask, ScalarField(g, std::move(v)), R, k);
        rep.quotients.push_back(q);
        rep.min_q = std::min(rep.min_q, q);
        rep.positive = rep.positive && q > 0.0;
    }
    rep.pass = rep.min_q >= rep.c_acc;
    return rep;
}

// Terms of the identity e^{kx}|lap u|^2 = |lap v + k^2 v/4|^2 + k^2 v_x^2 + cross, u = v e^{-kx/2}.
struct CarlemanSplit {
    double lhs = 0.0;         // sum |lap u|^2 e^{kx} h^2
    double main_term = 0.0;   // sum |lap v + k^2 v/4|^2 h^2
    double drift_term = 0.0;  // k^2 sum v_x^2 h^2
    double u_mass = 0.0;      // sum u^2 e^{kx} h^2
};

inline CarlemanSplit carleman_split(const DomainMask& mask, const ScalarField& v, double k) {
    const Grid2D& g = mask.grid();
    std::vector<double> u(g.size());
    for (std::size_t n = 0; n < g.size(); ++n) u[n] = v[n] * std::exp(-0.5 * k * g.node(n).x);
    ScalarField uf(g, std::move(u));
    CarlemanSplit s;
    std::tie(s.lhs, s.u_mass) = detail::carleman_sums(mask, uf, k, 0.0);
    FlaggedField lv = laplacian5(v);
    Gradient gv = gradient_central(v);
    const double h2 = g.h() * g.h();
    for (std::size_t r = 0; r < mask.interior_count(); ++r) {
        std::size_t n = mask.node_of(r);
        if (!lv.valid[n]) continue;
        double a = lv.value[n] + 0.25 * k * k * v[n];
        s.main_term += a * a * h2;
        s.drift_term += k * k * gv.fx[n] * gv.fx[n] * h2;
    }
    return s;
}

struct CarlemanDecayReport {
    double R = 0.0;
    double outer = 0.0;  // int over B_R \ (B_{R/2} u 3D_j) of h^2
    double inner = 0.0;  // int over B_{R/2} \ u 3D_j of h^2
    double ratio = 0.0;
    double C_fit = 0.0;  // -log(ratio) / (R log R), signed
    std::optional<double> C_impl;
};

inline CarlemanDecayReport carleman_decay_experiment(const ToyInstance& inst,
                                                     std::optional<double> C_impl = std::nullopt) {
    CarlemanDecayReport rep;
    const double R = inst.R_prime;
    rep.R = R;
    rep.C_impl = C_impl;
    if (!(R > 1.0)) throw GeometryError("R must exceed 1");
    for (const Disk& d : inst.disks) {
        double r = norm(d.center());
        if (r - 5.0 < R && r + 5.0 > R - 11.0) {
            std::ostringstream os;
            os << "5D_j at (" << d.cx << ", " << d.cy << ") is not inside B(0, R - 11)";
            throw GeometryError(os.str());
        }
    }
    const Grid2D& g = inst.h.grid();
    DiskIndex idx(inst.disks);
    const double h2 = g.h() * g.h();
    for (std::size_t n = 0; n < g.size(); ++n) {
        Point p = g.node(n);
        double r = norm(p);
        if (r >= R) continue;
        if (!inst.disks.empty() && idx.distance(p, 3.0) < 2.0) continue;  // inside 3D_j
        double v = inst.h[n] * inst.h[n] * h2;
        (r < 0.5 * R ? rep.inner : rep.outer) += v;
    }
    if (!(rep.inner > 0.0)) throw EmptyRegionError("h vanishes on B_{R/2}");
    rep.ratio = rep.outer / rep.inner;
    rep.C_fit = -std::log(rep.ratio) / (R * std::log(R));
    return rep;
}

}  // namespace landis
