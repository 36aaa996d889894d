#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>
#include <unordered_map>
#include <vector>

#include "landis/mask.hpp"
#include "landis/nodal.hpp"

namespace landis {

inline constexpr double kPaperSeparation = 1e6;

struct PunctureConfig {
    double epsilon = 0.05;
    double C = 3.0;
    double R = 1.0;
    double r_in = 0.0;  // annular domains: centres keep their disks outside B(0, r_in)
    std::vector<Point> avoid;

    void validate(double h) const {
        if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
        if (!(C > 2.0)) throw ConfigError("separation constant C must exceed 2");
        if (!(R > 0.0)) throw ConfigError("R must be positive");
        if (!(r_in >= 0.0 && r_in < R)) throw ConfigError("inner radius must lie in [0, R)");
        if (epsilon < 4.0 * h) {
            std::ostringstream os;
            os << "epsilon = " << epsilon << " < 4h = " << 4.0 * h;
            throw ResolutionError(os.str());
        }
    }
};

struct NetReport {
    double covering_radius = 0.0;
    double threshold = 0.0;
    double margin = 0.0;
    Point worst;
    std::size_t nodes = 0;
    bool pass = true;
};

struct PunctureSet {
    std::vector<Disk> disks;
    PunctureConfig config;
    double lattice_spacing = 0.0;
    std::size_t candidates = 0;
    // Exhaustively measured after construction.
    double min_pair_gap = std::numeric_limits<double>::infinity();
    double min_nodal_clearance = std::numeric_limits<double>::infinity();
    double min_boundary_clearance = std::numeric_limits<double>::infinity();
    double min_avoid_clearance = std::numeric_limits<double>::infinity();
    bool invariants_hold = true;
    NetReport net;
};

namespace detail {

// Lattice of spacing s over [-R, R]^2, snapped to nodes, j-major then i.
inline std::vector<Point> candidate_lattice(const Grid2D& g, double R, double s) {
    std::vector<Point> out;
    int n = static_cast<int>(std::floor(R / s));
    for (int b = -n; b <= n; ++b)
        for (int a = -n; a <= n; ++a) {
            Point p{a * s, b * s};
            if (norm(p) > R || !g.covers(p)) continue;
            out.push_back(g.node(g.nearest(p)));
        }
    return out;
}

class CenterHash {
public:
    explicit CenterHash(double cell) : cell_(cell) {}
    void insert(Point p) { cells_[key(p.x, p.y)].push_back(p); }
    double nearest(Point p, double cap) const {
        double best = cap;
        int ci = cell(p.x), cj = cell(p.y);
        int reach = static_cast<int>(std::ceil(cap / cell_));
        for (int dj = -reach; dj <= reach; ++dj)
            for (int di = -reach; di <= reach; ++di) {
                auto it = cells_.find(pack(ci + di, cj + dj));
                if (it == cells_.end()) continue;
                for (Point q : it->second) best = std::min(best, dist(p, q));
            }
        return best;
    }

private:
    int cell(double v) const { return static_cast<int>(std::floor(v / cell_)); }
    static std::int64_t pack(int a, int b) { return (static_cast<std::int64_t>(a) << 32) ^ static_cast<std::uint32_t>(b); }
    std::int64_t key(double x, double y) const { return pack(cell(x), cell(y)); }
    double cell_;
    std::unordered_map<std::int64_t, std::vector<Point>> cells_;
};

inline double avoid_distance(const std::vector<Point>& avoid, Point p) {
    double d = std::numeric_limits<double>::infinity();
    for (Point a : avoid) d = std::min(d, dist(p, a));
    return d;
}

}  // namespace detail

// Covering radius of F0 u F1 u dB(0,R) (and dB(0,r_in)) over grid nodes of the domain, against 10 C eps.
inline NetReport verify_net(const NodalSet& F0, const PunctureSet& F1, const PunctureConfig& cfg) {
    const Grid2D& g = F0.grid();
    NetReport rep;
    rep.threshold = 10.0 * cfg.C * cfg.epsilon;
    DiskIndex disks(F1.disks, 2.0 * (cfg.C + 1.0) * cfg.epsilon);
    for (std::size_t k = 0; k < g.size(); ++k) {
        Point p = g.node(k);
        double r = norm(p);
        if (r > cfg.R || r < cfg.r_in) continue;
        ++rep.nodes;
        double d = cfg.R - r;
        if (cfg.r_in > 0.0) d = std::min(d, r - cfg.r_in);
        if (d > rep.covering_radius) {
            double near = std::max(rep.covering_radius, 4.0 * (cfg.C + 1.0) * cfg.epsilon);
            double dd = disks.distance(p, std::min(d, near));
            d = dd < near ? dd : disks.distance(p, d);
        }
        if (d > rep.covering_radius) d = F0.distance(p, d);
        if (d > rep.covering_radius) {
            rep.covering_radius = d;
            rep.worst = p;
        }
    }
    rep.margin = rep.threshold - rep.covering_radius;
    rep.pass = rep.covering_radius <= rep.threshold;
    return rep;
}

// Greedy packing of open (C+1)eps disks over a node-snapped lattice of spacing (C+1)eps/2;
// accepted centres carry the eps-disks of the puncture set.
inline PunctureSet puncture(const NodalSet& F0, const PunctureConfig& cfg) {
    const Grid2D& g = F0.grid();
    cfg.validate(g.h());
    const double rho = (cfg.C + 1.0) * cfg.epsilon;
    PunctureSet out;
    out.config = cfg;
    out.lattice_spacing = 0.5 * rho;
    std::vector<Point> cand = detail::candidate_lattice(g, cfg.R, out.lattice_spacing);
    out.candidates = cand.size();
    detail::CenterHash accepted(2.0 * rho);
    for (Point c : cand) {
        if (norm(c) + rho > cfg.R) continue;
        if (cfg.r_in > 0.0 && norm(c) - rho < cfg.r_in) continue;
        if (detail::avoid_distance(cfg.avoid, c) < rho) continue;
        if (accepted.nearest(c, 2.0 * rho) < 2.0 * rho) continue;
        if (F0.distance(c, rho) < rho) continue;
        accepted.insert(c);
        out.disks.emplace_back(c.x, c.y, cfg.epsilon);
    }

    const double eps = cfg.epsilon;
    for (std::size_t a = 0; a < out.disks.size(); ++a) {
        Point c = out.disks[a].center();
        for (std::size_t b = a + 1; b < out.disks.size(); ++b)
            out.min_pair_gap = std::min(out.min_pair_gap, dist(c, out.disks[b].center()) - 2.0 * eps);
        out.min_nodal_clearance = std::min(out.min_nodal_clearance, F0.distance(c) - eps);
        double bc = cfg.R - norm(c) - eps;
        if (cfg.r_in > 0.0) bc = std::min(bc, norm(c) - eps - cfg.r_in);
        out.min_boundary_clearance = std::min(out.min_boundary_clearance, bc);
        out.min_avoid_clearance = std::min(out.min_avoid_clearance, detail::avoid_distance(cfg.avoid, c) - eps);
    }
    const double sep = cfg.C * eps * (1.0 - 1e-12);
    out.invariants_hold = out.min_pair_gap >= sep && out.min_nodal_clearance >= sep &&
                          out.min_boundary_clearance >= sep && out.min_avoid_clearance >= sep;
    out.net = verify_net(F0, out, cfg);
    return out;
}

// Argmax of |u| over nodes of the closed ball B(0, r); ties go to the lowest node index.
inline Point argmax_abs_in_ball(const ScalarField& u, double r) {
    const Grid2D& g = u.grid();
    double best = -1.0;
    Point at{0.0, 0.0};
    for (std::size_t k = 0; k < g.size(); ++k) {
        Point p = g.node(k);
        if (norm(p) > r) continue;
        if (std::abs(u[k]) > best) {
            best = std::abs(u[k]);
            at = p;
        }
    }
    if (best < 0.0) throw EmptyRegionError("no node in B(0, r)");
    return at;
}

}  // namespace landis
