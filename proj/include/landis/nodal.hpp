#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <unordered_map>
#include <utility>
#include <vector>

#include "landis/grid.hpp"
#include "landis/interp.hpp"

namespace landis {

struct Segment {
    Point a, b;
};

inline double point_segment_distance(Point p, const Segment& s) {
    double dx = s.b.x - s.a.x, dy = s.b.y - s.a.y;
    double L2 = dx * dx + dy * dy;
    double t = L2 > 0.0 ? ((p.x - s.a.x) * dx + (p.y - s.a.y) * dy) / L2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return dist(p, {s.a.x + t * dx, s.a.y + t * dy});
}

// Bucket index over segments for nearest-distance queries.
class SegmentIndex {
public:
    SegmentIndex() = default;
    SegmentIndex(const std::vector<Segment>* segs, double cell) : segs_(segs), cell_(cell) {
        if (segs_->empty()) return;
        x0_ = y0_ = std::numeric_limits<double>::max();
        double x1 = -x0_, y1 = -y0_;
        for (const Segment& s : *segs_) {
            x0_ = std::min({x0_, s.a.x, s.b.x});
            y0_ = std::min({y0_, s.a.y, s.b.y});
            x1 = std::max({x1, s.a.x, s.b.x});
            y1 = std::max({y1, s.a.y, s.b.y});
        }
        ncx_ = static_cast<int>((x1 - x0_) / cell_) + 1;
        ncy_ = static_cast<int>((y1 - y0_) / cell_) + 1;
        buckets_.assign(static_cast<std::size_t>(ncx_) * ncy_, {});
        for (std::size_t k = 0; k < segs_->size(); ++k) {
            const Segment& s = (*segs_)[k];
            int i0 = cx(std::min(s.a.x, s.b.x)), i1 = cx(std::max(s.a.x, s.b.x));
            int j0 = cy(std::min(s.a.y, s.b.y)), j1 = cy(std::max(s.a.y, s.b.y));
            for (int j = j0; j <= j1; ++j)
                for (int i = i0; i <= i1; ++i) buckets_[static_cast<std::size_t>(j) * ncx_ + i].push_back(static_cast<std::uint32_t>(k));
        }
    }

    bool empty() const { return !segs_ || segs_->empty(); }

    // Exact distance to the nearest segment, or `cap` when nothing is closer.
    double distance(Point p, double cap = std::numeric_limits<double>::infinity()) const {
        return search(p, cap).first;
    }

    // Closest point on the segments; p itself when the index is empty.
    Point closest(Point p) const {
        long k = search(p, std::numeric_limits<double>::infinity()).second;
        if (k < 0) return p;
        const Segment& s = (*segs_)[static_cast<std::size_t>(k)];
        double dx = s.b.x - s.a.x, dy = s.b.y - s.a.y, L2 = dx * dx + dy * dy;
        double t = L2 > 0.0 ? std::clamp(((p.x - s.a.x) * dx + (p.y - s.a.y) * dy) / L2, 0.0, 1.0) : 0.0;
        return {s.a.x + t * dx, s.a.y + t * dy};
    }

private:
    std::pair<double, long> search(Point p, double cap) const {
        if (empty()) return {cap, -1};
        int pi = std::clamp(cx(p.x), 0, ncx_ - 1), pj = std::clamp(cy(p.y), 0, ncy_ - 1);
        // Distance from p to the bucket box, so rings can stop once they are provably too far.
        double ox = std::max({0.0, x0_ - p.x, p.x - (x0_ + ncx_ * cell_)});
        double oy = std::max({0.0, y0_ - p.y, p.y - (y0_ + ncy_ * cell_)});
        double outside = std::hypot(ox, oy);
        double best = cap;
        long arg = -1;
        int maxring = std::max(ncx_, ncy_);
        for (int ring = 0; ring <= maxring; ++ring) {
            if (best <= std::max(outside, (ring - 1) * cell_)) break;
            for (int j = pj - ring; j <= pj + ring; ++j) {
                if (j < 0 || j >= ncy_) continue;
                bool edge_row = (j == pj - ring || j == pj + ring);
                for (int i = pi - ring; i <= pi + ring; i += (edge_row ? 1 : 2 * ring)) {
                    if (i >= 0 && i < ncx_)
                        for (std::uint32_t k : buckets_[static_cast<std::size_t>(j) * ncx_ + i]) {
                            double d = point_segment_distance(p, (*segs_)[k]);
                            if (d < best) best = d, arg = k;
                        }
                    if (ring == 0) break;
                }
            }
        }
        return {best, arg};
    }

    int cx(double x) const { return static_cast<int>(std::floor((x - x0_) / cell_)); }
    int cy(double y) const { return static_cast<int>(std::floor((y - y0_) / cell_)); }
    const std::vector<Segment>* segs_ = nullptr;
    double cell_ = 1.0, x0_ = 0.0, y0_ = 0.0;
    int ncx_ = 0, ncy_ = 0;
    std::vector<std::vector<std::uint32_t>> buckets_;
};

// Zero set of a grid function as marching-squares polylines.
class NodalSet {
public:
    NodalSet(const Grid2D& g, std::vector<Segment> segs, std::vector<std::vector<Point>> chains)
        : grid_(g), segs_(std::move(segs)), chains_(std::move(chains)) {
        index_ = SegmentIndex(&segs_, 8.0 * g.h());
    }
    NodalSet(const NodalSet& o) : NodalSet(o.grid_, o.segs_, o.chains_) {}
    NodalSet& operator=(const NodalSet& o) {
        if (this != &o) {
            grid_ = o.grid_;
            segs_ = o.segs_;
            chains_ = o.chains_;
            index_ = SegmentIndex(&segs_, 8.0 * grid_.h());
        }
        return *this;
    }

    const Grid2D& grid() const { return grid_; }
    const std::vector<Segment>& segments() const { return segs_; }
    const std::vector<std::vector<Point>>& chains() const { return chains_; }
    bool empty() const { return segs_.empty(); }
    double distance(Point p, double cap = std::numeric_limits<double>::infinity()) const {
        return index_.distance(p, cap);
    }
    Point closest(Point p) const { return index_.closest(p); }
    double length() const {
        double s = 0.0;
        for (const Segment& q : segs_) s += dist(q.a, q.b);
        return s;
    }

private:
    Grid2D grid_;
    std::vector<Segment> segs_;
    std::vector<std::vector<Point>> chains_;
    SegmentIndex index_;
};

// Corner order 0:(i,j) 1:(i+1,j) 2:(i+1,j+1) 3:(i,j+1); edge e joins corners e and e+1.
// A corner is "positive" when u > 0. Saddle cells are split by the sign of the corner mean.
inline NodalSet extract_nodal_set(const ScalarField& u) {
    const Grid2D& g = u.grid();
    const std::size_t nx = static_cast<std::size_t>(g.nx());
    std::vector<Segment> segs;
    std::vector<std::array<std::uint64_t, 2>> ends;
    auto edge_id = [&](int i, int j, int e) -> std::uint64_t {
        switch (e) {
            case 0: return 2 * g.index(i, j);
            case 1: return 2 * g.index(i + 1, j) + 1;
            case 2: return 2 * g.index(i, j + 1);
            default: return 2 * g.index(i, j) + 1;
        }
    };
    for (int j = 0; j + 1 < g.ny(); ++j)
        for (int i = 0; i + 1 < g.nx(); ++i) {
            std::size_t k = g.index(i, j);
            const double v[4] = {u[k], u[k + 1], u[k + nx + 1], u[k + nx]};
            const Point c[4] = {g.node(i, j), g.node(i + 1, j), g.node(i + 1, j + 1), g.node(i, j + 1)};
            bool pos[4];
            int npos = 0;
            for (int q = 0; q < 4; ++q) npos += (pos[q] = v[q] > 0.0);
            if (npos == 0 || npos == 4) continue;
            auto vertex = [&](int e) {
                int a = e, b = (e + 1) % 4;
                double t = v[a] / (v[a] - v[b]);
                return Point{c[a].x + t * (c[b].x - c[a].x), c[a].y + t * (c[b].y - c[a].y)};
            };
            auto emit = [&](int e0, int e1) {
                segs.push_back({vertex(e0), vertex(e1)});
                ends.push_back({edge_id(i, j, e0), edge_id(i, j, e1)});
            };
            std::vector<int> cross;
            for (int e = 0; e < 4; ++e)
                if (pos[e] != pos[(e + 1) % 4]) cross.push_back(e);
            if (cross.size() == 2) {
                emit(cross[0], cross[1]);
            } else {
                bool centre = 0.25 * (v[0] + v[1] + v[2] + v[3]) > 0.0;
                if (centre == pos[0]) {
                    emit(0, 1);
                    emit(2, 3);
                } else {
                    emit(3, 0);
                    emit(1, 2);
                }
            }
        }

    std::unordered_map<std::uint64_t, std::vector<std::size_t>> at;
    for (std::size_t s = 0; s < ends.size(); ++s)
        for (std::uint64_t e : ends[s]) at[e].push_back(s);
    std::vector<std::uint8_t> used(segs.size(), 0);
    std::vector<std::vector<Point>> chains;
    auto other = [&](std::uint64_t e, std::size_t s) -> long {
        for (std::size_t t : at[e])
            if (t != s && !used[t]) return static_cast<long>(t);
        return -1;
    };
    auto walk = [&](std::size_t s, std::uint64_t from, std::vector<Point>& out) {
        for (;;) {
            std::uint64_t to = ends[s][0] == from ? ends[s][1] : ends[s][0];
            out.push_back(ends[s][0] == from ? segs[s].b : segs[s].a);
            long t = other(to, s);
            if (t < 0) return;
            s = static_cast<std::size_t>(t);
            used[s] = 1;
            from = to;
        }
    };
    for (std::size_t s0 = 0; s0 < segs.size(); ++s0) {
        if (used[s0]) continue;
        used[s0] = 1;
        std::vector<Point> fwd{segs[s0].a}, back;
        walk(s0, ends[s0][0], fwd);
        long t = other(ends[s0][0], s0);
        if (t >= 0) {
            used[static_cast<std::size_t>(t)] = 1;
            walk(static_cast<std::size_t>(t), ends[s0][0], back);
        }
        std::vector<Point> chain(back.rbegin(), back.rend());
        chain.insert(chain.end(), fwd.begin(), fwd.end());
        chains.push_back(std::move(chain));
    }
    return NodalSet(g, std::move(segs), std::move(chains));
}

struct CircleViolation {
    Point center;
    double radius = 0.0;
    double min_distance = 0.0;
};

struct CircleReport {
    int samples = 0;
    int tested = 0;
    int crossings = 0, exits = 0, sign_changes = 0;
    std::vector<CircleViolation> violations;
    bool pass() const { return violations.empty(); }
};

// Random circles centred on the zero set must meet it again, leave B(0, R) or see
// u change sign.
inline CircleReport verify_circle_property(const ScalarField& u, const NodalSet& F0, double r0, int samples,
                                           double R = std::numeric_limits<double>::infinity(),
                                           std::uint64_t seed = 7) {
    CircleReport rep;
    rep.samples = samples;
    if (F0.empty() || samples <= 0) return rep;
    const Grid2D& g = u.grid();
    const double h = g.h();
    std::vector<double> cum;
    double total = 0.0;
    for (const Segment& s : F0.segments()) cum.push_back(total += dist(s.a, s.b));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    int attempts = 0;
    while (rep.tested < samples && attempts < 50 * samples) {
        ++attempts;
        double pick = U(rng) * total;
        std::size_t si = static_cast<std::size_t>(std::lower_bound(cum.begin(), cum.end(), pick) - cum.begin());
        si = std::min(si, cum.size() - 1);
        const Segment& s = F0.segments()[si];
        double t = U(rng);
        Point z0{s.a.x + t * (s.b.x - s.a.x), s.a.y + t * (s.b.y - s.a.y)};
        double r = 4.0 * h + U(rng) * (r0 - 4.0 * h);
        if (!(r > 0.0) || r >= r0) continue;
        if (z0.x - r < g.origin_x() || z0.y - r < g.origin_y() || z0.x + r > g.xmax() || z0.y + r > g.ymax()) continue;
        ++rep.tested;
        int m = std::max(64, static_cast<int>(std::ceil(4.0 * std::numbers::pi * r / h)));
        double dmin = std::numeric_limits<double>::infinity();
        bool exits = false, plus = false, minus = false;
        for (int q = 0; q < m; ++q) {
            double a = 2.0 * std::numbers::pi * q / m;
            Point p{z0.x + r * std::cos(a), z0.y + r * std::sin(a)};
            if (norm(p) > R) exits = true;
            dmin = std::min(dmin, F0.distance(p));
            double v = bilinear(u, p);
            plus |= v > 0.0;
            minus |= v < 0.0;
        }
        if (dmin <= h) ++rep.crossings;
        else if (exits) ++rep.exits;
        else if (plus && minus) ++rep.sign_changes;
        else rep.violations.push_back({z0, r, dmin});
    }
    return rep;
}

}  // namespace landis
