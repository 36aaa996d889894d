#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <unordered_map>
#include <vector>

#include "landis/grid.hpp"

namespace landis {

enum class NodeClass : std::uint8_t { exterior = 0, dirichlet = 1, interior = 2 };

// Link directions: +x, -x, +y, -y.
inline constexpr int kDi[4] = {1, -1, 0, 0};
inline constexpr int kDj[4] = {0, 0, 1, -1};

// A boundary crossing on the link from an interior node toward a neighbour,
// at fraction theta in (0,1] of the link length, with the boundary value there.
struct LinkCut {
    double theta = 0.0;
    double value = 0.0;
    bool nodal = false;
    bool active() const { return theta > 0.0; }
};

class DomainMask {
public:
    DomainMask(const Grid2D& g, std::vector<NodeClass> cls, std::vector<double> bvalues,
               std::vector<std::int32_t> cut_slot = {}, std::vector<std::array<LinkCut, 4>> cuts = {},
               std::vector<std::uint8_t> nodal_node = {})
        : grid_(g), cls_(std::move(cls)), bval_(std::move(bvalues)), cut_slot_(std::move(cut_slot)),
          cuts_(std::move(cuts)), nodal_node_(std::move(nodal_node)) {
        if (cls_.size() != g.size() || bval_.size() != g.size())
            throw DimensionError("mask arrays do not match grid");
        if (nodal_node_.empty()) nodal_node_.assign(g.size(), 0);
        if (!cut_slot_.empty() && cut_slot_.size() != g.size())
            throw DimensionError("cut index does not match grid");
        unknown_.assign(g.size(), -1);
        for (std::size_t k = 0; k < g.size(); ++k) {
            if (cls_[k] != NodeClass::interior) continue;
            int i = g.i_of(k), j = g.j_of(k);
            if (g.on_ring(i, j)) throw DimensionError("interior node on grid boundary ring");
            for (int d = 0; d < 4; ++d) {
                if (cut(k, d).active()) continue;
                NodeClass c = cls_[g.index(i + kDi[d], j + kDj[d])];
                if (c == NodeClass::exterior)
                    throw DimensionError("interior node has an exterior stencil neighbour");
            }
            unknown_[k] = static_cast<std::int32_t>(nodes_.size());
            nodes_.push_back(k);
        }
        if (nodes_.empty()) throw DimensionError("mask has no interior node");
    }

    const Grid2D& grid() const { return grid_; }
    NodeClass cls(std::size_t k) const { return cls_[k]; }
    double boundary_value(std::size_t k) const { return bval_[k]; }
    bool is_interior(std::size_t k) const { return cls_[k] == NodeClass::interior; }
    std::size_t interior_count() const { return nodes_.size(); }
    std::int32_t unknown(std::size_t k) const { return unknown_[k]; }
    std::size_t node_of(std::size_t u) const { return nodes_[u]; }
    const std::vector<std::int32_t>& unknown_map() const { return unknown_; }
    bool has_cuts() const { return !cuts_.empty(); }
    LinkCut cut(std::size_t k, int dir) const {
        if (cut_slot_.empty() || cut_slot_[k] < 0) return {};
        return cuts_[static_cast<std::size_t>(cut_slot_[k])][dir];
    }

    // Same classification with geometric boundary data replaced by g and
    // nodal boundary data replaced by nodal_value.
    DomainMask with_boundary(const std::function<double(Point)>& g, double nodal_value = 0.0) const {
        std::vector<double> bv(bval_.size(), 0.0);
        for (std::size_t k = 0; k < bv.size(); ++k)
            if (cls_[k] == NodeClass::dirichlet) bv[k] = nodal_node_[k] ? nodal_value : g(grid_.node(k));
        auto cuts = cuts_;
        for (std::size_t k = 0; k < cut_slot_.size(); ++k) {
            if (cut_slot_[k] < 0) continue;
            auto& cs = cuts[static_cast<std::size_t>(cut_slot_[k])];
            Point p = grid_.node(k);
            for (int d = 0; d < 4; ++d)
                if (cs[d].active())
                    cs[d].value = cs[d].nodal ? nodal_value
                                              : g({p.x + cs[d].theta * kDi[d] * grid_.h(),
                                                   p.y + cs[d].theta * kDj[d] * grid_.h()});
        }
        return DomainMask(grid_, cls_, std::move(bv), cut_slot_, std::move(cuts), nodal_node_);
    }

    DomainMask homogeneous() const {
        return with_boundary([](Point) { return 0.0; });
    }

private:
    Grid2D grid_;
    std::vector<NodeClass> cls_;
    std::vector<double> bval_;
    std::vector<std::int32_t> cut_slot_;
    std::vector<std::array<LinkCut, 4>> cuts_;
    std::vector<std::uint8_t> nodal_node_;
    std::vector<std::int32_t> unknown_;
    std::vector<std::size_t> nodes_;
};

// Level-set description of a domain: negative inside.
using LevelSet = std::function<double(Point)>;

inline LevelSet inside_ball(Point c, double r) {
    return [c, r](Point p) { return dist(p, c) - r; };
}
inline LevelSet outside_ball(Point c, double r) {
    return [c, r](Point p) { return r - dist(p, c); };
}
inline LevelSet inside_box(double x0, double y0, double x1, double y1) {
    return [=](Point p) { return std::max({x0 - p.x, p.x - x1, y0 - p.y, p.y - y1}); };
}

// Union of disks, indexed by a bucket grid; value is max_j (r_j - |p - c_j|) near disks.
class DiskIndex {
public:
    DiskIndex() = default;
    explicit DiskIndex(std::vector<Disk> disks, double cell = 0.0) : disks_(std::move(disks)) {
        if (disks_.empty()) return;
        double rmax = 0.0;
        x0_ = y0_ = 1e300;
        for (const Disk& d : disks_) {
            rmax = std::max(rmax, d.radius);
            x0_ = std::min(x0_, d.cx);
            y0_ = std::min(y0_, d.cy);
        }
        cell_ = cell > 0.0 ? cell : 4.0 * rmax;
        x0_ -= cell_;
        y0_ -= cell_;
        for (std::size_t k = 0; k < disks_.size(); ++k) buckets_[key(cell_of(disks_[k].cx, x0_), cell_of(disks_[k].cy, y0_))].push_back(k);
    }
    const std::vector<Disk>& disks() const { return disks_; }
    double cell() const { return cell_; }

    // Calls f(disk index) for every disk whose center lies within `radius` of p.
    template <class F>
    void for_each_near(Point p, double radius, F&& f) const {
        if (disks_.empty()) return;
        int ci0 = cell_of(p.x - radius, x0_), ci1 = cell_of(p.x + radius, x0_);
        int cj0 = cell_of(p.y - radius, y0_), cj1 = cell_of(p.y + radius, y0_);
        for (int cj = cj0; cj <= cj1; ++cj)
            for (int ci = ci0; ci <= ci1; ++ci) {
                auto it = buckets_.find(key(ci, cj));
                if (it == buckets_.end()) continue;
                for (std::size_t k : it->second)
                    if (dist(p, disks_[k].center()) <= radius) f(k);
            }
    }

    double level(Point p) const {
        double best = -cell_;
        for_each_near(p, cell_, [&](std::size_t k) {
            best = std::max(best, disks_[k].radius - dist(p, disks_[k].center()));
        });
        return best;
    }

    // Distance from p to the union of the disks (0 inside), searching up to `cap`.
    double distance(Point p, double cap) const {
        double best = cap;
        for_each_near(p, cap + max_radius(), [&](std::size_t k) {
            best = std::min(best, std::max(0.0, dist(p, disks_[k].center()) - disks_[k].radius));
        });
        return best;
    }

    double max_radius() const {
        double m = 0.0;
        for (const Disk& d : disks_) m = std::max(m, d.radius);
        return m;
    }

private:
    static std::int64_t key(int ci, int cj) { return (static_cast<std::int64_t>(ci) << 32) ^ static_cast<std::uint32_t>(cj); }
    int cell_of(double v, double o) const { return static_cast<int>(std::floor((v - o) / cell_)); }
    std::vector<Disk> disks_;
    double cell_ = 1.0, x0_ = 0.0, y0_ = 0.0;
    std::unordered_map<std::int64_t, std::vector<std::size_t>> buckets_;
};

inline LevelSet outside_disks(std::shared_ptr<const DiskIndex> idx) {
    return [idx](Point p) { return idx->level(p); };
}

struct MaskSpec {
    std::vector<LevelSet> level_sets;
    // Optional sign field: links between nodes of opposite sign are boundaries (value nodal_value).
    const ScalarField* nodal = nullptr;
    double nodal_value = 0.0;
    std::function<double(Point)> boundary;  // data on geometric boundaries; zero if empty
    // false: node-centred staircase boundaries; true: boundary located on each link
    // (symmetric ghost-point elimination).
    bool cut = false;
    double min_theta = 1e-6;
};

namespace detail {

inline int sign_of(double u) { return u > 0.0 ? 1 : (u < 0.0 ? -1 : 0); }

inline double link_root(const LevelSet& L, Point a, Point b, double fa, double fb) {
    double t0 = 0.0, t1 = 1.0, f0 = fa, f1 = fb;
    int side = 0;
    double t = f0 / (f0 - f1);
    for (int it = 0; it < 40; ++it) {
        t = (t0 * f1 - t1 * f0) / (f1 - f0);
        double ft = L({a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)});
        if (std::abs(ft) < 1e-15 || t1 - t0 < 1e-13) break;
        if (ft < 0.0) {
            t0 = t, f0 = ft;
            if (side == -1) f1 *= 0.5;
            side = -1;
        } else {
            t1 = t, f1 = ft;
            if (side == 1) f0 *= 0.5;
            side = 1;
        }
    }
    return t;
}

}  // namespace detail

inline DomainMask build_mask(const Grid2D& g, const MaskSpec& s) {
    if (s.nodal && s.nodal->grid() != g) throw DimensionError("nodal field grid differs from mask grid");
    const std::size_t n = g.size();
    auto bfun = [&](Point p) { return s.boundary ? s.boundary(p) : 0.0; };
    std::vector<std::uint8_t> geo(n, 1), inside(n, 1);
    std::vector<signed char> sgn(n, 1);
    for (std::size_t k = 0; k < n; ++k) {
        Point p = g.node(k);
        for (const auto& L : s.level_sets)
            if (!(L(p) < 0.0)) {
                geo[k] = 0;
                break;
            }
        inside[k] = geo[k];
        if (s.nodal) {
            sgn[k] = static_cast<signed char>(detail::sign_of((*s.nodal)[k]));
            if (sgn[k] == 0) inside[k] = 0;
        }
    }
    auto neighbour = [&](std::size_t k, int d) { return g.index(g.i_of(k) + kDi[d], g.j_of(k) + kDj[d]); };
    auto ring = [&](std::size_t k) { return g.on_ring(g.i_of(k), g.j_of(k)); };

    std::vector<NodeClass> cls(n, NodeClass::exterior);
    for (std::size_t k = 0; k < n; ++k) {
        if (!inside[k] || ring(k)) continue;
        bool ok = true;
        if (!s.cut && s.nodal)
            for (int d = 0; d < 4; ++d)
                if (sgn[neighbour(k, d)] != sgn[k]) ok = false;
        if (ok) cls[k] = NodeClass::interior;
    }
    std::vector<double> bval(n, 0.0);
    std::vector<std::uint8_t> nodal_node(n, 0);
    auto mark_dirichlet = [&](std::size_t m) {
        if (cls[m] != NodeClass::exterior) return;
        cls[m] = NodeClass::dirichlet;
        if (geo[m] && !ring(m) && s.nodal) {
            nodal_node[m] = 1;
            bval[m] = s.nodal_value;
        } else {
            bval[m] = bfun(g.node(m));
        }
    };
    std::vector<std::int32_t> slot;
    std::vector<std::array<LinkCut, 4>> cuts;
    if (s.cut) slot.assign(n, -1);
    for (std::size_t k = 0; k < n; ++k) {
        if (cls[k] != NodeClass::interior) continue;
        Point p = g.node(k);
        for (int d = 0; d < 4; ++d) {
            std::size_t m = neighbour(k, d);
            bool plain = inside[m] && sgn[m] == sgn[k];
            if (!s.cut || plain) {
                mark_dirichlet(m);
                continue;
            }
            Point q = g.node(m);
            LinkCut c{2.0, 0.0, false};
            for (const auto& L : s.level_sets) {
                double fq = L(q);
                if (fq < 0.0) continue;
                double t = detail::link_root(L, p, q, L(p), fq);
                if (t < c.theta) c = {t, bfun({p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)}), false};
            }
            if (s.nodal && sgn[m] != sgn[k]) {
                double ui = (*s.nodal)[k], uj = (*s.nodal)[m];
                double t = ui / (ui - uj);
                if (t < c.theta) c = {t, s.nodal_value, true};
            }
            if (c.theta > 1.0) c = {1.0, bfun(q), false};
            c.theta = std::max(c.theta, s.min_theta);
            if (slot[k] < 0) {
                slot[k] = static_cast<std::int32_t>(cuts.size());
                cuts.emplace_back();
            }
            cuts[static_cast<std::size_t>(slot[k])][d] = c;
            mark_dirichlet(m);
        }
    }
    return DomainMask(g, std::move(cls), std::move(bval), std::move(slot), std::move(cuts), std::move(nodal_node));
}

}  // namespace landis
