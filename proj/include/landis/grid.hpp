#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "landis/error.hpp"

namespace landis {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

inline double dist(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }
inline double norm(Point a) { return std::hypot(a.x, a.y); }

class Grid2D {
public:
    Grid2D() = default;
    Grid2D(double origin_x, double origin_y, double h, int nx, int ny)
        : ox_(origin_x), oy_(origin_y), h_(h), nx_(nx), ny_(ny) {
        if (!(h > 0.0) || !std::isfinite(h))
            throw DimensionError("grid spacing must be positive");
        if (nx < 3 || ny < 3) throw DimensionError("grid must be at least 3x3");
    }

    // Square grid with a node at the origin and nodes at every multiple of h
    // inside [-half_width, half_width]^2.
    static Grid2D centered(double half_width, double h) {
        int m = static_cast<int>(std::ceil(half_width / h - 1e-9));
        return Grid2D(-m * h, -m * h, h, 2 * m + 1, 2 * m + 1);
    }

    double origin_x() const { return ox_; }
    double origin_y() const { return oy_; }
    double h() const { return h_; }
    int nx() const { return nx_; }
    int ny() const { return ny_; }
    std::size_t size() const { return static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_); }

    double x(int i) const { return ox_ + i * h_; }
    double y(int j) const { return oy_ + j * h_; }
    Point node(int i, int j) const { return {x(i), y(j)}; }
    Point node(std::size_t idx) const { return node(i_of(idx), j_of(idx)); }
    std::size_t index(int i, int j) const {
        return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx_) + static_cast<std::size_t>(i);
    }
    int i_of(std::size_t idx) const { return static_cast<int>(idx % static_cast<std::size_t>(nx_)); }
    int j_of(std::size_t idx) const { return static_cast<int>(idx / static_cast<std::size_t>(nx_)); }
    bool on_ring(int i, int j) const { return i == 0 || j == 0 || i == nx_ - 1 || j == ny_ - 1; }
    bool contains_index(int i, int j) const { return i >= 0 && j >= 0 && i < nx_ && j < ny_; }

    double xmax() const { return x(nx_ - 1); }
    double ymax() const { return y(ny_ - 1); }
    bool covers(Point p) const { return p.x >= ox_ && p.y >= oy_ && p.x <= xmax() && p.y <= ymax(); }

    // Nearest node index (clamped to the grid).
    std::size_t nearest(Point p) const {
        int i = std::clamp(static_cast<int>(std::lround((p.x - ox_) / h_)), 0, nx_ - 1);
        int j = std::clamp(static_cast<int>(std::lround((p.y - oy_) / h_)), 0, ny_ - 1);
        return index(i, j);
    }

    friend bool operator==(const Grid2D& a, const Grid2D& b) {
        return a.ox_ == b.ox_ && a.oy_ == b.oy_ && a.h_ == b.h_ && a.nx_ == b.nx_ && a.ny_ == b.ny_;
    }
    friend bool operator!=(const Grid2D& a, const Grid2D& b) { return !(a == b); }

private:
    double ox_ = 0.0, oy_ = 0.0, h_ = 1.0;
    int nx_ = 3, ny_ = 3;
};

inline void require_same_grid(const Grid2D& a, const Grid2D& b, const char* what) {
    if (a != b) throw DimensionError(std::string(what) + ": fields live on different grids");
}

class ScalarField {
public:
    ScalarField() = default;
    explicit ScalarField(const Grid2D& g, double fill = 0.0) : grid_(g), v_(g.size(), fill) { check_finite(); }
    ScalarField(const Grid2D& g, std::vector<double> values) : grid_(g), v_(std::move(values)) {
        if (v_.size() != g.size()) throw DimensionError("value count does not match grid");
        check_finite();
    }
    template <class F>
    static ScalarField sample(const Grid2D& g, F&& f) {
        std::vector<double> v(g.size());
        for (int j = 0; j < g.ny(); ++j)
            for (int i = 0; i < g.nx(); ++i) v[g.index(i, j)] = f(g.x(i), g.y(j));
        return ScalarField(g, std::move(v));
    }

    const Grid2D& grid() const { return grid_; }
    const std::vector<double>& values() const { return v_; }
    std::size_t size() const { return v_.size(); }
    double operator[](std::size_t k) const { return v_[k]; }
    double operator()(int i, int j) const { return v_[grid_.index(i, j)]; }

    double max_abs() const {
        double m = 0.0;
        for (double x : v_) m = std::max(m, std::abs(x));
        return m;
    }

private:
    void check_finite() const {
        for (double x : v_)
            if (!std::isfinite(x)) throw DimensionError("field values must be finite");
    }
    Grid2D grid_;
    std::vector<double> v_;
};

class ComplexField {
public:
    ComplexField() = default;
    explicit ComplexField(const Grid2D& g) : grid_(g), re_(g.size(), 0.0), im_(g.size(), 0.0) {}
    ComplexField(const Grid2D& g, std::vector<double> re, std::vector<double> im)
        : grid_(g), re_(std::move(re)), im_(std::move(im)) {
        if (re_.size() != g.size() || im_.size() != g.size())
            throw DimensionError("value count does not match grid");
        for (std::size_t k = 0; k < re_.size(); ++k)
            if (!std::isfinite(re_[k]) || !std::isfinite(im_[k]))
                throw DimensionError("field values must be finite");
    }
    const Grid2D& grid() const { return grid_; }
    const std::vector<double>& re() const { return re_; }
    const std::vector<double>& im() const { return im_; }
    std::size_t size() const { return re_.size(); }
    double max_abs() const {
        double m = 0.0;
        for (std::size_t k = 0; k < re_.size(); ++k) m = std::max(m, std::hypot(re_[k], im_[k]));
        return m;
    }

private:
    Grid2D grid_;
    std::vector<double> re_, im_;
};

// Stencil output: values plus an explicit validity flag per node.
struct FlaggedField {
    ScalarField value;
    std::vector<std::uint8_t> valid;
};

struct Disk {
    double cx = 0.0, cy = 0.0, radius = 1.0;
    Disk() = default;
    Disk(double x, double y, double r) : cx(x), cy(y), radius(r) {
        if (!(r > 0.0)) throw GeometryError("disk radius must be positive");
    }
    Point center() const { return {cx, cy}; }
};

class Region {
public:
    enum class Kind { ball, annulus, ball_minus_disks, annulus_minus_disks };

    static Region ball(Point c, double r) { return Region(Kind::ball, c, 0.0, r, {}, 1.0); }
    static Region annulus(Point c, double r_in, double r_out) {
        return Region(Kind::annulus, c, r_in, r_out, {}, 1.0);
    }
    static Region ball_minus(Point c, double r, std::vector<Disk> holes, double dilation) {
        return Region(Kind::ball_minus_disks, c, 0.0, r, std::move(holes), dilation);
    }
    static Region annulus_minus(Point c, double r_in, double r_out, std::vector<Disk> holes, double dilation) {
        return Region(Kind::annulus_minus_disks, c, r_in, r_out, std::move(holes), dilation);
    }

    Kind kind() const { return kind_; }
    Point center() const { return c_; }
    double r_in() const { return r_in_; }
    double r_out() const { return r_out_; }
    const std::vector<Disk>& holes() const { return holes_; }
    double dilation() const { return dil_; }

    // Closed radial bounds with round-off slack, so nodes lying on a circle count as inside.
    bool contains(Point p) const {
        double r = dist(p, c_);
        if (r > r_out_ * (1.0 + 1e-12)) return false;
        if ((kind_ == Kind::annulus || kind_ == Kind::annulus_minus_disks) && r < r_in_ * (1.0 - 1e-12)) return false;
        for (const Disk& d : holes_)
            if (dist(p, d.center()) < dil_ * d.radius) return false;
        return true;
    }

private:
    Region(Kind k, Point c, double r_in, double r_out, std::vector<Disk> holes, double dil)
        : kind_(k), c_(c), r_in_(r_in), r_out_(r_out), holes_(std::move(holes)), dil_(dil) {
        if (!(r_out > 0.0)) throw GeometryError("region radius must be positive");
        if ((k == Kind::annulus || k == Kind::annulus_minus_disks) && !(r_in < r_out))
            throw GeometryError("annulus needs inner radius < outer radius");
        if (!(dil >= 1.0)) throw GeometryError("dilation factor must be >= 1");
    }
    Kind kind_;
    Point c_;
    double r_in_, r_out_;
    std::vector<Disk> holes_;
    double dil_;
};

inline FlaggedField laplacian5(const ScalarField& f) {
    const Grid2D& g = f.grid();
    std::vector<double> out(g.size(), 0.0);
    std::vector<std::uint8_t> valid(g.size(), 0);
    const double ih2 = 1.0 / (g.h() * g.h());
    const auto& v = f.values();
    const std::size_t nx = static_cast<std::size_t>(g.nx());
    for (int j = 1; j < g.ny() - 1; ++j)
        for (int i = 1; i < g.nx() - 1; ++i) {
            std::size_t k = g.index(i, j);
            out[k] = (v[k + 1] + v[k - 1] + v[k + nx] + v[k - nx] - 4.0 * v[k]) * ih2;
            valid[k] = 1;
        }
    return {ScalarField(g, std::move(out)), std::move(valid)};
}

struct Gradient {
    ScalarField fx, fy;
    std::vector<std::uint8_t> valid;
};

inline Gradient gradient_central(const ScalarField& f) {
    const Grid2D& g = f.grid();
    std::vector<double> gx(g.size(), 0.0), gy(g.size(), 0.0);
    std::vector<std::uint8_t> valid(g.size(), 0);
    const double i2h = 0.5 / g.h();
    const auto& v = f.values();
    const std::size_t nx = static_cast<std::size_t>(g.nx());
    for (int j = 1; j < g.ny() - 1; ++j)
        for (int i = 1; i < g.nx() - 1; ++i) {
            std::size_t k = g.index(i, j);
            gx[k] = (v[k + 1] - v[k - 1]) * i2h;
            gy[k] = (v[k + nx] - v[k - nx]) * i2h;
            valid[k] = 1;
        }
    return {ScalarField(g, std::move(gx)), ScalarField(g, std::move(gy)), std::move(valid)};
}

struct SupResult {
    double value = 0.0;
    int i = -1, j = -1;
    Point at;
};

inline SupResult sup_on_region(const ScalarField& f, const Region& reg) {
    const Grid2D& g = f.grid();
    const double h = g.h();
    Point c = reg.center();
    int i0 = std::max(0, static_cast<int>(std::floor((c.x - reg.r_out() - g.origin_x()) / h)));
    int i1 = std::min(g.nx() - 1, static_cast<int>(std::ceil((c.x + reg.r_out() - g.origin_x()) / h)));
    int j0 = std::max(0, static_cast<int>(std::floor((c.y - reg.r_out() - g.origin_y()) / h)));
    int j1 = std::min(g.ny() - 1, static_cast<int>(std::ceil((c.y + reg.r_out() - g.origin_y()) / h)));
    SupResult best;
    bool any = false;
    for (int j = j0; j <= j1; ++j)
        for (int i = i0; i <= i1; ++i) {
            Point p = g.node(i, j);
            if (!reg.contains(p)) continue;
            double a = std::abs(f(i, j));
            if (!any || a > best.value) {
                best = {a, i, j, p};
                any = true;
            }
        }
    if (!any) throw EmptyRegionError("region contains no grid node");
    return best;
}

}  // namespace landis
