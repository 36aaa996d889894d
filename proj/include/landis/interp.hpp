#pragma once

#include <algorithm>
#include <cmath>

#include "landis/grid.hpp"

namespace landis {

inline double bilinear(const Grid2D& g, const std::vector<double>& v, Point p) {
    double s = (p.x - g.origin_x()) / g.h(), t = (p.y - g.origin_y()) / g.h();
    int i = std::clamp(static_cast<int>(std::floor(s)), 0, g.nx() - 2);
    int j = std::clamp(static_cast<int>(std::floor(t)), 0, g.ny() - 2);
    double a = s - i, b = t - j;
    std::size_t k = g.index(i, j), nx = static_cast<std::size_t>(g.nx());
    return (1 - a) * (1 - b) * v[k] + a * (1 - b) * v[k + 1] + (1 - a) * b * v[k + nx] + a * b * v[k + nx + 1];
}

inline double bilinear(const ScalarField& f, Point p) { return bilinear(f.grid(), f.values(), p); }

namespace detail {

// Catmull-Rom weights for offsets -1, 0, 1, 2 at fractional position a.
inline void cubic_weights(double a, double w[4]) {
    double a2 = a * a, a3 = a2 * a;
    w[0] = 0.5 * (-a3 + 2 * a2 - a);
    w[1] = 0.5 * (3 * a3 - 5 * a2 + 2);
    w[2] = 0.5 * (-3 * a3 + 4 * a2 + a);
    w[3] = 0.5 * (a3 - a2);
}

}  // namespace detail

// Third-order accurate tensor Catmull-Rom interpolation; falls back to bilinear
// within one cell of the grid edge.
inline double bicubic(const Grid2D& g, const std::vector<double>& v, Point p) {
    double s = (p.x - g.origin_x()) / g.h(), t = (p.y - g.origin_y()) / g.h();
    int i = static_cast<int>(std::floor(s)), j = static_cast<int>(std::floor(t));
    if (i < 1 || j < 1 || i > g.nx() - 3 || j > g.ny() - 3) return bilinear(g, v, p);
    double wx[4], wy[4];
    detail::cubic_weights(s - i, wx);
    detail::cubic_weights(t - j, wy);
    double acc = 0.0;
    for (int b = 0; b < 4; ++b) {
        std::size_t row = g.index(i - 1, j - 1 + b);
        double r = 0.0;
        for (int a = 0; a < 4; ++a) r += wx[a] * v[row + a];
        acc += wy[b] * r;
    }
    return acc;
}

inline double bicubic(const ScalarField& f, Point p) { return bicubic(f.grid(), f.values(), p); }

}  // namespace landis
