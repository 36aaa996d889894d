#pragma once

#include <cmath>
#include <numbers>

#include "landis/fft.hpp"
#include "landis/grid.hpp"

namespace landis {

// Mean of log|z| over the square [-h/2,h/2]^2.
inline double cell_average_log(double h) {
    return std::log(h) + 0.5 * (-std::log(2.0) - 3.0 + 0.5 * std::numbers::pi);
}

inline double fundamental_solution(double x, double y) {
    return std::log(std::hypot(x, y)) / (2.0 * std::numbers::pi);
}

// Discrete convolution with E(z) = (1/2pi) log|z|, kernel weighted by the cell area.
inline ScalarField convolve_fundamental(const ScalarField& g) {
    const Grid2D& G = g.grid();
    const int nx = G.nx(), ny = G.ny();
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            if (G.on_ring(i, j) && g(i, j) != 0.0)
                throw SupportError("source is nonzero on the grid boundary ring");

    const int px = fft_size(2 * nx), py = fft_size(2 * ny);
    const double h = G.h(), h2 = h * h;
    const double two_pi = 2.0 * std::numbers::pi;

    Fft2D ker(py, px), src(py, px);
    for (int j = 0; j < py; ++j)
        for (int i = 0; i < px; ++i) {
            ker.at(i, j) = 0.0;
            src.at(i, j) = 0.0;
        }
    for (int dj = -(ny - 1); dj <= ny - 1; ++dj)
        for (int di = -(nx - 1); di <= nx - 1; ++di) {
            double k = (di == 0 && dj == 0) ? cell_average_log(h) / two_pi
                                            : fundamental_solution(di * h, dj * h);
            ker.at((di + px) % px, (dj + py) % py) = k * h2;
        }
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) src.at(i, j) = g(i, j);
    ker.forward();
    src.forward();
    for (std::size_t k = 0; k < src.size(); ++k) src.data()[k] *= ker.data()[k];
    src.backward();
    std::vector<double> out(G.size());
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) out[G.index(i, j)] = src.at(i, j).real();
    return ScalarField(G, std::move(out));
}

}  // namespace landis
