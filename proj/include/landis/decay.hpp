#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "landis/grid.hpp"

namespace landis {

struct DecayFit {
    std::string model;  // "exp", "exp_sqrt_log", "meshkov"
    double constant = 0.0;   // C in log M = a - C g(r)
    double intercept = 0.0;
    double residual = 0.0;   // rms misfit of log M
    bool decaying = false;   // constant > 0
};

struct DecayProfile {
    std::vector<double> radii, M;
    std::array<DecayFit, 3> fits;
    int best = -1;  // index into fits; -1 when no model decays
    bool decaying() const { return best >= 0; }
};

struct LineFit {
    double slope = 0.0, intercept = 0.0, rms = 0.0;
};

inline LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sx += x[k];
        sy += y[k];
        sxx += x[k] * x[k];
        sxy += x[k] * y[k];
    }
    double den = n * sxx - sx * sx;
    if (!(std::abs(den) > 0.0)) throw FitError("degenerate abscissae");
    LineFit f;
    f.slope = (n * sxy - sx * sy) / den;
    f.intercept = (sy - f.slope * sx) / n;
    double ss = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        double e = y[k] - f.intercept - f.slope * x[k];
        ss += e * e;
    }
    f.rms = std::sqrt(ss / n);
    return f;
}

// M(r) = sup of |u| over the annulus r - h/2 <= |x| <= r + h/2.
inline DecayProfile decay_profile(const ScalarField& u, const std::vector<double>& radii) {
    if (radii.size() < 4) throw FitError("decay profile needs at least 4 radii");
    DecayProfile p;
    const double h = u.grid().h();
    for (std::size_t k = 0; k < radii.size(); ++k) {
        if (k > 0 && !(radii[k] > radii[k - 1])) throw FitError("radii must increase strictly");
        if (!(radii[k] > 1.0)) throw FitError("radii must exceed 1 for the sqrt(log r) model");
        SupResult s = sup_on_region(u, Region::annulus({0.0, 0.0}, radii[k] - 0.5 * h, radii[k] + 0.5 * h));
        if (!(s.value > 0.0)) throw FitError("M(r) vanishes; log profile undefined");
        p.radii.push_back(radii[k]);
        p.M.push_back(s.value);
    }
    std::vector<double> logM;
    for (double m : p.M) logM.push_back(std::log(m));
    const char* names[3] = {"exp", "exp_sqrt_log", "meshkov"};
    double best = std::numeric_limits<double>::infinity();
    for (int m = 0; m < 3; ++m) {
        std::vector<double> g;
        for (double r : p.radii) {
            if (m == 0) g.push_back(r);
            else if (m == 1) g.push_back(r * std::sqrt(std::log(r)));
            else g.push_back(std::pow(r, 4.0 / 3.0));
        }
        LineFit lf = least_squares(g, logM);
        DecayFit& f = p.fits[static_cast<std::size_t>(m)];
        f.model = names[m];
        f.constant = -lf.slope;
        f.intercept = lf.intercept;
        f.residual = lf.rms;
        f.decaying = f.constant > 0.0;
        if (f.decaying && f.residual < best) {
            best = f.residual;
            p.best = m;
        }
    }
    return p;
}

struct VanishingOrder {
    double order = 0.0;
    bool exact_zero = false;  // sup vanished at some radius; order reported as infinity
    std::vector<double> radii, sups;
};

// Least-squares slope of log sup_{B(0,r)} |u| against log r.
inline VanishingOrder vanishing_order(const ScalarField& u, const std::vector<double>& radii) {
    if (radii.size() < 3) throw FitError("vanishing order needs at least 3 radii");
    VanishingOrder v;
    std::vector<double> x, y;
    for (double r : radii) {
        SupResult s = sup_on_region(u, Region::ball({0.0, 0.0}, r));
        v.radii.push_back(r);
        v.sups.push_back(s.value);
        if (s.value == 0.0) v.exact_zero = true;
        x.push_back(std::log(r));
        y.push_back(std::log(s.value));
    }
    if (v.exact_zero) {
        v.order = std::numeric_limits<double>::infinity();
        return v;
    }
    v.order = least_squares(x, y).slope;
    return v;
}

}  // namespace landis
