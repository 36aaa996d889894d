#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "landis/error.hpp"
#include "landis/grid.hpp"

namespace landis::svg {

struct Series {
    std::string name;
    std::vector<double> x, y;
    bool markers = false;
    bool dashed = false;
};

struct LineChart {
    std::string title, xlabel, ylabel;
    std::vector<Series> series;
};

struct Scatter {
    std::string title;
    double extent = 1.0;  // plotted window [-extent, extent]^2
    std::vector<Disk> disks;
    std::vector<std::vector<Point>> polylines;
    std::vector<Point> marks;
    std::vector<double> circles;  // radii of reference circles about the origin
};

namespace detail {

inline const char* palette(std::size_t k) {
    static const char* c[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    return c[k % 6];
}

inline std::string f3(double v) {
    char b[32];
    std::snprintf(b, sizeof b, "%.3f", v);
    return b;
}

inline std::string esc(const std::string& s) {
    std::string o;
    for (char c : s) {
        if (c == '<') o += "&lt;";
        else if (c == '>') o += "&gt;";
        else if (c == '&') o += "&amp;";
        else o += c;
    }
    return o;
}

inline std::string tick(double v) {
    char b[32];
    std::snprintf(b, sizeof b, "%.3g", v);
    return b;
}

}  // namespace detail

inline std::string render(const LineChart& c) {
    const double W = 640, H = 420, L = 70, Rm = 150, T = 40, B = 50;
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const Series& s : c.series)
        for (std::size_t k = 0; k < s.x.size(); ++k) {
            if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
            x0 = std::min(x0, s.x[k]), x1 = std::max(x1, s.x[k]);
            y0 = std::min(y0, s.y[k]), y1 = std::max(y1, s.y[k]);
        }
    if (!(x1 > x0)) x0 -= 1, x1 += 1;
    if (!(y1 > y0)) y0 -= 1, y1 += 1;
    auto X = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - Rm); };
    auto Y = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
    using detail::f3;
    std::string o = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"420\" font-family=\"sans-serif\" font-size=\"11\">\n";
    o += "<rect width=\"640\" height=\"420\" fill=\"white\"/>\n";
    o += "<text x=\"" + f3(W / 2) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">" + detail::esc(c.title) + "</text>\n";
    o += "<rect x=\"" + f3(L) + "\" y=\"" + f3(T) + "\" width=\"" + f3(W - L - Rm) + "\" height=\"" + f3(H - T - B) +
         "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        double xv = x0 + (x1 - x0) * t / 4, yv = y0 + (y1 - y0) * t / 4;
        o += "<text x=\"" + f3(X(xv)) + "\" y=\"" + f3(H - B + 15) + "\" text-anchor=\"middle\">" + detail::tick(xv) + "</text>\n";
        o += "<text x=\"" + f3(L - 5) + "\" y=\"" + f3(Y(yv) + 4) + "\" text-anchor=\"end\">" + detail::tick(yv) + "</text>\n";
    }
    o += "<text x=\"" + f3((L + W - Rm) / 2) + "\" y=\"" + f3(H - 10) + "\" text-anchor=\"middle\">" + detail::esc(c.xlabel) + "</text>\n";
    o += "<text x=\"15\" y=\"" + f3((T + H - B) / 2) + "\" transform=\"rotate(-90 15 " + f3((T + H - B) / 2) +
         ")\" text-anchor=\"middle\">" + detail::esc(c.ylabel) + "</text>\n";
    for (std::size_t s = 0; s < c.series.size(); ++s) {
        const Series& S = c.series[s];
        std::string pts;
        for (std::size_t k = 0; k < S.x.size(); ++k) {
            if (!std::isfinite(S.x[k]) || !std::isfinite(S.y[k])) continue;
            pts += f3(X(S.x[k])) + "," + f3(Y(S.y[k])) + " ";
        }
        o += "<polyline fill=\"none\" stroke=\"" + std::string(detail::palette(s)) + "\" stroke-width=\"1.5\"" +
             (S.dashed ? " stroke-dasharray=\"5,3\"" : "") + " points=\"" + pts + "\"/>\n";
        if (S.markers)
            for (std::size_t k = 0; k < S.x.size(); ++k)
                if (std::isfinite(S.x[k]) && std::isfinite(S.y[k]))
                    o += "<circle cx=\"" + f3(X(S.x[k])) + "\" cy=\"" + f3(Y(S.y[k])) + "\" r=\"2.5\" fill=\"" +
                         detail::palette(s) + "\"/>\n";
        double ly = T + 15 + 16 * s;
        o += "<line x1=\"" + f3(W - Rm + 10) + "\" y1=\"" + f3(ly) + "\" x2=\"" + f3(W - Rm + 30) + "\" y2=\"" + f3(ly) +
             "\" stroke=\"" + detail::palette(s) + "\" stroke-width=\"2\"/>\n";
        o += "<text x=\"" + f3(W - Rm + 35) + "\" y=\"" + f3(ly + 4) + "\">" + detail::esc(S.name) + "</text>\n";
    }
    o += "</svg>\n";
    return o;
}

inline std::string render(const Scatter& s) {
    const double W = 560, pad = 20, e = s.extent;
    auto X = [&](double x) { return pad + (x + e) / (2 * e) * (W - 2 * pad); };
    auto Y = [&](double y) { return W - pad - (y + e) / (2 * e) * (W - 2 * pad); };
    const double sc = (W - 2 * pad) / (2 * e);
    using detail::f3;
    std::string o = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"560\" height=\"590\" font-family=\"sans-serif\" font-size=\"11\">\n";
    o += "<rect width=\"560\" height=\"590\" fill=\"white\"/>\n";
    o += "<text x=\"280\" y=\"580\" text-anchor=\"middle\" font-size=\"13\">" + detail::esc(s.title) + "</text>\n";
    for (double r : s.circles)
        o += "<circle cx=\"" + f3(X(0)) + "\" cy=\"" + f3(Y(0)) + "\" r=\"" + f3(r * sc) + "\" fill=\"none\" stroke=\"#888\"/>\n";
    for (const auto& pl : s.polylines) {
        std::string pts;
        for (Point p : pl) pts += f3(X(p.x)) + "," + f3(Y(p.y)) + " ";
        o += "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1\" points=\"" + pts + "\"/>\n";
    }
    for (const Disk& d : s.disks)
        o += "<circle cx=\"" + f3(X(d.cx)) + "\" cy=\"" + f3(Y(d.cy)) + "\" r=\"" + f3(std::max(0.5, d.radius * sc)) +
             "\" fill=\"#d62728\" fill-opacity=\"0.5\" stroke=\"none\"/>\n";
    for (Point p : s.marks)
        o += "<circle cx=\"" + f3(X(p.x)) + "\" cy=\"" + f3(Y(p.y)) + "\" r=\"3\" fill=\"#2ca02c\"/>\n";
    o += "</svg>\n";
    return o;
}

template <class Chart>
void write(const std::string& path, const Chart& c) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write " + path);
    out << render(c);
}

}  // namespace landis::svg
