#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "landis/grid.hpp"

namespace landis {

// Text header, one "key value" per line, terminated by "data\n", then
// little-endian float64 planes in row-major order.
namespace detail {

inline std::string hexfloat(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}

inline void write_planes(const std::string& path, const Grid2D& g, const std::vector<const std::vector<double>*>& planes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open " + path + " for writing");
    out << "landis-field 1\n"
        << "planes " << planes.size() << "\n"
        << "nx " << g.nx() << "\n"
        << "ny " << g.ny() << "\n"
        << "origin_x " << hexfloat(g.origin_x()) << "\n"
        << "origin_y " << hexfloat(g.origin_y()) << "\n"
        << "h " << hexfloat(g.h()) << "\n"
        << "endian little\n"
        << "data\n";
    for (const auto* p : planes)
        for (double v : *p) {
            std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
            if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
            char b[8];
            std::memcpy(b, &bits, 8);
            out.write(b, 8);
        }
    if (!out) throw FormatError("write failed for " + path);
}

struct RawField {
    Grid2D grid;
    std::vector<std::vector<double>> planes;
};

inline RawField read_planes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != "landis-field 1") throw FormatError("bad magic in " + path);
    long planes = -1, nx = -1, ny = -1;
    double ox = 0, oy = 0, h = 0;
    bool have_ox = false, have_oy = false, have_h = false;
    while (std::getline(in, line)) {
        if (line == "data") break;
        std::istringstream ss(line);
        std::string key, val;
        ss >> key >> val;
        if (key == "planes") planes = std::strtol(val.c_str(), nullptr, 10);
        else if (key == "nx") nx = std::strtol(val.c_str(), nullptr, 10);
        else if (key == "ny") ny = std::strtol(val.c_str(), nullptr, 10);
        else if (key == "origin_x") ox = std::strtod(val.c_str(), nullptr), have_ox = true;
        else if (key == "origin_y") oy = std::strtod(val.c_str(), nullptr), have_oy = true;
        else if (key == "h") h = std::strtod(val.c_str(), nullptr), have_h = true;
        else if (key == "endian") {
            if (val != "little") throw FormatError("unsupported endianness " + val);
        } else
            throw FormatError("unknown header key '" + key + "'");
    }
    if (line != "data" || planes < 1 || nx < 0 || ny < 0 || !have_ox || !have_oy || !have_h)
        throw FormatError("incomplete header in " + path);
    RawField r{Grid2D(ox, oy, h, static_cast<int>(nx), static_cast<int>(ny)), {}};
    for (long p = 0; p < planes; ++p) {
        std::vector<double> v(r.grid.size());
        for (double& x : v) {
            char b[8];
            if (!in.read(b, 8)) throw FormatError("truncated data in " + path);
            std::uint64_t bits;
            std::memcpy(&bits, b, 8);
            if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
            x = std::bit_cast<double>(bits);
        }
        r.planes.push_back(std::move(v));
    }
    return r;
}

}  // namespace detail

inline void write_field(const std::string& path, const ScalarField& f) {
    detail::write_planes(path, f.grid(), {&f.values()});
}

inline void write_field(const std::string& path, const ComplexField& f) {
    detail::write_planes(path, f.grid(), {&f.re(), &f.im()});
}

inline ScalarField read_scalar_field(const std::string& path) {
    auto r = detail::read_planes(path);
    if (r.planes.size() != 1) throw FormatError(path + " does not hold a scalar field");
    return ScalarField(r.grid, std::move(r.planes[0]));
}

inline ComplexField read_complex_field(const std::string& path) {
    auto r = detail::read_planes(path);
    if (r.planes.size() != 2) throw FormatError(path + " does not hold a complex field");
    return ComplexField(r.grid, std::move(r.planes[0]), std::move(r.planes[1]));
}

}  // namespace landis
