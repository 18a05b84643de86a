#pragma once

#include "sdfgi/vec.hpp"

namespace sdfgi {

namespace detail {
inline double signNotZero(double v) { return v >= 0.0 ? 1.0 : -1.0; }
}

// Octahedral sphere<->square mapping. Convention: +Z maps to the inner diamond
// with (0,0,1) at uv=(0.5,0.5); -Z folds onto the square's corners/edges.
inline Vec2 octEncode(const Vec3& dir) {
    double norm = std::fabs(dir.x) + std::fabs(dir.y) + std::fabs(dir.z);
    double px = dir.x / norm;
    double py = dir.y / norm;
    if (dir.z < 0) {
        double ox = (1.0 - std::fabs(py)) * detail::signNotZero(px);
        double oy = (1.0 - std::fabs(px)) * detail::signNotZero(py);
        px = ox;
        py = oy;
    }
    return {px * 0.5 + 0.5, py * 0.5 + 0.5};
}

inline Vec3 octDecode(const Vec2& uv) {
    double fx = uv.x * 2.0 - 1.0;
    double fy = uv.y * 2.0 - 1.0;
    Vec3 n{fx, fy, 1.0 - std::fabs(fx) - std::fabs(fy)};
    if (n.z < 0) {
        double t = -n.z;
        n.x += n.x >= 0 ? -t : t;
        n.y += n.y >= 0 ? -t : t;
    }
    return normalize(n);
}

// Center direction of texel (x,y) in an R x R octahedral tile.
inline Vec3 octTexelDir(int x, int y, int res) {
    return octDecode({(x + 0.5) / res, (y + 0.5) / res});
}

}  // namespace sdfgi
