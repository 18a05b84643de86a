#pragma once

#include <array>
#include <cmath>

#include "sdfgi/vec.hpp"

namespace sdfgi {

// Mean value coordinates of a point with respect to a hexahedral cell whose 8
// corners are ordered by bits (ix | iy<<1 | iz<<2), matching the trilinear
// corner order. The cell boundary is triangulated into 12 triangles with
// outward orientation. Reproduces affine functions for points inside the cell;
// weights may go negative for warped cells, callers clamp if they need
// convexity. Returns false when the evaluation is numerically degenerate.
inline bool mvcWeightsHex(const std::array<Vec3, 8>& corners, const Vec3& x,
                          std::array<double, 8>& weights) {
    static const int kFaces[6][4] = {
        {0, 2, 3, 1},  // -z
        {4, 5, 7, 6},  // +z
        {0, 1, 5, 4},  // -y
        {2, 6, 7, 3},  // +y
        {0, 4, 6, 2},  // -x
        {1, 3, 7, 5},  // +x
    };
    const double eps = 1e-10;

    weights.fill(0.0);

    std::array<double, 8> dist;
    std::array<Vec3, 8> unit;
    for (int i = 0; i < 8; ++i) {
        Vec3 v = corners[i] - x;
        dist[i] = length(v);
        if (dist[i] < eps) {  // on a corner
            weights[i] = 1.0;
            return true;
        }
        unit[i] = v / dist[i];
    }

    bool any = false;
    for (auto& face : kFaces) {
        int tris[2][3] = {{face[0], face[1], face[2]}, {face[0], face[2], face[3]}};
        for (auto& tri : tris) {
            double d[3], theta[3];
            Vec3 u[3];
            for (int i = 0; i < 3; ++i) {
                d[i] = dist[tri[i]];
                u[i] = unit[tri[i]];
            }
            for (int i = 0; i < 3; ++i) {
                double l = length(u[(i + 1) % 3] - u[(i + 2) % 3]);
                theta[i] = 2.0 * std::asin(std::clamp(l * 0.5, 0.0, 1.0));
            }
            double h = (theta[0] + theta[1] + theta[2]) * 0.5;

            if (kPi - h < 1e-8) {
                // x lies on this triangle: 2D barycentric weights win outright
                weights.fill(0.0);
                double total = 0;
                double w[3];
                for (int i = 0; i < 3; ++i) {
                    w[i] = std::sin(theta[i]) * d[(i + 1) % 3] * d[(i + 2) % 3];
                    total += w[i];
                }
                if (total < eps) return false;
                for (int i = 0; i < 3; ++i) weights[tri[i]] = w[i] / total;
                return true;
            }

            double det = dot(u[0], cross(u[1], u[2]));
            double sign = det >= 0 ? 1.0 : -1.0;
            double c[3], s[3];
            bool skip = false;
            for (int i = 0; i < 3; ++i) {
                double denom = std::sin(theta[(i + 1) % 3]) * std::sin(theta[(i + 2) % 3]);
                if (std::fabs(denom) < eps) {
                    skip = true;
                    break;
                }
                c[i] = (2.0 * std::sin(h) * std::sin(h - theta[i])) / denom - 1.0;
                s[i] = sign * std::sqrt(std::max(0.0, 1.0 - c[i] * c[i]));
                if (std::fabs(s[i]) <= eps) {
                    skip = true;  // x coplanar with the triangle but outside it
                    break;
                }
            }
            if (skip) continue;

            for (int i = 0; i < 3; ++i) {
                double w = (theta[i] - c[(i + 1) % 3] * theta[(i + 2) % 3] -
                            c[(i + 2) % 3] * theta[(i + 1) % 3]) /
                           (d[i] * std::sin(theta[(i + 1) % 3]) * s[(i + 2) % 3]);
                weights[tri[i]] += w;
                any = true;
            }
        }
    }
    if (!any) return false;

    double total = 0;
    for (double w : weights) total += w;
    if (std::fabs(total) < eps || !std::isfinite(total)) return false;
    for (double& w : weights) w /= total;
    return true;
}

}  // namespace sdfgi
