#pragma once

#include <cstdint>

#include "sdfgi/vec.hpp"

namespace sdfgi {

enum class PrimitiveKind { Sphere, Box, Plane, Cylinder, Capsule };

struct Material {
    Vec3 albedo{0.5, 0.5, 0.5};  // Lambertian reflectance, componentwise in [0,1]
    Vec3 emission{0, 0, 0};      // radiance, >= 0; supports area lights / self emission
};

enum class LightKind { Point, Directional, Sky };

struct Light {
    LightKind kind = LightKind::Point;
    Vec3 position{0, 0, 0};      // point lights
    Vec3 direction{0, -1, 0};    // directional: direction the light travels (unit)
    Vec3 intensity{1, 1, 1};     // point: radiant intensity; directional/sky: radiance
};

// One analytic shape in the scene. `size` is interpreted per kind:
//   Sphere:   x = radius
//   Box:      x,y,z = half extents
//   Plane:    half-space, solid below local z=0 (orientation via transform)
//   Cylinder: x = radius, y = half height, axis local z
//   Capsule:  x = radius, y = segment half length, axis local z
struct SdfPrimitive {
    int id = 0;
    PrimitiveKind kind = PrimitiveKind::Sphere;
    RigidTransform transform;
    Vec3 size{1, 1, 1};
    Material material;
    int lodTier = 0;  // 0 = always active
};

namespace detail {

inline double sphereSdf(const Vec3& p, double r) { return length(p) - r; }

inline double boxSdf(const Vec3& p, const Vec3& b) {
    Vec3 q = vabs(p) - b;
    double outside = length(vmax(q, Vec3(0)));
    double inside = std::min(maxComponent(q), 0.0);
    return outside + inside;
}

inline double planeSdf(const Vec3& p) { return p.z; }

inline double cylinderSdf(const Vec3& p, double r, double h) {
    double dx = std::sqrt(p.x * p.x + p.y * p.y) - r;
    double dy = std::fabs(p.z) - h;
    double outside = std::sqrt(std::max(dx, 0.0) * std::max(dx, 0.0) +
                               std::max(dy, 0.0) * std::max(dy, 0.0));
    double inside = std::min(std::max(dx, dy), 0.0);
    return outside + inside;
}

inline double capsuleSdf(const Vec3& p, double r, double h) {
    Vec3 q{p.x, p.y, p.z - std::clamp(p.z, -h, h)};
    return length(q) - r;
}

}  // namespace detail

// Exact signed distance to the primitive's surface: negative inside, zero on it.
// Rigid transforms preserve distances, so local-frame evaluation is exact.
// A unit diagonal identifies the identity rotation, sparing axis-aligned shapes
// the matrix multiply.
inline double evalPrimitive(const SdfPrimitive& prim, const Vec3& p) {
    const Mat3& rot = prim.transform.rotation;
    Vec3 q = p - prim.transform.translation;
    if (!(rot.m[0][0] == 1.0 && rot.m[1][1] == 1.0 && rot.m[2][2] == 1.0))
        q = rot.transposeMul(q);
    switch (prim.kind) {
        case PrimitiveKind::Sphere:   return detail::sphereSdf(q, prim.size.x);
        case PrimitiveKind::Box:      return detail::boxSdf(q, prim.size);
        case PrimitiveKind::Plane:    return detail::planeSdf(q);
        case PrimitiveKind::Cylinder: return detail::cylinderSdf(q, prim.size.x, prim.size.y);
        case PrimitiveKind::Capsule:  return detail::capsuleSdf(q, prim.size.x, prim.size.y);
    }
    return kInf;
}

struct GradientResult {
    Vec3 dir{1, 0, 0};
    bool degenerate = false;
};

// Central-difference gradient, normalized. One code path for every kind; near the
// medial axis the raw gradient can vanish, in which case a fixed axis is returned
// with the degenerate flag set.
inline GradientResult evalGradientDetailed(const SdfPrimitive& prim, const Vec3& p,
                                           double h = 1e-3) {
    Vec3 g{evalPrimitive(prim, {p.x + h, p.y, p.z}) - evalPrimitive(prim, {p.x - h, p.y, p.z}),
           evalPrimitive(prim, {p.x, p.y + h, p.z}) - evalPrimitive(prim, {p.x, p.y - h, p.z}),
           evalPrimitive(prim, {p.x, p.y, p.z + h}) - evalPrimitive(prim, {p.x, p.y, p.z - h})};
    double n = length(g);
    if (n < 1e-6 * 2 * h) return {{1, 0, 0}, true};
    return {g / n, false};
}

inline Vec3 evalGradient(const SdfPrimitive& prim, const Vec3& p, double h = 1e-3) {
    return evalGradientDetailed(prim, p, h).dir;
}

// Conservative world-space bounding box of the primitive's surface.
// Planes are unbounded; they get a huge box that is never culled.
inline Aabb primitiveAabb(const SdfPrimitive& prim) {
    const RigidTransform& tf = prim.transform;
    Aabb box;
    auto extentFromLocalBox = [&](const Vec3& halfExt) {
        // |R| * halfExt bounds the rotated local box.
        Vec3 e;
        for (int i = 0; i < 3; ++i)
            e[i] = std::fabs(tf.rotation.m[i][0]) * halfExt.x +
                   std::fabs(tf.rotation.m[i][1]) * halfExt.y +
                   std::fabs(tf.rotation.m[i][2]) * halfExt.z;
        box.expand(tf.translation - e);
        box.expand(tf.translation + e);
    };
    switch (prim.kind) {
        case PrimitiveKind::Sphere:
            box.expand(tf.translation - Vec3(prim.size.x));
            box.expand(tf.translation + Vec3(prim.size.x));
            break;
        case PrimitiveKind::Box:
            extentFromLocalBox(prim.size);
            break;
        case PrimitiveKind::Plane: {
            const double big = 1e9;
            box.expand(Vec3(-big));
            box.expand(Vec3(big));
            break;
        }
        case PrimitiveKind::Cylinder:
            extentFromLocalBox({prim.size.x, prim.size.x, prim.size.y});
            break;
        case PrimitiveKind::Capsule: {
            Vec3 a = tf.toWorld({0, 0, -prim.size.y});
            Vec3 b = tf.toWorld({0, 0, prim.size.y});
            box.expand(vmin(a, b) - Vec3(prim.size.x));
            box.expand(vmax(a, b) + Vec3(prim.size.x));
            break;
        }
    }
    return box;
}

}  // namespace sdfgi
