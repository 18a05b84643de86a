#pragma once

#include "sdfgi/vec.hpp"

namespace sdfgi {

// Pinhole camera with an orthonormal frame.
struct Camera {
    Vec3 position{0, 0, 0};
    Vec3 forward{0, 0, -1};
    Vec3 right{1, 0, 0};
    Vec3 up{0, 1, 0};
    double fovYDeg = 60.0;

    static Camera lookAt(const Vec3& pos, const Vec3& target, const Vec3& upHint = {0, 1, 0},
                         double fovYDeg = 60.0) {
        Camera c;
        c.position = pos;
        c.forward = normalize(target - pos);
        Vec3 r = cross(c.forward, upHint);
        if (length(r) < 1e-9) r = cross(c.forward, {1, 0, 0});
        c.right = normalize(r);
        c.up = cross(c.right, c.forward);
        c.fovYDeg = fovYDeg;
        return c;
    }

    // Ray direction through the center of pixel (px, py).
    Vec3 rayDir(double px, double py, int width, int height) const {
        double tanHalf = std::tan(fovYDeg * kPi / 360.0);
        double aspect = static_cast<double>(width) / height;
        double ndcX = (2.0 * (px + 0.5) / width - 1.0) * tanHalf * aspect;
        double ndcY = (1.0 - 2.0 * (py + 0.5) / height) * tanHalf;
        return normalize(forward + right * ndcX + up * ndcY);
    }

    // Projects a world point to pixel coordinates; false when behind the camera.
    bool project(const Vec3& world, int width, int height, Vec2& pixel) const {
        Vec3 rel = world - position;
        double z = dot(rel, forward);
        if (z <= 1e-9) return false;
        double tanHalf = std::tan(fovYDeg * kPi / 360.0);
        double aspect = static_cast<double>(width) / height;
        double ndcX = dot(rel, right) / (z * tanHalf * aspect);
        double ndcY = dot(rel, up) / (z * tanHalf);
        pixel = {(ndcX + 1.0) * 0.5 * width - 0.5, (1.0 - ndcY) * 0.5 * height - 0.5};
        return true;
    }
};

}  // namespace sdfgi
