#pragma once

#include <vector>

#include "sdfgi/rng.hpp"
#include "sdfgi/vec.hpp"

namespace sdfgi {

// Spherical Fibonacci point set: near-optimal low-discrepancy cover of the sphere.
inline Vec3 sphericalFibonacci(int i, int n) {
    const double goldenAngle = kPi * (3.0 - std::sqrt(5.0));
    double z = 1.0 - (2.0 * i + 1.0) / n;
    double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    double phi = goldenAngle * i;
    return {r * std::cos(phi), r * std::sin(phi), z};
}

// Probe ray directions: the Fibonacci set under a deterministic random rotation
// keyed by (frame, probe, seed). Rotating per frame decorrelates the fixed
// quadrature pattern across temporal blending. rotatePerFrame=false pins the
// rotation to the probe alone, which freezes the estimate in static scenes.
inline std::vector<Vec3> sampleDirections(int n, int frameIndex, uint64_t probeId,
                                          uint64_t seed = 0, bool rotatePerFrame = true) {
    Rng rng(seed, rotatePerFrame ? static_cast<uint64_t>(frameIndex) : 0xf1b0u, probeId,
            0x5df6d1u);
    Mat3 rot = randomRotation(rng);
    std::vector<Vec3> dirs(n);
    for (int i = 0; i < n; ++i) dirs[i] = rot * sphericalFibonacci(i, n);
    return dirs;
}

}  // namespace sdfgi
