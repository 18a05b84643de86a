#pragma once

#include <cstdint>

namespace sdfgi {

// Every tunable in one place; scene files may override any of these (see the
// `config` block in the scene format).
struct RenderConfig {
    // tracing
    double surfaceEpsilon = 1e-3;
    int maxTraceSteps = 128;
    int shadowSteps = 256;
    double rayTMax = 100.0;
    double shadowK = 8.0;           // penumbra sharpness for direct-light shadows
    double probeVisibilityK = 8.0;  // penumbra sharpness for probe visibility
    double gradientStep = 1e-3;

    // cluster build
    int maxPerCluster = 8;
    double mergeRadius = 10.0;

    // probe placement and scheduling
    double threshold1Frac = 0.15;  // clearance target, fraction of spacing
    double threshold2Frac = 0.3;   // history-rejecting displacement, fraction of spacing
    int maxDescentSteps = 16;
    int probeBudget = 0;           // probes updated per frame; 0 = all

    // probe radiance update
    int nRaysFull = 144;
    double hysteresis = 0.9;
    double alphaMin = 0.02;
    double bounceCoeff = 0.9;
    int octRes = 8;
    bool rotatePerFrame = true;
    uint64_t seed = 0;

    // per-pixel shading
    double mvcRelocationFrac = 0.25;
    double dedupQuantFrac = 0.25;   // visibility dedup position bucket, fraction of spacing
    double contactRadiusFrac = 0.5; // contact ray length, fraction of cascade-0 spacing
    int contactSamples = 8;
    double historyBlend = 0.6;      // weight of the current frame in the temporal resolve
    double depthSigmaFrac = 0.1;
    double exposure = 1.0;
    int fps = 30;

    double threshold1(double spacing) const { return threshold1Frac * spacing; }
    double threshold2(double spacing) const { return threshold2Frac * spacing; }
};

}  // namespace sdfgi
