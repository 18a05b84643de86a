#pragma once

#include <vector>

#include "sdfgi/atlas.hpp"
#include "sdfgi/config.hpp"
#include "sdfgi/probe_volume.hpp"
#include "sdfgi/sampling.hpp"

namespace sdfgi {

struct RadianceSample {
    Vec3 dir;
    Vec3 radiance;
    double hitT = kInf;  // kInf on miss
};

struct ConvolveResult {
    Vec3 irradiance{0, 0, 0};
    bool empty = false;
};

// Cosine-lobe convolution of full-sphere radiance samples: the Monte Carlo
// estimate of the irradiance around texelDir, E = (4pi/N) sum max(0, cos) * L.
inline ConvolveResult convolveIrradiance(const std::vector<RadianceSample>& samples,
                                         const Vec3& texelDir) {
    if (samples.empty()) return {{0, 0, 0}, true};
    Vec3 acc{0, 0, 0};
    for (const RadianceSample& s : samples) {
        double w = dot(texelDir, s.dir);
        if (w > 0) acc += s.radiance * w;
    }
    return {acc * (4.0 * kPi / samples.size()), false};
}

// Read view over the previous frame's probe state: positions plus one atlas per
// cascade, index-parallel.
struct IrradianceField {
    const std::vector<CascadeVolume>* cascades = nullptr;
    const std::vector<ProbeAtlas>* atlases = nullptr;

    bool valid() const { return cascades && atlases && !cascades->empty(); }
};

// Stencil-weighted atlas lookup with no visibility information; only safe where
// the caller supplies its own gating.
inline Vec3 sampleIrradianceRaw(const IrradianceField& field, const InterpolationStencil& st,
                                const Vec3& dir) {
    Vec3 acc{0, 0, 0};
    Vec2 uv = octEncode(dir);
    for (int i = 0; i < st.count; ++i) {
        const StencilEntry& e = st.entries[i];
        if (e.weight <= 0) continue;
        acc += (*field.atlases)[e.ref.cascade].sampleBilinear(e.ref.index, uv) * e.weight;
    }
    return acc;
}

// Irradiance feeding the multi-bounce term at a surface point. Probes behind
// the surface cannot light it, so each stencil weight is scaled by a smooth
// backface term before renormalizing; without this, cells that straddle a thin
// wall would bleed light from the far side into the bounce feedback.
inline ConvolveResult sampleBounceIrradiance(const IrradianceField& field, const Vec3& pos,
                                             const Vec3& normal,
                                             double mvcRelocationFrac = 0.25) {
    if (!field.valid()) return {{0, 0, 0}, true};
    InterpolationStencil st = interpolationStencil(*field.cascades, pos, mvcRelocationFrac);
    if (st.skyFallback || st.count == 0) return {{0, 0, 0}, true};
    double wsum = 0;
    std::array<double, 8> w{};
    for (int i = 0; i < st.count; ++i) {
        const StencilEntry& e = st.entries[i];
        if (e.weight <= 0) continue;
        const CascadeVolume& c = (*field.cascades)[e.ref.cascade];
        Vec3 toProbe = c.probes[e.ref.index].pos - pos;
        double len = length(toProbe);
        double facing = len > 1e-9 ? dot(toProbe / len, normal) : 1.0;
        double backface = (facing + 1.0) * 0.5;
        w[i] = e.weight * backface * backface;
        wsum += w[i];
    }
    if (wsum <= 1e-12) return {{0, 0, 0}, true};
    Vec3 acc{0, 0, 0};
    Vec2 uv = octEncode(normal);
    for (int i = 0; i < st.count; ++i) {
        if (w[i] <= 0) continue;
        acc += (*field.atlases)[st.entries[i].ref.cascade].sampleBilinear(
                   st.entries[i].ref.index, uv) *
               (w[i] / wsum);
    }
    return {acc, false};
}

// Unshadowed-then-shadowed direct irradiance from the scene's analytic lights at
// a surface point. Sky-kind lights are environment radiance and are picked up by
// ray misses instead.
inline Vec3 directIrradiance(const ActiveScene& scene, const Vec3& pos, const Vec3& normal,
                             const RenderConfig& cfg, TraceStats* stats = nullptr) {
    Vec3 total{0, 0, 0};
    for (const Light& light : scene.lights) {
        Vec3 dir;
        double tMax;
        Vec3 unshadowed;
        if (light.kind == LightKind::Point) {
            Vec3 toLight = light.position - pos;
            double r2 = lengthSq(toLight);
            if (r2 < 1e-12) continue;
            double r = std::sqrt(r2);
            dir = toLight / r;
            double cosTheta = dot(normal, dir);
            if (cosTheta <= 0) continue;
            unshadowed = light.intensity * (cosTheta / r2);
            tMax = r;
        } else if (light.kind == LightKind::Directional) {
            dir = -light.direction;
            double cosTheta = dot(normal, dir);
            if (cosTheta <= 0) continue;
            unshadowed = light.intensity * cosTheta;
            tMax = cfg.rayTMax;
        } else {
            continue;
        }
        double cosTheta = dot(normal, dir);
        double bias = 2.0 * cfg.surfaceEpsilon / std::max(0.1, cosTheta);
        double vis = 1.0;
        if (tMax - bias > bias)
            vis = softShadowTrace(scene, pos + normal * bias, dir, bias, tMax - bias,
                                  cfg.shadowK, stats, cfg.shadowSteps);
        total += unshadowed * vis;
    }
    return total;
}

// Outgoing radiance at a probe-ray hit: emission, direct light with penumbra
// shadows, and the previous frame's probe irradiance as the multi-bounce term.
inline Vec3 shadeHit(const ActiveScene& scene, const Hit& hit, const IrradianceField& prevField,
                     double bounceCoeff, const RenderConfig& cfg, TraceStats* stats = nullptr) {
    if (hit.primitiveIndex < 0) return scene.sky;
    const Material& mat = scene.primitives[hit.primitiveIndex].material;
    Vec3 brdf = mat.albedo / kPi;
    Vec3 radiance = mat.emission + brdf * directIrradiance(scene, hit.position, hit.normal, cfg,
                                                           stats);
    if (bounceCoeff > 0) {
        ConvolveResult prev =
            sampleBounceIrradiance(prevField, hit.position, hit.normal, cfg.mvcRelocationFrac);
        if (!prev.empty) radiance += brdf * (bounceCoeff * prev.irradiance);
    }
    return radiance;
}

struct ProbeUpdateResult {
    double maxTexelDelta = 0;  // jitter metric: largest texel change this update
    int raysTraced = 0;
};

inline uint64_t probeKey(const ProbeRef& ref) {
    return hashCombine(static_cast<uint64_t>(ref.cascade) + 0x9e1du,
                       static_cast<uint64_t>(ref.index));
}

// Full radiance update of one probe: trace rays, shade hits against the previous
// frame, convolve every texel, and blend into the current atlas. History
// rejection replaces the texels outright (and traces twice the rays to pay for
// it); otherwise the blend factor comes from the hysteresis scaled by ray-count
// sufficiency.
inline ProbeUpdateResult updateProbe(const ActiveScene& scene, CascadeVolume& cascade,
                                     int probeIndex, const IrradianceField& prevField,
                                     ProbeAtlas& currAtlas, int nRays,
                                     const RenderConfig& cfg, int frameIndex,
                                     TraceStats* stats = nullptr) {
    Probe& probe = cascade.probes[probeIndex];
    ProbeUpdateResult result;
    int rays = probe.rejectHistory ? nRays * 2 : nRays;
    ProbeRef ref{cascade.level, probeIndex};
    auto dirs = sampleDirections(rays, frameIndex, probeKey(ref), cfg.seed, cfg.rotatePerFrame);

    std::vector<RadianceSample> samples(rays);
    for (int i = 0; i < rays; ++i) {
        Hit hit = sphereTrace(scene, probe.pos, dirs[i], cfg.rayTMax, cfg.surfaceEpsilon,
                              cfg.maxTraceSteps, stats);
        RadianceSample& s = samples[i];
        s.dir = dirs[i];
        if (hit.converged) {
            s.radiance = shadeHit(scene, hit, prevField, cfg.bounceCoeff, cfg, stats);
            s.hitT = hit.t;
        } else {
            s.radiance = scene.sky;
        }
    }
    result.raysTraced = rays;

    double alpha = probe.rejectHistory
                       ? 1.0
                       : std::clamp((1.0 - cfg.hysteresis) * rays / cfg.nRaysFull, cfg.alphaMin,
                                    1.0);
    int r = currAtlas.res();
    for (int y = 0; y < r; ++y) {
        for (int x = 0; x < r; ++x) {
            Vec3 fresh = convolveIrradiance(samples, octTexelDir(x, y, r)).irradiance;
            Vec3 old = currAtlas.texel(probeIndex, x, y);
            Vec3 blended = lerp(old, fresh, alpha);
            result.maxTexelDelta =
                std::max(result.maxTexelDelta, maxComponent(vabs(blended - old)));
            currAtlas.setTexel(probeIndex, x, y, blended);
        }
    }
    currAtlas.fillBorder(probeIndex);
    probe.rejectHistory = false;
    probe.lastUpdateFrame = frameIndex;
    return result;
}

}  // namespace sdfgi
