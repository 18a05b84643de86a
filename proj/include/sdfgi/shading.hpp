#pragma once

#include <unordered_map>
#include <vector>

#include "sdfgi/camera.hpp"
#include "sdfgi/image.hpp"
#include "sdfgi/parallel.hpp"
#include "sdfgi/probe_update.hpp"

namespace sdfgi {

struct GBufferPixel {
    double depth = kInf;  // along the view ray; +inf for sky
    Vec3 normal{0, 0, 1};
    Vec3 albedo{0, 0, 0};
    Vec3 emission{0, 0, 0};
    Vec3 worldPos;
    Vec2 motion{0, 0};  // pixel-space offset to last frame's position
    int primitiveIndex = -1;

    bool sky() const { return !(depth < kInf); }
};

struct GBuffer {
    int width = 0, height = 0;
    std::vector<GBufferPixel> pixels;

    GBuffer() = default;
    GBuffer(int w, int h) : width(w), height(h), pixels(static_cast<size_t>(w) * h) {}
    GBufferPixel& at(int x, int y) { return pixels[static_cast<size_t>(y) * width + x]; }
    const GBufferPixel& at(int x, int y) const {
        return pixels[static_cast<size_t>(y) * width + x];
    }
};

// Primary visibility by sphere tracing; the scene is SDF-native so there is no
// raster pass. Motion vectors reproject the hit through last frame's camera.
inline GBuffer renderGBuffer(const ActiveScene& scene, const Camera& camera,
                             const Camera& prevCamera, int width, int height,
                             const RenderConfig& cfg, TraceStats* stats = nullptr,
                             int threads = 1) {
    GBuffer gb(width, height);
    std::vector<TraceStats> chunkStats(std::max(1, threads));
    parallelFor(0, height, threads, [&](int64_t y, int worker) {
        TraceStats* st = stats ? &chunkStats[worker] : nullptr;
        {
            for (int x = 0; x < width; ++x) {
                GBufferPixel& px = gb.at(x, static_cast<int>(y));
                Vec3 dir = camera.rayDir(x, static_cast<double>(y), width, height);
                Hit hit = sphereTrace(scene, camera.position, dir, cfg.rayTMax,
                                      cfg.surfaceEpsilon, cfg.maxTraceSteps, st);
                if (!hit.converged) continue;
                px.depth = hit.t;
                px.normal = hit.normal;
                px.worldPos = hit.position;
                px.primitiveIndex = hit.primitiveIndex;
                if (hit.primitiveIndex >= 0) {
                    const Material& m = scene.primitives[hit.primitiveIndex].material;
                    px.albedo = m.albedo;
                    px.emission = m.emission;
                }
                Vec2 prevPix;
                if (prevCamera.project(hit.position, width, height, prevPix))
                    px.motion = {prevPix.x - x, prevPix.y - y};
            }
        }
    });
    if (stats)
        for (auto& s : chunkStats) stats->merge(s);
    return gb;
}

struct HalfResDepth {
    int width = 0, height = 0;
    std::vector<double> depth;
    std::vector<int> srcPixel;  // full-res pixel that produced each min/max

    int index(int x, int y) const { return y * width + x; }
};

// Min/max checkerboard downsample: "black" half-res pixels ((x+y) even) keep the
// maximum of their 2x2 source block, "white" ones the minimum, so together they
// preserve the full depth extent of every block.
inline HalfResDepth downsampleDepthCheckerboard(const GBuffer& gb) {
    HalfResDepth out;
    out.width = (gb.width + 1) / 2;
    out.height = (gb.height + 1) / 2;
    out.depth.resize(static_cast<size_t>(out.width) * out.height);
    out.srcPixel.resize(out.depth.size());
    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
            bool takeMax = ((x + y) & 1) == 0;
            double best = takeMax ? -kInf : kInf;
            int bestSrc = 0;
            for (int dy = 0; dy < 2; ++dy) {
                for (int dx = 0; dx < 2; ++dx) {
                    int sx = std::min(2 * x + dx, gb.width - 1);  // edge clamp
                    int sy = std::min(2 * y + dy, gb.height - 1);
                    double d = gb.at(sx, sy).depth;
                    if (takeMax ? d > best : d < best) {
                        best = d;
                        bestSrc = sy * gb.width + sx;
                    }
                }
            }
            out.depth[out.index(x, y)] = best;
            out.srcPixel[out.index(x, y)] = bestSrc;
        }
    }
    return out;
}

struct SelectedPixels {
    int width = 0, height = 0;            // quarter-res grid dimensions
    std::vector<int> halfResIndex;        // chosen half-res pixel per cell

    int index(int x, int y) const { return y * width + x; }
};

// One visibility pixel per 2x2 half-res block. The choice rotates with the frame
// index so four frames cover the block, but blocks with a real depth spread
// override the rotation with the depth extremum (min on even frames, max on odd)
// so both ends of the extent are visited.
inline SelectedPixels selectVisibilityPixels(const HalfResDepth& half, int frameIndex) {
    static const int kOffsets[4][2] = {{0, 0}, {1, 0}, {0, 1}, {1, 1}};
    SelectedPixels out;
    out.width = (half.width + 1) / 2;
    out.height = (half.height + 1) / 2;
    out.halfResIndex.resize(static_cast<size_t>(out.width) * out.height);
    int rot = frameIndex & 3;
    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
            int hx0 = 2 * x, hy0 = 2 * y;
            // depth extent over geometry only; sky carries no GI worth anchoring
            double lo = kInf, hi = -kInf;
            int loIdx = -1, hiIdx = -1;
            for (int k = 0; k < 4; ++k) {
                int hx = std::min(hx0 + kOffsets[k][0], half.width - 1);
                int hy = std::min(hy0 + kOffsets[k][1], half.height - 1);
                double d = half.depth[half.index(hx, hy)];
                if (!std::isfinite(d)) continue;
                if (d < lo) { lo = d; loIdx = half.index(hx, hy); }
                if (d > hi) { hi = d; hiIdx = half.index(hx, hy); }
            }
            int hx = std::min(hx0 + kOffsets[rot][0], half.width - 1);
            int hy = std::min(hy0 + kOffsets[rot][1], half.height - 1);
            int pick = half.index(hx, hy);
            if (loIdx >= 0) {
                bool rotSky = !std::isfinite(half.depth[pick]);
                bool spread = (hi - lo) > 0.1 * hi;
                if (spread)
                    pick = (frameIndex & 1) == 0 ? loIdx : hiIdx;
                else if (rotSky)
                    pick = loIdx;  // rotation would waste the cell on sky
            }
            out.halfResIndex[out.index(x, y)] = pick;
        }
    }
    return out;
}

struct VisibilityTask {
    ProbeRef probe;
    Vec3 surfacePoint;
    Vec3 normal;
    double spacing = 1.0;  // of the probe's cascade, for the end-shrink
};

// Per selected pixel: its stencil plus, for each stencil slot, the index of the
// shared visibility task that will provide the occlusion value.
struct PixelVisibility {
    InterpolationStencil stencil;
    std::array<int, 8> taskIndex{};
    bool valid = false;
};

struct VisibilityWork {
    std::vector<VisibilityTask> tasks;
    std::vector<PixelVisibility> pixels;  // parallel to SelectedPixels cells
};

// Shares visibility traces between the selected pixels of each 4x4 half-res
// tile: a (probe, quantized surface position) pair is traced once per tile.
inline VisibilityWork buildVisibilityTasks(const std::vector<CascadeVolume>& cascades,
                                           const GBuffer& gb, const HalfResDepth& half,
                                           const SelectedPixels& sel,
                                           const RenderConfig& cfg) {
    VisibilityWork work;
    work.pixels.resize(sel.halfResIndex.size());
    int tilesX = (sel.width + 1) / 2, tilesY = (sel.height + 1) / 2;

    struct Key {
        int cascade, probe;
        int32_t qx, qy, qz;
        bool operator==(const Key& o) const {
            return cascade == o.cascade && probe == o.probe && qx == o.qx && qy == o.qy &&
                   qz == o.qz;
        }
    };
    struct KeyHash {
        size_t operator()(const Key& k) const {
            uint64_t h = hashCombine(static_cast<uint64_t>(k.cascade) << 32 |
                                         static_cast<uint32_t>(k.probe),
                                     hashCombine(static_cast<uint32_t>(k.qx),
                                                 hashCombine(static_cast<uint32_t>(k.qy),
                                                             static_cast<uint32_t>(k.qz))));
            return static_cast<size_t>(h);
        }
    };

    std::unordered_map<Key, int, KeyHash> tileMap;
    for (int ty = 0; ty < tilesY; ++ty) {
        for (int tx = 0; tx < tilesX; ++tx) {
            tileMap.clear();
            for (int dy = 0; dy < 2; ++dy) {
                for (int dx = 0; dx < 2; ++dx) {
                    int cx = 2 * tx + dx, cy = 2 * ty + dy;
                    if (cx >= sel.width || cy >= sel.height) continue;
                    int cell = sel.index(cx, cy);
                    int src = half.srcPixel[sel.halfResIndex[cell]];
                    const GBufferPixel& px = gb.pixels[src];
                    PixelVisibility& pv = work.pixels[cell];
                    if (px.sky()) continue;
                    pv.stencil =
                        interpolationStencil(cascades, px.worldPos, cfg.mvcRelocationFrac);
                    if (pv.stencil.skyFallback || pv.stencil.count == 0) continue;
                    pv.valid = true;
                    for (int s = 0; s < pv.stencil.count; ++s) {
                        const StencilEntry& e = pv.stencil.entries[s];
                        if (e.weight <= 0) {
                            pv.taskIndex[s] = -1;
                            continue;
                        }
                        double quant =
                            cfg.dedupQuantFrac * cascades[e.ref.cascade].spacing;
                        Key key{e.ref.cascade, e.ref.index,
                                static_cast<int32_t>(std::floor(px.worldPos.x / quant)),
                                static_cast<int32_t>(std::floor(px.worldPos.y / quant)),
                                static_cast<int32_t>(std::floor(px.worldPos.z / quant))};
                        auto it = tileMap.find(key);
                        if (it == tileMap.end()) {
                            VisibilityTask task;
                            task.probe = e.ref;
                            task.surfacePoint = px.worldPos;
                            task.normal = px.normal;
                            task.spacing = cascades[e.ref.cascade].spacing;
                            it = tileMap.emplace(key, static_cast<int>(work.tasks.size()))
                                     .first;
                            work.tasks.push_back(task);
                        }
                        pv.taskIndex[s] = it->second;
                    }
                }
            }
        }
    }
    return work;
}

// SDF soft-shadow visibility between a surface point and a probe. The ray starts
// a normal-oriented bias off the surface and stops one clearance short of the
// probe, so neither endpoint self-occludes.
inline double probeVisibility(const ActiveScene& scene, const Vec3& surfacePoint,
                              const Vec3& normal, const Vec3& probePos, double k,
                              double threshold1, const RenderConfig& cfg,
                              TraceStats* stats = nullptr) {
    Vec3 toProbe = probePos - surfacePoint;
    double dist = length(toProbe);
    if (dist < 1e-9) return 1.0;
    Vec3 dir = toProbe / dist;
    double cosTheta = dot(normal, dir);
    double bias = 2.0 * cfg.surfaceEpsilon / std::max(0.1, cosTheta);
    double tMax = dist - threshold1;
    if (tMax <= bias) return 1.0;
    if (stats) ++stats->visibilityTraces;
    return softShadowTrace(scene, surfacePoint + normal * bias, dir, bias, tMax, k, stats,
                           cfg.shadowSteps);
}

inline std::vector<double> runVisibilityTasks(const ActiveScene& scene,
                                              const std::vector<CascadeVolume>& cascades,
                                              const VisibilityWork& work,
                                              const RenderConfig& cfg,
                                              TraceStats* stats = nullptr, int threads = 1) {
    std::vector<double> results(work.tasks.size(), 1.0);
    std::vector<TraceStats> chunkStats(std::max(1, threads));
    parallelFor(0, static_cast<int64_t>(work.tasks.size()), threads,
                [&](int64_t i, int worker) {
                    TraceStats* st = stats ? &chunkStats[worker] : nullptr;
                    const VisibilityTask& t = work.tasks[i];
                    const Probe& probe = cascades[t.probe.cascade].probes[t.probe.index];
                    results[i] = probeVisibility(scene, t.surfacePoint, t.normal, probe.pos,
                                                 cfg.probeVisibilityK,
                                                 cfg.threshold1(t.spacing), cfg, st);
                });
    if (stats)
        for (auto& s : chunkStats) stats->merge(s);
    return results;
}

struct SparseGi {
    int width = 0, height = 0;        // quarter-res grid
    std::vector<Vec3> irradiance;     // E at the anchor pixel
    std::vector<int> anchorPixel;     // full-res pixel the value belongs to
    std::vector<uint8_t> valid;

    int index(int x, int y) const { return y * width + x; }
};

// Visibility-gated probe interpolation for one selected pixel. All-occluded
// stencils flag as invalid rather than falling back to the ungated average;
// leaks are worse than holes, which the upsample pass can fill.
struct PixelGiResult {
    Vec3 irradiance{0, 0, 0};
    bool valid = false;
};

inline PixelGiResult shadePixelGI(const PixelVisibility& pv, const std::vector<double>& vis,
                                  const Vec3& normal, const IrradianceField& field) {
    PixelGiResult out;
    if (!pv.valid) return out;
    double wsum = 0;
    Vec2 uv = octEncode(normal);
    Vec3 acc{0, 0, 0};
    for (int s = 0; s < pv.stencil.count; ++s) {
        const StencilEntry& e = pv.stencil.entries[s];
        if (e.weight <= 0 || pv.taskIndex[s] < 0) continue;
        double w = e.weight * vis[pv.taskIndex[s]];
        if (w <= 0) continue;
        acc += (*field.atlases)[e.ref.cascade].sampleBilinear(e.ref.index, uv) * w;
        wsum += w;
    }
    if (wsum <= 1e-9) return out;
    out.irradiance = acc / wsum;
    out.valid = true;
    return out;
}

struct HistoryBuffers {
    ImageRgb irradiance;          // resolved full-res E of the previous frame
    std::vector<double> depth;    // previous frame's depth
    bool valid = false;
};

// Fills full resolution from the sparse visibility-gated samples with a joint
// bilateral filter (depth + normal), then blends against the reprojected
// history clamped to the local neighborhood. Pixels with neither neighbors nor
// history fall back to the raw probe field.
inline ImageRgb upsampleAndResolve(const SparseGi& sparse, const GBuffer& gb,
                                   const HistoryBuffers& history,
                                   const std::vector<CascadeVolume>& cascades,
                                   const IrradianceField& field, const RenderConfig& cfg,
                                   int threads = 1) {
    ImageRgb out(gb.width, gb.height);
    parallelFor(0, gb.height, threads, [&](int64_t yy, int) {
        {
            int y = static_cast<int>(yy);
            for (int x = 0; x < gb.width; ++x) {
                const GBufferPixel& px = gb.at(x, y);
                if (px.sky()) continue;

                int qx = x / 4, qy = y / 4;
                Vec3 acc{0, 0, 0};
                double wsum = 0;
                Vec3 cmin{kInf, kInf, kInf}, cmax{-kInf, -kInf, -kInf};
                bool anyNeighbor = false;
                double sigma = std::max(1e-6, cfg.depthSigmaFrac * px.depth);
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        int nx = qx + dx, ny = qy + dy;
                        if (nx < 0 || ny < 0 || nx >= sparse.width || ny >= sparse.height)
                            continue;
                        int cell = sparse.index(nx, ny);
                        if (!sparse.valid[cell]) continue;
                        const GBufferPixel& anchor = gb.pixels[sparse.anchorPixel[cell]];
                        double w = std::exp(-std::fabs(anchor.depth - px.depth) / sigma) *
                                   std::pow(std::max(0.0, dot(anchor.normal, px.normal)), 4.0);
                        if (w <= 1e-6) continue;
                        acc += sparse.irradiance[cell] * w;
                        wsum += w;
                        cmin = vmin(cmin, sparse.irradiance[cell]);
                        cmax = vmax(cmax, sparse.irradiance[cell]);
                        anyNeighbor = true;
                    }
                }

                Vec3 current{0, 0, 0};
                bool haveCurrent = wsum > 1e-9;
                if (haveCurrent) current = acc / wsum;

                // reproject history through the motion vector
                Vec3 hist{0, 0, 0};
                bool haveHistory = false;
                if (history.valid) {
                    int hx = static_cast<int>(std::lround(x + px.motion.x));
                    int hy = static_cast<int>(std::lround(y + px.motion.y));
                    if (hx >= 0 && hy >= 0 && hx < gb.width && hy < gb.height) {
                        double hd = history.depth[static_cast<size_t>(hy) * gb.width + hx];
                        if (std::isfinite(hd) &&
                            std::fabs(hd - px.depth) <= 0.1 * std::max(hd, px.depth)) {
                            hist = history.irradiance.at(hx, hy);
                            if (anyNeighbor) hist = vmin(vmax(hist, cmin), cmax);
                            haveHistory = true;
                        }
                    }
                }

                if (haveCurrent && haveHistory)
                    out.at(x, y) = current * cfg.historyBlend + hist * (1.0 - cfg.historyBlend);
                else if (haveCurrent)
                    out.at(x, y) = current;
                else if (haveHistory)
                    out.at(x, y) = hist;
                else {
                    // nothing at all: raw probe field (converged probes near this
                    // pixel carry the right value; fresh ones are dark)
                    InterpolationStencil st =
                        interpolationStencil(cascades, px.worldPos, cfg.mvcRelocationFrac);
                    if (!st.skyFallback) out.at(x, y) = sampleIrradianceRaw(field, st, px.normal);
                }
            }
        }
    });
    return out;
}

// Short-range occlusion with occluder lighting: ambient occlusion modulates the
// probe GI, and the energy of occluded directions is replaced by the sampled
// radiance of the occluders instead of being thrown away.
inline ImageRgb contactGI(const ActiveScene& scene, const GBuffer& gb,
                          const ImageRgb& resolvedE, const IrradianceField& prevField,
                          double radius, int nSamples, const RenderConfig& cfg,
                          TraceStats* stats = nullptr, int threads = 1) {
    ImageRgb out(gb.width, gb.height);
    std::vector<TraceStats> chunkStats(std::max(1, threads));
    parallelFor(0, gb.height, threads, [&](int64_t yy, int worker) {
        TraceStats* st = stats ? &chunkStats[worker] : nullptr;
        {
            int y = static_cast<int>(yy);
            for (int x = 0; x < gb.width; ++x) {
                const GBufferPixel& px = gb.at(x, y);
                if (px.sky()) continue;
                Vec3 brdf = px.albedo / kPi;
                Vec3 probeGi = brdf * resolvedE.at(x, y);
                if (nSamples <= 0 || radius <= 0) {
                    out.at(x, y) = probeGi;
                    continue;
                }
                // deterministic per-pixel sampling: static scenes stay fixed
                Rng rng(cfg.seed, 0xc0417ffull, static_cast<uint64_t>(y) * gb.width + x);
                int unoccluded = 0;
                Vec3 occluderSum{0, 0, 0};
                for (int s = 0; s < nSamples; ++s) {
                    Vec3 dir = cosineHemisphereDir(rng, px.normal);
                    double cosTheta = std::max(0.1, dot(dir, px.normal));
                    double bias = 2.0 * cfg.surfaceEpsilon / cosTheta;
                    Hit hit = sphereTrace(scene, px.worldPos + px.normal * bias, dir, radius,
                                          cfg.surfaceEpsilon, cfg.maxTraceSteps, st,
                                          bias + cfg.surfaceEpsilon);
                    if (!hit.converged) {
                        ++unoccluded;
                    } else {
                        occluderSum +=
                            shadeHit(scene, hit, prevField, cfg.bounceCoeff, cfg, st);
                    }
                }
                double ao = static_cast<double>(unoccluded) / nSamples;
                Vec3 contact = px.albedo / kPi * (kPi / nSamples) * occluderSum;
                out.at(x, y) = probeGi * ao + contact;
            }
        }
    });
    if (stats)
        for (auto& s : chunkStats) stats->merge(s);
    return out;
}

// Final assembly: emission + direct lighting with penumbra shadows + the
// indirect term, sky radiance on misses.
inline ImageRgb composeFrame(const ActiveScene& scene, const GBuffer& gb,
                             const ImageRgb& indirect, const RenderConfig& cfg,
                             TraceStats* stats = nullptr, int threads = 1) {
    ImageRgb out(gb.width, gb.height);
    std::vector<TraceStats> chunkStats(std::max(1, threads));
    parallelFor(0, gb.height, threads, [&](int64_t yy, int worker) {
        TraceStats* st = stats ? &chunkStats[worker] : nullptr;
        {
            int y = static_cast<int>(yy);
            for (int x = 0; x < gb.width; ++x) {
                const GBufferPixel& px = gb.at(x, y);
                if (px.sky()) {
                    out.at(x, y) = scene.sky;
                    continue;
                }
                Vec3 direct = directIrradiance(scene, px.worldPos, px.normal, cfg, st);
                out.at(x, y) = px.emission + px.albedo / kPi * direct + indirect.at(x, y);
            }
        }
    });
    if (stats)
        for (auto& s : chunkStats) stats->merge(s);
    return out;
}

}  // namespace sdfgi
