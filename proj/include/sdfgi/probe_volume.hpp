#pragma once

#include <algorithm>
#include <array>
#include <vector>

#include "sdfgi/mean_value.hpp"
#include "sdfgi/scene.hpp"

namespace sdfgi {

struct Probe {
    Vec3 restingPos;             // grid position this probe belongs to
    Vec3 pos;                    // relocated position, within half a cell of resting
    Vec3 lastPos;                // relocated position of the previous frame
    bool rejectHistory = true;   // fresh probes and fast movers drop their history
    bool alive = true;           // false: stuck inside geometry, weight 0 everywhere
    int lastUpdateFrame = -1;
};

// One camera-anchored probe grid. Cascade L doubles the spacing of cascade 0 to
// stretch coverage; the origin snaps to spacing multiples so small camera motion
// does not shuffle probes around.
struct CascadeVolume {
    int resX = 0, resY = 0, resZ = 0;
    double spacing = 1.0;
    int level = 0;
    Vec3 origin;
    std::vector<Probe> probes;

    int probeCount() const { return resX * resY * resZ; }
    int index(int ix, int iy, int iz) const { return ix + resX * (iy + resY * iz); }
    Vec3 gridCoord(int idx) const {
        int ix = idx % resX, iy = (idx / resX) % resY, iz = idx / (resX * resY);
        return {static_cast<double>(ix), static_cast<double>(iy), static_cast<double>(iz)};
    }
    Vec3 restingAt(int ix, int iy, int iz) const {
        return origin + Vec3{ix * spacing, iy * spacing, iz * spacing};
    }
    Aabb bounds() const {
        return {origin,
                origin + Vec3{(resX - 1) * spacing, (resY - 1) * spacing, (resZ - 1) * spacing}};
    }
};

inline Vec3 snapToSpacing(const Vec3& p, double spacing) {
    return {std::floor(p.x / spacing + 0.5) * spacing, std::floor(p.y / spacing + 0.5) * spacing,
            std::floor(p.z / spacing + 0.5) * spacing};
}

inline Vec3 cascadeOriginFor(const Vec3& cameraPos, int resX, int resY, int resZ,
                             double spacing) {
    Vec3 extent{(resX - 1) * spacing, (resY - 1) * spacing, (resZ - 1) * spacing};
    return snapToSpacing(cameraPos, spacing) - extent * 0.5;
}

inline CascadeVolume makeCascade(int resX, int resY, int resZ, double spacing0, int level,
                                 const Vec3& cameraPos) {
    CascadeVolume c;
    c.resX = resX;
    c.resY = resY;
    c.resZ = resZ;
    c.level = level;
    c.spacing = spacing0 * std::pow(2.0, level);
    c.origin = cascadeOriginFor(cameraPos, resX, resY, resZ, c.spacing);
    c.probes.resize(c.probeCount());
    for (int iz = 0; iz < resZ; ++iz)
        for (int iy = 0; iy < resY; ++iy)
            for (int ix = 0; ix < resX; ++ix) {
                Probe& p = c.probes[c.index(ix, iy, iz)];
                p.restingPos = c.restingAt(ix, iy, iz);
                p.pos = p.restingPos;
                p.lastPos = p.restingPos;
            }
    return c;
}

// True when the snapped origin moved; all probes are reset (simple full
// invalidation on a grid snap).
inline bool recenterCascade(CascadeVolume& c, const Vec3& cameraPos) {
    Vec3 o = cascadeOriginFor(cameraPos, c.resX, c.resY, c.resZ, c.spacing);
    if (length(o - c.origin) < 1e-12) return false;
    c = makeCascade(c.resX, c.resY, c.resZ, c.spacing / std::pow(2.0, c.level), c.level,
                    cameraPos);
    return true;
}

struct RelocationReport {
    int relocated = 0;
    int rejected = 0;
    int dead = 0;
};

// Walks each probe out of nearby geometry along the scene-SDF gradient. The walk
// restarts from the grid position every frame, which makes it idempotent in
// static scenes, and is capped at half a cell so interpolation cells stay sane.
// A probe that cannot reach clearance threshold1 within the cap is marked dead.
// Moving farther than threshold2 since last frame rejects the probe's history.
inline RelocationReport updateProbePositions(CascadeVolume& cascade, const ActiveScene& scene,
                                             double threshold1, double threshold2,
                                             int maxDescentSteps = 16,
                                             TraceStats* stats = nullptr,
                                             double gradientStep = 1e-3) {
    RelocationReport report;
    double budgetTotal = 0.5 * cascade.spacing;
    for (Probe& probe : cascade.probes) {
        Vec3 prev = probe.pos;
        Vec3 pos = probe.restingPos;
        double d = querySceneSdf(scene, pos, kInf, stats);
        bool alive = true;
        if (d < threshold1) {
            double budget = budgetTotal;
            for (int step = 0; step < maxDescentSteps && d < threshold1 && budget > 0;
                 ++step) {
                GradientResult g = sceneGradient(scene, pos, gradientStep, stats);
                // slight overshoot so the walk settles at d >= threshold1 instead
                // of crawling toward it
                double want = std::min((threshold1 - d) * 1.25, budget);
                pos += g.dir * want;
                budget -= want;
                d = querySceneSdf(scene, pos, kInf, stats);
            }
            alive = d >= threshold1;
            if (alive && length(pos - probe.restingPos) > 1e-12) ++report.relocated;
        }
        if (!alive) {
            ++report.dead;
            probe.alive = false;
            probe.lastPos = prev;
            probe.pos = pos;
            continue;
        }
        probe.alive = true;
        probe.lastPos = prev;
        probe.pos = pos;
        bool hadHistory = probe.lastUpdateFrame >= 0 && !probe.rejectHistory;
        if (length(pos - prev) > threshold2) {
            probe.rejectHistory = true;
            if (hadHistory) ++report.rejected;
        }
    }
    return report;
}

struct ProbeRef {
    int cascade = 0;
    int index = 0;
    bool operator==(const ProbeRef& o) const = default;
};

// Budgeted update scheduling. Priority favors near, camera-facing, stale and
// history-rejected probes; probes past twice the fair round-robin period are
// force-included (oldest first) so nothing starves.
inline std::vector<ProbeRef> selectProbesForUpdate(const std::vector<CascadeVolume>& cascades,
                                                   const Vec3& cameraPos,
                                                   const Vec3& cameraForward, int budget,
                                                   int frameIndex) {
    struct Candidate {
        ProbeRef ref;
        double priority;
        int staleness;
        bool forced;
    };
    std::vector<Candidate> cands;
    int total = 0;
    for (size_t ci = 0; ci < cascades.size(); ++ci) total += cascades[ci].probeCount();
    if (total == 0 || budget <= 0) return {};
    int period = (total + budget - 1) / budget;
    // forcing at one fair period keeps the worst-case gap under two periods even
    // when the priority term persistently favors other probes
    int forceAge = period;

    for (size_t ci = 0; ci < cascades.size(); ++ci) {
        const CascadeVolume& c = cascades[ci];
        for (int i = 0; i < c.probeCount(); ++i) {
            const Probe& p = c.probes[i];
            double dist = length(p.pos - cameraPos);
            int staleness = frameIndex - p.lastUpdateFrame;
            double angular = 0.25;
            if (dist > 1e-9)
                angular += 0.75 * std::max(0.0, dot((p.pos - cameraPos) / dist, cameraForward));
            double priority = (1.0 / (1.0 + dist / c.spacing)) * angular * staleness;
            if (p.rejectHistory) priority *= 4.0;
            cands.push_back({{static_cast<int>(ci), i}, priority, staleness,
                             staleness >= forceAge});
        }
    }
    std::stable_sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
        if (a.forced != b.forced) return a.forced;
        if (a.forced) return a.staleness > b.staleness;
        return a.priority > b.priority;
    });
    size_t n = std::min<size_t>(budget, cands.size());
    std::vector<ProbeRef> out;
    out.reserve(n);
    for (size_t i = 0; i < n; ++i) out.push_back(cands[i].ref);
    return out;
}

struct StencilEntry {
    ProbeRef ref;
    double weight = 0;
};

struct InterpolationStencil {
    std::array<StencilEntry, 8> entries{};
    int count = 0;
    bool crossCascade = false;
    bool skyFallback = false;
    bool usedMvc = false;

    double weightSum() const {
        double s = 0;
        for (int i = 0; i < count; ++i) s += entries[i].weight;
        return s;
    }
};

// Eight-probe interpolation stencil for a point. Uses the finest cascade whose
// grid cell contains the point. Weights are trilinear in the resting grid; when
// relocation warped the cell noticeably, or the cell sits on a boundary toward a
// coarser cascade, mean value coordinates of the relocated corners take over.
// Dead probes get weight zero and the rest renormalize.
inline InterpolationStencil interpolationStencil(const std::vector<CascadeVolume>& cascades,
                                                 const Vec3& point,
                                                 double mvcRelocationFrac = 0.25) {
    InterpolationStencil st;

    int chosen = -1;
    int cell[3] = {0, 0, 0};
    int containingCount = 0;
    for (size_t ci = 0; ci < cascades.size(); ++ci) {
        const CascadeVolume& c = cascades[ci];
        if (c.probeCount() == 0) continue;
        Vec3 f = (point - c.origin) / c.spacing;
        int ix = static_cast<int>(std::floor(f.x));
        int iy = static_cast<int>(std::floor(f.y));
        int iz = static_cast<int>(std::floor(f.z));
        bool inside = ix >= 0 && ix + 1 < c.resX && iy >= 0 && iy + 1 < c.resY && iz >= 0 &&
                      iz + 1 < c.resZ;
        if (!inside) continue;
        ++containingCount;
        if (chosen < 0 || c.spacing < cascades[chosen].spacing) {
            chosen = static_cast<int>(ci);
            cell[0] = ix;
            cell[1] = iy;
            cell[2] = iz;
        }
    }
    bool insideCoarser = containingCount > 1;
    if (chosen < 0) {
        st.skyFallback = true;
        st.crossCascade = true;
        return st;
    }

    const CascadeVolume& c = cascades[chosen];
    Vec3 f = (point - c.origin) / c.spacing;
    double tx = f.x - cell[0], ty = f.y - cell[1], tz = f.z - cell[2];

    std::array<Vec3, 8> corners;
    std::array<int, 8> probeIdx;
    double maxDisp = 0;
    for (int k = 0; k < 8; ++k) {
        int ix = cell[0] + (k & 1), iy = cell[1] + ((k >> 1) & 1), iz = cell[2] + ((k >> 2) & 1);
        int pi = c.index(ix, iy, iz);
        probeIdx[k] = pi;
        corners[k] = c.probes[pi].pos;
        maxDisp = std::max(maxDisp, length(c.probes[pi].pos - c.probes[pi].restingPos));
    }

    bool boundaryCell = insideCoarser &&
                        (cell[0] == 0 || cell[0] + 2 == c.resX || cell[1] == 0 ||
                         cell[1] + 2 == c.resY || cell[2] == 0 || cell[2] + 2 == c.resZ);
    st.crossCascade = boundaryCell;

    std::array<double, 8> w;
    bool wantMvc = maxDisp > mvcRelocationFrac * c.spacing || boundaryCell;
    bool haveMvc = false;
    if (wantMvc) {
        haveMvc = mvcWeightsHex(corners, point, w);
        if (haveMvc) {
            for (double& wi : w) wi = std::max(0.0, wi);  // convexity for shading
            st.usedMvc = true;
        }
    }
    if (!haveMvc) {
        for (int k = 0; k < 8; ++k) {
            double wx = (k & 1) ? tx : 1 - tx;
            double wy = ((k >> 1) & 1) ? ty : 1 - ty;
            double wz = ((k >> 2) & 1) ? tz : 1 - tz;
            w[k] = wx * wy * wz;
        }
    }

    double sum = 0;
    for (int k = 0; k < 8; ++k) {
        if (!c.probes[probeIdx[k]].alive) w[k] = 0;
        sum += w[k];
    }
    if (sum <= 1e-12) {
        st.skyFallback = true;
        return st;
    }
    for (int k = 0; k < 8; ++k) {
        st.entries[k] = {{chosen, probeIdx[k]}, w[k] / sum};
    }
    st.count = 8;
    return st;
}

}  // namespace sdfgi
