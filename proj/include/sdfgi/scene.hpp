#pragma once

#include <cstdint>
#include <vector>

#if defined(__AVX512F__)
#include <immintrin.h>
#endif

#include "sdfgi/primitives.hpp"

namespace sdfgi {

// Mergeable per-thread instrumentation; every query/trace entry point takes an
// optional pointer to one of these.
struct TraceStats {
    uint64_t sdfQueries = 0;
    uint64_t clustersVisited = 0;
    uint64_t clustersSkipped = 0;
    uint64_t primitiveEvals = 0;
    uint64_t traceSteps = 0;
    uint64_t sphereTraces = 0;
    uint64_t shadowTraces = 0;
    uint64_t visibilityTraces = 0;

    void merge(const TraceStats& o) {
        sdfQueries += o.sdfQueries;
        clustersVisited += o.clustersVisited;
        clustersSkipped += o.clustersSkipped;
        primitiveEvals += o.primitiveEvals;
        traceSteps += o.traceSteps;
        sphereTraces += o.sphereTraces;
        shadowTraces += o.shadowTraces;
        visibilityTraces += o.visibilityTraces;
    }
};

struct Cluster {
    Aabb aabb;                    // tight union of member surface bounds
    Aabb cullAabb;                // aabb inflated by a safety margin, used for skipping
    Vec3 centroid;
    std::vector<int> members;     // indices into ActiveScene::primitives
    std::vector<int> memberIds;   // stable primitive ids
    int lodTier = 0;
    bool unbounded = false;       // contains a plane; never skipped, never merged
};

// Flat copy of the cluster cull data, laid out so the skip loop streams through
// a few contiguous arrays instead of chasing per-cluster vectors.
struct QueryAccel {
    int clusterCount = 0;
    std::vector<double> lox, loy, loz, hix, hiy, hiz;
    std::vector<uint8_t> unbounded;
    std::vector<uint8_t> unboundedMask;  // one bitmask per 8-cluster block
    std::vector<int> memberStart;  // clusterCount + 1 prefix offsets
    std::vector<int> memberIdx;

    void build(const std::vector<Cluster>& clusters) {
        clusterCount = static_cast<int>(clusters.size());
        int padded = (clusterCount + 7) & ~7;  // pad to vector width with far boxes
        lox.assign(padded, kInf);
        loy.assign(padded, kInf);
        loz.assign(padded, kInf);
        hix.assign(padded, kInf);
        hiy.assign(padded, kInf);
        hiz.assign(padded, kInf);
        unbounded.assign(padded, 0);
        memberStart.assign(1, 0);
        memberIdx.clear();
        for (int c = 0; c < clusterCount; ++c) {
            lox[c] = clusters[c].cullAabb.lo.x;
            loy[c] = clusters[c].cullAabb.lo.y;
            loz[c] = clusters[c].cullAabb.lo.z;
            hix[c] = clusters[c].cullAabb.hi.x;
            hiy[c] = clusters[c].cullAabb.hi.y;
            hiz[c] = clusters[c].cullAabb.hi.z;
            unbounded[c] = clusters[c].unbounded ? 1 : 0;
            memberIdx.insert(memberIdx.end(), clusters[c].members.begin(),
                             clusters[c].members.end());
            memberStart.push_back(static_cast<int>(memberIdx.size()));
        }
        unboundedMask.assign(padded / 8, 0);
        for (int c = 0; c < clusterCount; ++c)
            if (unbounded[c]) unboundedMask[c >> 3] |= static_cast<uint8_t>(1u << (c & 7));
    }
};

struct ActiveScene {
    std::vector<SdfPrimitive> primitives;
    std::vector<Cluster> clusters;
    std::vector<Light> lights;
    Vec3 sky{0, 0, 0};
    int frameIndex = 0;
    QueryAccel accel;

    void finalize() { accel.build(clusters); }

    int primIndexById(int id) const {
        for (size_t i = 0; i < primitives.size(); ++i)
            if (primitives[i].id == id) return static_cast<int>(i);
        return -1;
    }
};

// Margin added to cluster bounds before the skip test. Distances are computed in
// doubles, so a fixed 1e-9 dwarfs rounding error at scene scale and keeps the
// culled query exactly equal to the naive minimum.
constexpr double kClusterCullMargin = 1e-9;

inline std::vector<Cluster> buildClusters(const std::vector<SdfPrimitive>& prims,
                                          int maxPerCluster, double mergeRadius) {
    struct Work {
        Aabb aabb;
        Vec3 centroid;
        std::vector<int> members;
        bool unbounded;
        bool alive = true;
    };
    std::vector<Work> work;
    work.reserve(prims.size());
    for (size_t i = 0; i < prims.size(); ++i) {
        Aabb b = primitiveAabb(prims[i]);
        bool unbounded = prims[i].kind == PrimitiveKind::Plane;
        Vec3 c = unbounded ? prims[i].transform.translation : b.center();
        work.push_back({b, c, {static_cast<int>(i)}, unbounded});
    }

    // Greedy agglomeration: repeatedly merge the admissible pair whose combined
    // box grows total surface area the least.
    while (true) {
        int bestA = -1, bestB = -1;
        double bestCost = kInf;
        for (size_t a = 0; a < work.size(); ++a) {
            if (!work[a].alive || work[a].unbounded) continue;
            for (size_t b = a + 1; b < work.size(); ++b) {
                if (!work[b].alive || work[b].unbounded) continue;
                if (static_cast<int>(work[a].members.size() + work[b].members.size()) >
                    maxPerCluster)
                    continue;
                if (length(work[a].centroid - work[b].centroid) > mergeRadius) continue;
                Aabb u = merged(work[a].aabb, work[b].aabb);
                double cost =
                    u.surfaceArea() - work[a].aabb.surfaceArea() - work[b].aabb.surfaceArea();
                if (cost < bestCost) {
                    bestCost = cost;
                    bestA = static_cast<int>(a);
                    bestB = static_cast<int>(b);
                }
            }
        }
        if (bestA < 0) break;
        Work& a = work[bestA];
        Work& b = work[bestB];
        a.aabb = merged(a.aabb, b.aabb);
        a.members.insert(a.members.end(), b.members.begin(), b.members.end());
        a.centroid = a.aabb.center();
        b.alive = false;
    }

    std::vector<Cluster> out;
    for (auto& w : work) {
        if (!w.alive) continue;
        Cluster c;
        c.aabb = w.aabb;
        c.cullAabb = w.aabb.inflated(kClusterCullMargin);
        c.centroid = w.centroid;
        c.members = w.members;
        c.unbounded = w.unbounded;
        int tier = 0;
        for (int idx : w.members) {
            c.memberIds.push_back(prims[idx].id);
            tier = std::max(tier, prims[idx].lodTier);
        }
        c.lodTier = tier;
        out.push_back(std::move(c));
    }
    return out;
}

struct ClusterParams {
    int maxPerCluster = 8;
    double mergeRadius = 10.0;
};

// Distance-based culling and LOD: tier-0 primitives always survive; a tier>=1
// primitive is dropped once the camera is farther from its bounds than the
// threshold for its tier. Clusters are rebuilt over the survivors.
inline ActiveScene cullAndLod(const std::vector<SdfPrimitive>& all, const Vec3& cameraPos,
                              const std::vector<double>& lodDistances,
                              const ClusterParams& params = {}) {
    ActiveScene scene;
    for (const auto& prim : all) {
        if (prim.lodTier >= 1 && !lodDistances.empty()) {
            size_t idx = std::min(static_cast<size_t>(prim.lodTier - 1), lodDistances.size() - 1);
            if (primitiveAabb(prim).distance(cameraPos) > lodDistances[idx]) continue;
        }
        scene.primitives.push_back(prim);
    }
    if (!scene.primitives.empty())
        scene.clusters = buildClusters(scene.primitives, params.maxPerCluster, params.mergeRadius);
    scene.finalize();
    return scene;
}

// Cluster-culled scene SDF. Walks clusters, skipping any whose bounding box is
// already farther than the running minimum D (seeded by initD). A cluster whose
// box contains the point is never skipped: its interior depth is unknown, and
// once D goes negative an overlapping member could still be deeper. Whenever
// the true minimum over all primitives is below initD the result is exactly
// that minimum; otherwise initD is returned, which is still a lower bound on
// the true distance and therefore safe to step by.
namespace detail {

template <bool WithStats>
inline double queryCore(const ActiveScene& scene, const Vec3& p, double initD,
                        TraceStats* stats, int* ownerIndex) {
    double d = initD;
    int owner = -1;
    if constexpr (WithStats) ++stats->sdfQueries;
    const QueryAccel& a = scene.accel;
    if (a.clusterCount == static_cast<int>(scene.clusters.size()) && a.clusterCount > 0) {
        const uint8_t* unbounded = a.unbounded.data();
        const int* memberStart = a.memberStart.data();
        const int* memberIdx = a.memberIdx.data();
        const SdfPrimitive* prims = scene.primitives.data();
        int n = a.clusterCount;

        auto visitCluster = [&](int c, double boxSq) {
            // the batch test used the entry value of d; recheck against the
            // current minimum before paying for member evaluations
            if (!unbounded[c] && (d > 0 ? boxSq >= d * d : boxSq > 0)) {
                if constexpr (WithStats) ++stats->clustersSkipped;
                return;
            }
            int end = memberStart[c + 1];
            if constexpr (WithStats) {
                ++stats->clustersVisited;
                stats->primitiveEvals += end - memberStart[c];
            }
            for (int m = memberStart[c]; m < end; ++m) {
                int idx = memberIdx[m];
                double pd = evalPrimitive(prims[idx], p);
                if (pd < d) {
                    d = pd;
                    owner = idx;
                }
            }
        };

#if defined(__AVX512F__)
        __m512d px = _mm512_set1_pd(p.x);
        __m512d py = _mm512_set1_pd(p.y);
        __m512d pz = _mm512_set1_pd(p.z);
        __m512d zero = _mm512_setzero_pd();
        for (int base = 0; base < n; base += 8) {
            __m512d dx = _mm512_max_pd(
                _mm512_max_pd(_mm512_sub_pd(_mm512_loadu_pd(a.lox.data() + base), px),
                              _mm512_sub_pd(px, _mm512_loadu_pd(a.hix.data() + base))),
                zero);
            __m512d dy = _mm512_max_pd(
                _mm512_max_pd(_mm512_sub_pd(_mm512_loadu_pd(a.loy.data() + base), py),
                              _mm512_sub_pd(py, _mm512_loadu_pd(a.hiy.data() + base))),
                zero);
            __m512d dz = _mm512_max_pd(
                _mm512_max_pd(_mm512_sub_pd(_mm512_loadu_pd(a.loz.data() + base), pz),
                              _mm512_sub_pd(pz, _mm512_loadu_pd(a.hiz.data() + base))),
                zero);
            __m512d boxSq = _mm512_fmadd_pd(
                dz, dz, _mm512_fmadd_pd(dy, dy, _mm512_mul_pd(dx, dx)));
            __mmask8 visit;
            if (d > 0)
                visit = _mm512_cmp_pd_mask(boxSq, _mm512_set1_pd(d * d), _CMP_LT_OQ);
            else
                visit = _mm512_cmp_pd_mask(boxSq, zero, _CMP_LE_OQ);
            int lanes = std::min(8, n - base);
            visit |= a.unboundedMask[base >> 3];
            visit &= static_cast<__mmask8>((1u << lanes) - 1u);
            if (!visit) {
                if constexpr (WithStats) stats->clustersSkipped += lanes;
                continue;
            }
            alignas(64) double boxSqArr[8];
            _mm512_store_pd(boxSqArr, boxSq);
            unsigned bits = visit;
            if constexpr (WithStats)
                stats->clustersSkipped += lanes - __builtin_popcount(bits);
            while (bits) {
                int i = __builtin_ctz(bits);
                bits &= bits - 1;
                visitCluster(base + i, boxSqArr[i]);
            }
        }
#else
        for (int c = 0; c < n; ++c) {
            double dx = std::max(std::max(a.lox[c] - p.x, p.x - a.hix[c]), 0.0);
            double dy = std::max(std::max(a.loy[c] - p.y, p.y - a.hiy[c]), 0.0);
            double dz = std::max(std::max(a.loz[c] - p.z, p.z - a.hiz[c]), 0.0);
            double boxSq = dx * dx + dy * dy + dz * dz;
            if (!unbounded[c] && (d > 0 ? boxSq >= d * d : boxSq > 0)) {
                if constexpr (WithStats) ++stats->clustersSkipped;
                continue;
            }
            visitCluster(c, boxSq);
        }
#endif
        if (ownerIndex) *ownerIndex = owner;
        return d;
    }
    for (const Cluster& c : scene.clusters) {
        if (!c.unbounded) {
            double boxSq = c.cullAabb.distanceSq(p);
            bool skip = d > 0 ? boxSq >= d * d : boxSq > 0;
            if (skip) {
                if constexpr (WithStats) ++stats->clustersSkipped;
                continue;
            }
        }
        if constexpr (WithStats) {
            ++stats->clustersVisited;
            stats->primitiveEvals += c.members.size();
        }
        for (int idx : c.members) {
            double pd = evalPrimitive(scene.primitives[idx], p);
            if (pd < d) {
                d = pd;
                owner = idx;
            }
        }
    }
    if (ownerIndex) *ownerIndex = owner;
    return d;
}

}  // namespace detail

inline double querySceneSdf(const ActiveScene& scene, const Vec3& p, double initD = kInf,
                            TraceStats* stats = nullptr, int* ownerIndex = nullptr) {
    return stats ? detail::queryCore<true>(scene, p, initD, stats, ownerIndex)
                 : detail::queryCore<false>(scene, p, initD, nullptr, ownerIndex);
}

// Reference minimum over every primitive, no culling. Oracle for the cluster
// query and the "naive" strategy in benchmarks.
inline double querySceneSdfNaive(const ActiveScene& scene, const Vec3& p,
                                 int* ownerIndex = nullptr) {
    double d = kInf;
    int owner = -1;
    for (size_t i = 0; i < scene.primitives.size(); ++i) {
        double pd = evalPrimitive(scene.primitives[i], p);
        if (pd < d) {
            d = pd;
            owner = static_cast<int>(i);
        }
    }
    if (ownerIndex) *ownerIndex = owner;
    return d;
}

// Central-difference gradient of the scene SDF.
inline GradientResult sceneGradient(const ActiveScene& scene, const Vec3& p, double h = 1e-3,
                                    TraceStats* stats = nullptr) {
    Vec3 g{querySceneSdf(scene, {p.x + h, p.y, p.z}, kInf, stats) -
               querySceneSdf(scene, {p.x - h, p.y, p.z}, kInf, stats),
           querySceneSdf(scene, {p.x, p.y + h, p.z}, kInf, stats) -
               querySceneSdf(scene, {p.x, p.y - h, p.z}, kInf, stats),
           querySceneSdf(scene, {p.x, p.y, p.z + h}, kInf, stats) -
               querySceneSdf(scene, {p.x, p.y, p.z - h}, kInf, stats)};
    double n = length(g);
    if (n < 1e-6 * 2 * h) return {{1, 0, 0}, true};
    return {g / n, false};
}

enum class MissReason { None, TMax, StepLimit };

struct Hit {
    bool converged = false;
    MissReason miss = MissReason::None;
    double t = 0;
    Vec3 position;
    Vec3 normal{0, 0, 1};
    int primitiveIndex = -1;
    int primitiveId = -1;
};

// Sphere tracing with consecutive-query seeding: the SDF at the next sample can
// exceed the previous value by at most the step length, so 2 * lastD is a valid
// initial bound and lets the query skip most clusters near surfaces. The owner
// primitive is resolved only at convergence to keep the march lean. Callers
// whose ray starts a known distance from geometry (secondary rays leaving a
// surface) pass that bound as startBound to seed the first query too.
inline Hit sphereTrace(const ActiveScene& scene, const Vec3& origin, const Vec3& dir, double tMax,
                       double surfaceEpsilon = 1e-3, int maxSteps = 128,
                       TraceStats* stats = nullptr, double startBound = kInf) {
    if (stats) ++stats->sphereTraces;
    Hit hit;
    double t = 0;
    double lastD = startBound * 0.5;
    for (int step = 0; step < maxSteps; ++step) {
        if (stats) ++stats->traceSteps;
        Vec3 p = origin + dir * t;
        double d = querySceneSdf(scene, p, 2 * lastD, stats);
        if (d < surfaceEpsilon) {
            // polish: keep advancing by the (now tiny) distance so oblique hits
            // land on the surface instead of epsilon short of it. d is the exact
            // minimum here, so a hair above it re-finds the owner cheaply.
            int owner = -1;
            d = querySceneSdf(scene, p, d + 1e-9, stats, &owner);
            for (int i = 0; i < 8 && std::fabs(d) > 0.25 * surfaceEpsilon; ++i) {
                t += d;
                p = origin + dir * t;
                int o2 = -1;
                d = querySceneSdf(scene, p, 2 * std::fabs(d) + 1e-9, stats, &o2);
                if (o2 >= 0) owner = o2;
            }
            hit.converged = true;
            hit.t = t;
            hit.position = p;
            hit.primitiveIndex = owner;
            if (owner >= 0) {
                hit.primitiveId = scene.primitives[owner].id;
                hit.normal = evalGradient(scene.primitives[owner], p);
            }
            return hit;
        }
        // the rest of the segment fits inside the empty sphere: no hit possible
        if (d >= tMax - t) {
            hit.miss = MissReason::TMax;
            return hit;
        }
        t += d;
        lastD = d;
    }
    hit.miss = MissReason::StepLimit;
    return hit;
}

// Binary occlusion test along a segment: cheapest possible march, no owner or
// normal resolution. True when geometry blocks the segment. Ends early once the
// remaining segment fits inside the current empty sphere.
inline bool anyHit(const ActiveScene& scene, const Vec3& origin, const Vec3& dir, double tMax,
                   double surfaceEpsilon = 1e-3, int maxSteps = 128,
                   TraceStats* stats = nullptr, double startBound = kInf) {
    if (stats) ++stats->sphereTraces;
    double t = 0;
    double lastD = startBound * 0.5;
    for (int step = 0; step < maxSteps; ++step) {
        if (stats) ++stats->traceSteps;
        double d = querySceneSdf(scene, origin + dir * t, 2 * lastD, stats);
        if (d < surfaceEpsilon) return true;
        if (d >= tMax - t) return false;
        t += d;
        lastD = d;
    }
    return true;  // crawled out of steps: treat as blocked
}

// Penumbra shadow march: visibility = min over the ray of clamp(k*d/t, 0, 1).
// Returns 1 for a clear segment, 0 once the ray enters geometry.
inline double softShadowTrace(const ActiveScene& scene, const Vec3& origin, const Vec3& dir,
                              double tMin, double tMax, double k,
                              TraceStats* stats = nullptr, int maxSteps = 256,
                              double minStep = 5e-4) {
    if (stats) ++stats->shadowTraces;
    double v = 1.0;
    double t = tMin;
    double lastD = kInf;
    for (int step = 0; step < maxSteps && t < tMax; ++step) {
        if (stats) ++stats->traceSteps;
        double d = querySceneSdf(scene, origin + dir * t, lastD == kInf ? kInf : 2 * lastD, stats);
        v = std::min(v, clamp01(k * d / t));
        if (v < 1e-3) return 0.0;
        t += std::max(d, minStep);
        lastD = std::max(d, minStep);
    }
    return v;
}

}  // namespace sdfgi
