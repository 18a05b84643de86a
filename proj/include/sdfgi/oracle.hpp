#pragma once

#include "sdfgi/camera.hpp"
#include "sdfgi/image.hpp"
#include "sdfgi/parallel.hpp"
#include "sdfgi/rng.hpp"
#include "sdfgi/scene.hpp"

namespace sdfgi {

// Unbiased path tracer over the same SDF scenes: the ground truth every GI
// comparison is measured against. Shares the geometry code with the realtime
// path (sphere-traced segments) so differences isolate the GI approximation.
namespace oracle {

struct Params {
    int spp = 256;
    int maxBounces = 8;
    uint64_t seed = 0;
    double surfaceEpsilon = 1e-3;
    int maxTraceSteps = 192;
    double tMax = 100.0;
};

// Branch-free scene SDF for small scenes: evaluates every primitive on every
// query (axis-aligned boxes through a vectorizable SoA pass, the rest through
// evalPrimitive) and returns the exact minimum. Identical surfaces to the
// cluster-culled query; constant cost per query with no skip-test branches to
// mispredict, which is what a path tracer's incoherent marching wants. Falls
// back to the culled query for larger scenes.
class FlatSdf {
public:
    explicit FlatSdf(const ActiveScene& scene, int flatLimit = 16) : scene_(&scene) {
        if (static_cast<int>(scene.primitives.size()) > flatLimit) return;
        flat_ = true;
        for (size_t i = 0; i < scene.primitives.size(); ++i) {
            const SdfPrimitive& prim = scene.primitives[i];
            if (prim.kind == PrimitiveKind::Box && prim.transform.rotation.isIdentity()) {
                cx_.push_back(prim.transform.translation.x);
                cy_.push_back(prim.transform.translation.y);
                cz_.push_back(prim.transform.translation.z);
                hx_.push_back(prim.size.x);
                hy_.push_back(prim.size.y);
                hz_.push_back(prim.size.z);
            } else {
                others_.push_back(static_cast<int>(i));
            }
        }
        nBoxes_ = static_cast<int>(cx_.size());
        while (cx_.size() % 8) {  // pad with boxes at infinity
            cx_.push_back(0);
            cy_.push_back(0);
            cz_.push_back(0);
            hx_.push_back(-kInf);
            hy_.push_back(-kInf);
            hz_.push_back(-kInf);
        }
    }

    const ActiveScene& scene() const { return *scene_; }

    double query(const Vec3& p, double initD = kInf, TraceStats* stats = nullptr) const {
        if (!flat_) return querySceneSdf(*scene_, p, initD, stats);
        if (stats) {
            ++stats->sdfQueries;
            stats->primitiveEvals += scene_->primitives.size();
        }
        double d = initD;
#if defined(__AVX512F__)
        __m512d px = _mm512_set1_pd(p.x);
        __m512d py = _mm512_set1_pd(p.y);
        __m512d pz = _mm512_set1_pd(p.z);
        __m512d zero = _mm512_setzero_pd();
        __m512d best = _mm512_set1_pd(d);
        for (size_t base = 0; base < cx_.size(); base += 8) {
            __m512d qx = _mm512_sub_pd(
                _mm512_abs_pd(_mm512_sub_pd(px, _mm512_loadu_pd(cx_.data() + base))),
                _mm512_loadu_pd(hx_.data() + base));
            __m512d qy = _mm512_sub_pd(
                _mm512_abs_pd(_mm512_sub_pd(py, _mm512_loadu_pd(cy_.data() + base))),
                _mm512_loadu_pd(hy_.data() + base));
            __m512d qz = _mm512_sub_pd(
                _mm512_abs_pd(_mm512_sub_pd(pz, _mm512_loadu_pd(cz_.data() + base))),
                _mm512_loadu_pd(hz_.data() + base));
            __m512d inside =
                _mm512_min_pd(_mm512_max_pd(qx, _mm512_max_pd(qy, qz)), zero);
            __m512d ox = _mm512_max_pd(qx, zero);
            __m512d oy = _mm512_max_pd(qy, zero);
            __m512d oz = _mm512_max_pd(qz, zero);
            __m512d outside = _mm512_sqrt_pd(_mm512_fmadd_pd(
                oz, oz, _mm512_fmadd_pd(oy, oy, _mm512_mul_pd(ox, ox))));
            best = _mm512_min_pd(best, _mm512_add_pd(outside, inside));
        }
        d = _mm512_reduce_min_pd(best);
#else
        for (int i = 0; i < nBoxes_; ++i) {
            double qx = std::fabs(p.x - cx_[i]) - hx_[i];
            double qy = std::fabs(p.y - cy_[i]) - hy_[i];
            double qz = std::fabs(p.z - cz_[i]) - hz_[i];
            double inside = std::min(std::max(qx, std::max(qy, qz)), 0.0);
            double ox = std::max(qx, 0.0), oy = std::max(qy, 0.0), oz = std::max(qz, 0.0);
            d = std::min(d, std::sqrt(ox * ox + oy * oy + oz * oz) + inside);
        }
#endif
        for (int idx : others_) d = std::min(d, evalPrimitive(scene_->primitives[idx], p));
        return d;
    }

    // Owner-resolving query; only called at convergence, plain scalar is fine.
    double queryOwner(const Vec3& p, int* owner, TraceStats* stats = nullptr) const {
        if (!flat_) return querySceneSdf(*scene_, p, kInf, stats, owner);
        return querySceneSdfNaive(*scene_, p, owner);
    }

    bool flat() const { return flat_; }

    // True when every primitive is a box, i.e. the packet query covers the
    // whole scene (rotated boxes go through the broadcast-matrix path).
    bool packetable() const {
        if (!flat_) return false;
        for (int idx : others_)
            if (scene_->primitives[idx].kind != PrimitiveKind::Box) return false;
        return true;
    }

#if defined(__AVX512F__)
    // Eight independent points at once, lane-major: loop primitives, broadcast
    // their parameters, keep the running minimum per lane.
    __m512d query8(__m512d px, __m512d py, __m512d pz) const {
        __m512d zero = _mm512_setzero_pd();
        __m512d best = _mm512_set1_pd(kInf);
        for (int b = 0; b < nBoxes_; ++b) {
            __m512d qx = _mm512_sub_pd(_mm512_abs_pd(_mm512_sub_pd(px, _mm512_set1_pd(cx_[b]))),
                                       _mm512_set1_pd(hx_[b]));
            __m512d qy = _mm512_sub_pd(_mm512_abs_pd(_mm512_sub_pd(py, _mm512_set1_pd(cy_[b]))),
                                       _mm512_set1_pd(hy_[b]));
            __m512d qz = _mm512_sub_pd(_mm512_abs_pd(_mm512_sub_pd(pz, _mm512_set1_pd(cz_[b]))),
                                       _mm512_set1_pd(hz_[b]));
            __m512d inside = _mm512_min_pd(_mm512_max_pd(qx, _mm512_max_pd(qy, qz)), zero);
            __m512d ox = _mm512_max_pd(qx, zero);
            __m512d oy = _mm512_max_pd(qy, zero);
            __m512d oz = _mm512_max_pd(qz, zero);
            __m512d o2 = _mm512_fmadd_pd(oz, oz, _mm512_fmadd_pd(oy, oy, _mm512_mul_pd(ox, ox)));
            best = _mm512_min_pd(best, _mm512_add_pd(fastSqrt(o2), inside));
        }
        for (int idx : others_) {
            const SdfPrimitive& prim = scene_->primitives[idx];
            const Mat3& r = prim.transform.rotation;
            __m512d tx = _mm512_sub_pd(px, _mm512_set1_pd(prim.transform.translation.x));
            __m512d ty = _mm512_sub_pd(py, _mm512_set1_pd(prim.transform.translation.y));
            __m512d tz = _mm512_sub_pd(pz, _mm512_set1_pd(prim.transform.translation.z));
            // transpose(R) * v, broadcast matrix
            __m512d lx = _mm512_fmadd_pd(
                tz, _mm512_set1_pd(r.m[2][0]),
                _mm512_fmadd_pd(ty, _mm512_set1_pd(r.m[1][0]),
                                _mm512_mul_pd(tx, _mm512_set1_pd(r.m[0][0]))));
            __m512d ly = _mm512_fmadd_pd(
                tz, _mm512_set1_pd(r.m[2][1]),
                _mm512_fmadd_pd(ty, _mm512_set1_pd(r.m[1][1]),
                                _mm512_mul_pd(tx, _mm512_set1_pd(r.m[0][1]))));
            __m512d lz = _mm512_fmadd_pd(
                tz, _mm512_set1_pd(r.m[2][2]),
                _mm512_fmadd_pd(ty, _mm512_set1_pd(r.m[1][2]),
                                _mm512_mul_pd(tx, _mm512_set1_pd(r.m[0][2]))));
            __m512d qx = _mm512_sub_pd(_mm512_abs_pd(lx), _mm512_set1_pd(prim.size.x));
            __m512d qy = _mm512_sub_pd(_mm512_abs_pd(ly), _mm512_set1_pd(prim.size.y));
            __m512d qz = _mm512_sub_pd(_mm512_abs_pd(lz), _mm512_set1_pd(prim.size.z));
            __m512d inside = _mm512_min_pd(_mm512_max_pd(qx, _mm512_max_pd(qy, qz)), zero);
            __m512d ox = _mm512_max_pd(qx, zero);
            __m512d oy = _mm512_max_pd(qy, zero);
            __m512d oz = _mm512_max_pd(qz, zero);
            __m512d o2 = _mm512_fmadd_pd(oz, oz, _mm512_fmadd_pd(oy, oy, _mm512_mul_pd(ox, ox)));
            best = _mm512_min_pd(best, _mm512_add_pd(fastSqrt(o2), inside));
        }
        return best;
    }

    // sqrt via rsqrt14 + one Newton step: ~7e-9 relative error, far below any
    // marching tolerance, at a fraction of vsqrtpd's latency and port pressure.
    static __m512d fastSqrt(__m512d x) {
        __m512d xc = _mm512_max_pd(x, _mm512_set1_pd(1e-300));
        __m512d y = _mm512_rsqrt14_pd(xc);
        __m512d half = _mm512_set1_pd(0.5), threeHalf = _mm512_set1_pd(1.5);
        __m512d y2 = _mm512_mul_pd(y, y);
        y = _mm512_mul_pd(y, _mm512_fnmadd_pd(_mm512_mul_pd(half, xc), y2, threeHalf));
        return _mm512_mul_pd(xc, y);
    }
#endif

private:
    const ActiveScene* scene_;
    bool flat_ = false;
    int nBoxes_ = 0;
    std::vector<double> cx_, cy_, cz_, hx_, hy_, hz_;
    std::vector<int> others_;
};

inline bool occluded(const FlatSdf& sdf, const Vec3& from, const Vec3& dir, double dist,
                     const Params& prm, TraceStats* stats, double startBound = kInf) {
    if (stats) ++stats->sphereTraces;
    double t = 0;
    double lastD = startBound * 0.5;
    for (int step = 0; step < prm.maxTraceSteps; ++step) {
        if (stats) ++stats->traceSteps;
        double d = sdf.query(from + dir * t, 2 * lastD, stats);
        if (d < prm.surfaceEpsilon) return true;
        if (d >= dist - t) return false;
        t += d;
        lastD = d;
    }
    return true;
}

// Seeded sphere tracing with a recede boost: while the field is opening up
// (d grew since the previous sample) the step doubles, guarded by the
// sphere-overlap criterion and redone plainly when the spheres separate, so
// no surface can be stepped over. Cuts the crawl when rays leave surfaces.
inline Hit segmentTrace(const FlatSdf& sdf, const Vec3& origin, const Vec3& dir, double tMax,
                        double eps, int maxSteps, TraceStats* stats,
                        double startBound = kInf) {
    if (stats) ++stats->sphereTraces;
    Hit hit;
    double t = 0;
    double prevD = kInf;
    if (stats) ++stats->traceSteps;
    double d = sdf.query(origin, startBound, stats);
    for (int step = 0; step < maxSteps; ++step) {
        if (d < eps) {
            Vec3 p = origin + dir * t;
            for (int i = 0; i < 8 && std::fabs(d) > 0.25 * eps; ++i) {
                t += d;
                p = origin + dir * t;
                d = sdf.query(p, 2 * std::fabs(d) + 1e-9, stats);
            }
            int owner = -1;
            sdf.queryOwner(p, &owner, stats);
            hit.converged = true;
            hit.t = t;
            hit.position = p;
            hit.primitiveIndex = owner;
            if (owner >= 0) {
                const ActiveScene& scene = sdf.scene();
                hit.primitiveId = scene.primitives[owner].id;
                hit.normal = evalGradient(scene.primitives[owner], p);
            }
            return hit;
        }
        if (d >= tMax - t) {
            hit.miss = MissReason::TMax;
            return hit;
        }
        double stepLen = d;
        double dNext;
        if (d > prevD) {
            stepLen = 2 * d;
            if (stats) ++stats->traceSteps;
            dNext = sdf.query(origin + dir * (t + stepLen), d + stepLen, stats);
            if (d + std::fabs(dNext) < stepLen) {
                stepLen = d;  // spheres separated: redo as a plain step
                if (stats) ++stats->traceSteps;
                dNext = sdf.query(origin + dir * (t + stepLen), 2 * d, stats);
            }
        } else {
            if (stats) ++stats->traceSteps;
            dNext = sdf.query(origin + dir * (t + stepLen), 2 * d, stats);
        }
        prevD = d;
        t += stepLen;
        d = dNext;
    }
    hit.miss = MissReason::StepLimit;
    return hit;
}

// Next-event estimation at a surface point: analytic lights with binary
// occlusion. Returns reflected radiance (albedo/pi already applied).
inline Vec3 directAt(const FlatSdf& sdf, const Vec3& pos, const Vec3& normal,
                     const Vec3& albedo, const Params& prm, TraceStats* stats) {
    Vec3 out{0, 0, 0};
    for (const Light& light : sdf.scene().lights) {
        Vec3 dir;
        double dist;
        Vec3 irradiance;
        if (light.kind == LightKind::Point) {
            Vec3 toLight = light.position - pos;
            double r2 = lengthSq(toLight);
            if (r2 < 1e-12) continue;
            dist = std::sqrt(r2);
            dir = toLight / dist;
            double cosTheta = dot(normal, dir);
            if (cosTheta <= 0) continue;
            irradiance = light.intensity * (cosTheta / r2);
        } else if (light.kind == LightKind::Directional) {
            dir = -light.direction;
            double cosTheta = dot(normal, dir);
            if (cosTheta <= 0) continue;
            irradiance = light.intensity * cosTheta;
            dist = prm.tMax;
        } else {
            continue;
        }
        double bias = 2.0 * prm.surfaceEpsilon / std::max(0.1, dot(normal, dir));
        if (dist - 2 * bias <= 0) continue;
        if (!occluded(sdf, pos + dir * bias, dir, dist - 2 * bias, prm, stats,
                      bias + prm.surfaceEpsilon))
            out += albedo / kPi * irradiance;
    }
    return out;
}

inline double continuationProbability(const ActiveScene& scene) {
    double rho = 0.05;
    for (const auto& p : scene.primitives) rho = std::max(rho, maxComponent(p.material.albedo));
    return std::min(rho, 0.95);
}

// Radiance arriving at `origin` from direction `dir`. The first vertex counts as
// bounce 1; Russian roulette starts after bounce 3 with the scene's max albedo
// as continuation probability.
inline Vec3 traceRadiance(const FlatSdf& sdf, Vec3 origin, Vec3 dir, int maxBounces, Rng& rng,
                          const Params& prm, TraceStats* stats, double firstBound = kInf) {
    const ActiveScene& scene = sdf.scene();
    Vec3 L{0, 0, 0};
    Vec3 beta{1, 1, 1};
    double contProb = continuationProbability(scene);
    double startBound = firstBound;
    for (int bounce = 1; bounce <= maxBounces; ++bounce) {
        Hit hit = segmentTrace(sdf, origin, dir, prm.tMax, prm.surfaceEpsilon,
                               prm.maxTraceSteps, stats, startBound);
        if (!hit.converged) {
            L += beta * scene.sky;
            break;
        }
        const Material& mat = scene.primitives[hit.primitiveIndex].material;
        L += beta * mat.emission;
        L += beta * directAt(sdf, hit.position, hit.normal, mat.albedo, prm, stats);
        if (bounce == maxBounces) break;
        if (bounce >= 3) {
            if (rng.uniform() >= contProb) break;
            beta = beta / contProb;
        }
        beta = beta * mat.albedo;  // cosine-importance sampling cancels cos/pi
        dir = cosineHemisphereDir(rng, hit.normal);
        origin = hit.position + hit.normal * (2.0 * prm.surfaceEpsilon);
        startBound = 3.0 * prm.surfaceEpsilon;
    }
    return L;
}

#if defined(__AVX512F__)
// Thirty-two path samples of one pixel traced together: four 8-lane packets
// whose segment and shadow marches interleave so their dependency chains
// overlap. All lanes leave the shared primary hit with their own RNG stream
// (identical streams to the scalar tracer, so per-lane decisions match it);
// divergent work (hit resolution, bounce sampling, roulette) runs scalar.
inline Vec3 tracePacketGroup(const FlatSdf& sdf, const Vec3& origin0, const Vec3& normal0,
                             std::array<Rng, 32>& rng, int samplesUsed, int maxBounces,
                             const Params& prm, TraceStats* stats) {
#ifndef SDFGI_PACKETS
#define SDFGI_PACKETS 4
#endif
    constexpr int P = SDFGI_PACKETS;
    const ActiveScene& scene = sdf.scene();
    double contProb = continuationProbability(scene);
    __m512d epsV = _mm512_set1_pd(prm.surfaceEpsilon);

    constexpr int N = P * 8;
    alignas(64) double ox[N], oy[N], oz[N], dx[N], dy[N], dz[N];
    Vec3 beta[N], L[N];
    Vec3 hitPos[N], hitNormal[N];
    const Material* hitMat[N] = {nullptr};
    uint8_t alive[P] = {};

    for (int s = 0; s < N; ++s) {
        if (s < samplesUsed) {
            Vec3 d = cosineHemisphereDir(rng[s], normal0);
            ox[s] = origin0.x; oy[s] = origin0.y; oz[s] = origin0.z;
            dx[s] = d.x; dy[s] = d.y; dz[s] = d.z;
            beta[s] = {1, 1, 1};
            L[s] = {0, 0, 0};
            alive[s >> 3] |= static_cast<uint8_t>(1u << (s & 7));
        } else {
            ox[s] = oy[s] = oz[s] = 0;
            dx[s] = 1; dy[s] = dz[s] = 0;
        }
    }

    auto anyAlive = [&] {
        uint8_t m = 0;
        for (int g = 0; g < P; ++g) m |= alive[g];
        return m != 0;
    };

    for (int bounce = 1; bounce <= maxBounces && anyAlive(); ++bounce) {
        // segment march, four packets round-robin
        __m512d vox[P], voy[P], voz[P], vdx[P], vdy[P], vdz[P], vt[P];
        __mmask8 marching[P];
        uint8_t converged[P];
        __m512d tmaxV = _mm512_set1_pd(prm.tMax);
        for (int g = 0; g < P; ++g) {
            vox[g] = _mm512_load_pd(ox + 8 * g);
            voy[g] = _mm512_load_pd(oy + 8 * g);
            voz[g] = _mm512_load_pd(oz + 8 * g);
            vdx[g] = _mm512_load_pd(dx + 8 * g);
            vdy[g] = _mm512_load_pd(dy + 8 * g);
            vdz[g] = _mm512_load_pd(dz + 8 * g);
            vt[g] = _mm512_setzero_pd();
            marching[g] = alive[g];
            converged[g] = 0;
            if (stats) stats->sphereTraces += __builtin_popcount(alive[g]);
        }
        for (int step = 0; step < prm.maxTraceSteps; ++step) {
            bool any = false;
            for (int g = 0; g < P; ++g) {
                if (!marching[g]) continue;
                any = true;
                __m512d px = _mm512_fmadd_pd(vdx[g], vt[g], vox[g]);
                __m512d py = _mm512_fmadd_pd(vdy[g], vt[g], voy[g]);
                __m512d pz = _mm512_fmadd_pd(vdz[g], vt[g], voz[g]);
                __m512d dist = sdf.query8(px, py, pz);
                if (stats) {
                    stats->traceSteps += __builtin_popcount(marching[g]);
                    stats->sdfQueries += __builtin_popcount(marching[g]);
                }
                __mmask8 conv = _mm512_mask_cmp_pd_mask(marching[g], dist, epsV, _CMP_LT_OQ);
                __m512d rem = _mm512_sub_pd(tmaxV, vt[g]);
                __mmask8 escaped = _mm512_mask_cmp_pd_mask(
                    static_cast<__mmask8>(marching[g] & ~conv), dist, rem, _CMP_GE_OQ);
                converged[g] |= conv;
                marching[g] = static_cast<__mmask8>(marching[g] & ~(conv | escaped));
                vt[g] = _mm512_mask_add_pd(vt[g], marching[g], vt[g], dist);
            }
            if (!any) break;
        }
        alignas(64) double tArr[N];
        for (int g = 0; g < P; ++g) {
            _mm512_store_pd(tArr + 8 * g, vt[g]);
            uint8_t escapedLanes = static_cast<uint8_t>(alive[g] & ~converged[g]);
            for (int i = 0; i < 8; ++i)
                if (escapedLanes & (1u << i)) L[8 * g + i] += beta[8 * g + i] * scene.sky;
            alive[g] = converged[g];
        }
        if (!anyAlive()) break;

        // scalar hit resolution per converged lane (polish + owner + normal)
        for (int s = 0; s < N; ++s) {
            if (!(alive[s >> 3] & (1u << (s & 7)))) continue;
            Vec3 o{ox[s], oy[s], oz[s]};
            Vec3 d{dx[s], dy[s], dz[s]};
            double t = tArr[s];
            Vec3 p = o + d * t;
            double sd = sdf.query(p, kInf, stats);
            for (int k = 0; k < 8 && std::fabs(sd) > 0.25 * prm.surfaceEpsilon; ++k) {
                t += sd;
                p = o + d * t;
                sd = sdf.query(p, kInf, stats);
            }
            int owner = -1;
            sdf.queryOwner(p, &owner, stats);
            if (owner < 0) {
                alive[s >> 3] &= static_cast<uint8_t>(~(1u << (s & 7)));
                continue;
            }
            hitPos[s] = p;
            hitNormal[s] = evalGradient(scene.primitives[owner], p);
            hitMat[s] = &scene.primitives[owner].material;
            L[s] += beta[s] * hitMat[s]->emission;
        }

        // next-event estimation: four masked shadow packets per light, interleaved
        for (const Light& light : scene.lights) {
            alignas(64) double sox[N], soy[N], soz[N], sdx[N], sdy[N], sdz[N], smax[N];
            Vec3 contrib[N];
            uint8_t want[P] = {};
            for (int s = 0; s < N; ++s) {
                sox[s] = soy[s] = soz[s] = 0;
                sdx[s] = 1; sdy[s] = sdz[s] = 0;
                smax[s] = 0;
                if (!(alive[s >> 3] & (1u << (s & 7)))) continue;
                Vec3 dir;
                double dist;
                Vec3 irradiance;
                if (light.kind == LightKind::Point) {
                    Vec3 toLight = light.position - hitPos[s];
                    double r2 = lengthSq(toLight);
                    if (r2 < 1e-12) continue;
                    dist = std::sqrt(r2);
                    dir = toLight / dist;
                    double cosTheta = dot(hitNormal[s], dir);
                    if (cosTheta <= 0) continue;
                    irradiance = light.intensity * (cosTheta / r2);
                } else if (light.kind == LightKind::Directional) {
                    dir = -light.direction;
                    double cosTheta = dot(hitNormal[s], dir);
                    if (cosTheta <= 0) continue;
                    irradiance = light.intensity * cosTheta;
                    dist = prm.tMax;
                } else {
                    continue;
                }
                double bias =
                    2.0 * prm.surfaceEpsilon / std::max(0.1, dot(hitNormal[s], dir));
                if (dist - 2 * bias <= 0) continue;
                Vec3 so = hitPos[s] + dir * bias;
                sox[s] = so.x; soy[s] = so.y; soz[s] = so.z;
                sdx[s] = dir.x; sdy[s] = dir.y; sdz[s] = dir.z;
                smax[s] = dist - 2 * bias;
                contrib[s] = beta[s] * (hitMat[s]->albedo / kPi) * irradiance;
                want[s >> 3] |= static_cast<uint8_t>(1u << (s & 7));
            }
            uint8_t anyWant = 0;
            for (int g = 0; g < P; ++g) anyWant |= want[g];
            if (!anyWant) continue;
            __m512d qox[P], qoy[P], qoz[P], qdx[P], qdy[P], qdz[P], qmax[P], qt[P];
            __mmask8 pending[P];
            uint8_t blocked[P];
            for (int g = 0; g < P; ++g) {
                qox[g] = _mm512_load_pd(sox + 8 * g);
                qoy[g] = _mm512_load_pd(soy + 8 * g);
                qoz[g] = _mm512_load_pd(soz + 8 * g);
                qdx[g] = _mm512_load_pd(sdx + 8 * g);
                qdy[g] = _mm512_load_pd(sdy + 8 * g);
                qdz[g] = _mm512_load_pd(sdz + 8 * g);
                qmax[g] = _mm512_load_pd(smax + 8 * g);
                qt[g] = _mm512_setzero_pd();
                pending[g] = want[g];
                blocked[g] = 0;
                if (stats) stats->shadowTraces += __builtin_popcount(want[g]);
            }
            for (int step = 0; step < prm.maxTraceSteps; ++step) {
                bool any = false;
                for (int g = 0; g < P; ++g) {
                    if (!pending[g]) continue;
                    any = true;
                    __m512d px = _mm512_fmadd_pd(qdx[g], qt[g], qox[g]);
                    __m512d py = _mm512_fmadd_pd(qdy[g], qt[g], qoy[g]);
                    __m512d pz = _mm512_fmadd_pd(qdz[g], qt[g], qoz[g]);
                    __m512d dist = sdf.query8(px, py, pz);
                    if (stats) {
                        stats->traceSteps += __builtin_popcount(pending[g]);
                        stats->sdfQueries += __builtin_popcount(pending[g]);
                    }
                    __mmask8 hitm =
                        _mm512_mask_cmp_pd_mask(pending[g], dist, epsV, _CMP_LT_OQ);
                    __m512d rem = _mm512_sub_pd(qmax[g], qt[g]);
                    __mmask8 clear = _mm512_mask_cmp_pd_mask(
                        static_cast<__mmask8>(pending[g] & ~hitm), dist, rem, _CMP_GE_OQ);
                    blocked[g] |= hitm;
                    pending[g] = static_cast<__mmask8>(pending[g] & ~(hitm | clear));
                    qt[g] = _mm512_mask_add_pd(qt[g], pending[g], qt[g], dist);
                }
                if (!any) break;
            }
            for (int g = 0; g < P; ++g) {
                blocked[g] |= pending[g];  // exhausted marches count as blocked
                for (int i = 0; i < 8; ++i)
                    if ((want[g] & (1u << i)) && !(blocked[g] & (1u << i)))
                        L[8 * g + i] += contrib[8 * g + i];
            }
        }

        if (bounce == maxBounces) break;

        // roulette and new directions, per lane
        for (int s = 0; s < N; ++s) {
            if (!(alive[s >> 3] & (1u << (s & 7)))) continue;
            if (bounce >= 3) {
                if (rng[s].uniform() >= contProb) {
                    alive[s >> 3] &= static_cast<uint8_t>(~(1u << (s & 7)));
                    continue;
                }
                beta[s] = beta[s] / contProb;
            }
            beta[s] = beta[s] * hitMat[s]->albedo;
            Vec3 nd = cosineHemisphereDir(rng[s], hitNormal[s]);
            Vec3 no = hitPos[s] + hitNormal[s] * (2.0 * prm.surfaceEpsilon);
            ox[s] = no.x; oy[s] = no.y; oz[s] = no.z;
            dx[s] = nd.x; dy[s] = nd.y; dz[s] = nd.z;
        }
    }

    Vec3 total{0, 0, 0};
    for (int s = 0; s < samplesUsed; ++s) total += L[s];
    return total;
}
#endif

// Per-pixel counter-based RNG streams keyed by (seed, pixel, sample): the result
// is identical for any thread count.
inline ImageRgb pathTraceImage(const ActiveScene& scene, const Camera& camera, int width,
                               int height, const Params& prm, TraceStats* stats = nullptr,
                               int threads = 1, ImageRgb* outDirect = nullptr) {
    ImageRgb img(width, height);
    if (outDirect) *outDirect = ImageRgb(width, height);
    FlatSdf sdf(scene);
    std::vector<TraceStats> chunkStats(std::max(1, threads));
    parallelFor(0, height, threads, [&](int64_t yy, int worker) {
        TraceStats* st = stats ? &chunkStats[worker] : nullptr;
        {
            int y = static_cast<int>(yy);
            for (int x = 0; x < width; ++x) {
                uint64_t pixelKey = static_cast<uint64_t>(y) * width + x;
                Vec3 dir = camera.rayDir(x, y, width, height);
                // the primary vertex is common to all samples of the pixel
                Hit hit = segmentTrace(sdf, camera.position, dir, prm.tMax,
                                       prm.surfaceEpsilon, prm.maxTraceSteps, st);
                if (!hit.converged) {
                    img.at(x, y) = scene.sky;
                    if (outDirect) outDirect->at(x, y) = scene.sky;
                    continue;
                }
                const Material& mat = scene.primitives[hit.primitiveIndex].material;
                Vec3 L = mat.emission +
                         directAt(sdf, hit.position, hit.normal, mat.albedo, prm, st);
                if (outDirect) outDirect->at(x, y) = L;
                if (prm.maxBounces > 1) {
                    Vec3 indirect{0, 0, 0};
                    Vec3 o = hit.position + hit.normal * (2.0 * prm.surfaceEpsilon);
#if defined(__AVX512F__)
                    if (sdf.packetable()) {
                        constexpr int kGroup = SDFGI_PACKETS * 8;
                        for (int s0 = 0; s0 < prm.spp; s0 += kGroup) {
                            int lanes = std::min(kGroup, prm.spp - s0);
                            std::array<Rng, 32> rngs{};
                            for (int k = 0; k < lanes; ++k)
                                rngs[k] = Rng(prm.seed, 0x9a7e5cull, pixelKey,
                                              static_cast<uint64_t>(s0 + k));
                            indirect += mat.albedo *
                                        tracePacketGroup(sdf, o, hit.normal, rngs, lanes,
                                                         prm.maxBounces - 1, prm, st);
                        }
                    } else
#endif
                    {
                        for (int s = 0; s < prm.spp; ++s) {
                            Rng rng(prm.seed, 0x9a7e5cull, pixelKey,
                                    static_cast<uint64_t>(s));
                            Vec3 d = cosineHemisphereDir(rng, hit.normal);
                            indirect += mat.albedo *
                                        traceRadiance(sdf, o, d, prm.maxBounces - 1, rng,
                                                      prm, st, 3.0 * prm.surfaceEpsilon);
                        }
                    }
                    L += indirect / prm.spp;
                }
                img.at(x, y) = L;
            }
        }
    });
    if (stats)
        for (auto& s : chunkStats) stats->merge(s);
    return img;
}

// Monte Carlo irradiance around `axis` at a free-space point (or a surface point
// with its normal): cosine-importance over the hemisphere, E = pi * mean(L).
inline Vec3 pathTraceIrradiance(const ActiveScene& scene, const Vec3& point, const Vec3& axis,
                                const Params& prm, TraceStats* stats = nullptr,
                                int threads = 1) {
    FlatSdf sdf(scene);
    std::vector<Vec3> partial(std::max(1, threads), Vec3{0, 0, 0});
    std::vector<TraceStats> chunkStats(std::max(1, threads));
    parallelFor(0, prm.spp, threads, [&](int64_t s, int worker) {
        TraceStats* st = stats ? &chunkStats[worker] : nullptr;
        Rng rng(prm.seed, 0x17a9d1ull, static_cast<uint64_t>(s));
        Vec3 d = cosineHemisphereDir(rng, axis);
        partial[worker] += traceRadiance(sdf, point, d, prm.maxBounces, rng, prm, st);
    });
    Vec3 sum{0, 0, 0};
    for (const Vec3& p : partial) sum += p;
    if (stats)
        for (auto& s : chunkStats) stats->merge(s);
    return sum * (kPi / prm.spp);
}

}  // namespace oracle
}  // namespace sdfgi
