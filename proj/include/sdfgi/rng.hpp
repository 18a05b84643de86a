#pragma once

#include <cstdint>

#include "sdfgi/vec.hpp"

namespace sdfgi {

// splitmix64 finalizer; the basis of all counter-based randomness here.
inline uint64_t hashU64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e9b5ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline uint64_t hashCombine(uint64_t a, uint64_t b) { return hashU64(a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2))); }

// Stateless stream keyed by an arbitrary tuple of identifiers. Two streams with
// different keys are independent; the same key always replays the same sequence,
// which keeps every renderer stage reproducible regardless of thread count.
class Rng {
public:
    Rng() : state_(0) {}
    explicit Rng(uint64_t key) : state_(hashU64(key)) {}
    Rng(uint64_t a, uint64_t b) : Rng(hashCombine(a, b)) {}
    Rng(uint64_t a, uint64_t b, uint64_t c) : Rng(hashCombine(hashCombine(a, b), c)) {}
    Rng(uint64_t a, uint64_t b, uint64_t c, uint64_t d)
        : Rng(hashCombine(hashCombine(hashCombine(a, b), c), d)) {}

    uint64_t nextU64() {
        state_ += 0x9e3779b97f4a7c15ull;
        uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e9b5ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Uniform in [0,1).
    double uniform() { return (nextU64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    uint32_t nextU32(uint32_t bound) { return static_cast<uint32_t>(nextU64() % bound); }

private:
    uint64_t state_;
};

inline Vec3 uniformSphereDir(Rng& rng) {
    double z = rng.uniform(-1.0, 1.0);
    double phi = rng.uniform(0.0, 2.0 * kPi);
    double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    return {r * std::cos(phi), r * std::sin(phi), z};
}

// Cosine-weighted hemisphere direction around the unit normal n (pdf = cos/pi).
inline Vec3 cosineHemisphereDir(Rng& rng, const Vec3& n) {
    double u1 = rng.uniform();
    double u2 = rng.uniform();
    double r = std::sqrt(u1);
    double phi = 2.0 * kPi * u2;
    double lx = r * std::cos(phi);
    double ly = r * std::sin(phi);
    double lz = std::sqrt(std::max(0.0, 1.0 - u1));
    Vec3 t, b;
    orthonormalBasis(n, t, b);
    return normalize(t * lx + b * ly + n * lz);
}

// Uniform random rotation (Shoemake's subgroup algorithm via random quaternion).
inline Mat3 randomRotation(Rng& rng) {
    double u1 = rng.uniform(), u2 = rng.uniform(), u3 = rng.uniform();
    double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
    double qx = a * std::sin(2 * kPi * u2);
    double qy = a * std::cos(2 * kPi * u2);
    double qz = b * std::sin(2 * kPi * u3);
    double qw = b * std::cos(2 * kPi * u3);
    Mat3 r;
    r.m[0][0] = 1 - 2 * (qy * qy + qz * qz);
    r.m[0][1] = 2 * (qx * qy - qz * qw);
    r.m[0][2] = 2 * (qx * qz + qy * qw);
    r.m[1][0] = 2 * (qx * qy + qz * qw);
    r.m[1][1] = 1 - 2 * (qx * qx + qz * qz);
    r.m[1][2] = 2 * (qy * qz - qx * qw);
    r.m[2][0] = 2 * (qx * qz - qy * qw);
    r.m[2][1] = 2 * (qy * qz + qx * qw);
    r.m[2][2] = 1 - 2 * (qx * qx + qy * qy);
    return r;
}

}  // namespace sdfgi
