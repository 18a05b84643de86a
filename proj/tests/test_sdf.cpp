#include <catch2/catch_amalgamated.hpp>

#include "sdfgi/primitives.hpp"
#include "sdfgi/rng.hpp"

using namespace sdfgi;

namespace {

SdfPrimitive makePrim(PrimitiveKind kind, Vec3 size, Vec3 pos = {0, 0, 0},
                      Mat3 rot = Mat3::identity()) {
    SdfPrimitive p;
    p.kind = kind;
    p.size = size;
    p.transform.translation = pos;
    p.transform.rotation = rot;
    return p;
}

// Independent oracle: min distance from p to a dense sampling of the box surface.
double boxSurfaceDistanceBruteForce(const Vec3& halfExt, const Vec3& p, int n = 400) {
    double best = kInf;
    auto consider = [&](const Vec3& s) { best = std::min(best, length(s - p)); };
    for (int i = 0; i <= n; ++i) {
        for (int j = 0; j <= n; ++j) {
            double u = -1.0 + 2.0 * i / n;
            double v = -1.0 + 2.0 * j / n;
            consider({halfExt.x * u, halfExt.y * v, halfExt.z});
            consider({halfExt.x * u, halfExt.y * v, -halfExt.z});
            consider({halfExt.x * u, halfExt.y, halfExt.z * v});
            consider({halfExt.x * u, -halfExt.y, halfExt.z * v});
            consider({halfExt.x, halfExt.y * u, halfExt.z * v});
            consider({-halfExt.x, halfExt.y * u, halfExt.z * v});
        }
    }
    return best;
}

Vec3 boxClosestSurfacePointBruteForce(const Vec3& halfExt, const Vec3& p, int n = 400) {
    double best = kInf;
    Vec3 bestPt;
    auto consider = [&](const Vec3& s) {
        double d = length(s - p);
        if (d < best) {
            best = d;
            bestPt = s;
        }
    };
    for (int i = 0; i <= n; ++i) {
        for (int j = 0; j <= n; ++j) {
            double u = -1.0 + 2.0 * i / n;
            double v = -1.0 + 2.0 * j / n;
            consider({halfExt.x * u, halfExt.y * v, halfExt.z});
            consider({halfExt.x * u, halfExt.y * v, -halfExt.z});
            consider({halfExt.x * u, halfExt.y, halfExt.z * v});
            consider({halfExt.x * u, -halfExt.y, halfExt.z * v});
            consider({halfExt.x, halfExt.y * u, halfExt.z * v});
            consider({-halfExt.x, halfExt.y * u, halfExt.z * v});
        }
    }
    return bestPt;
}

std::vector<SdfPrimitive> allKindsFixture() {
    Mat3 tilt = Mat3::fromAxisAngle({1, 2, 3}, 0.7);
    return {
        makePrim(PrimitiveKind::Sphere, {1, 0, 0}, {0.5, -0.2, 0.1}),
        makePrim(PrimitiveKind::Box, {1, 0.5, 2}, {-1, 0.3, 0}, tilt),
        makePrim(PrimitiveKind::Plane, {0, 0, 0}, {0, -1, 0}, Mat3::fromZTo({0, 1, 0})),
        makePrim(PrimitiveKind::Cylinder, {0.7, 1.2, 0}, {2, 0, -1}, tilt),
        makePrim(PrimitiveKind::Capsule, {0.4, 0.9, 0}, {0, 2, 1}, tilt),
    };
}

}  // namespace

TEST_CASE("sphere SDF matches the definition") {
    auto s = makePrim(PrimitiveKind::Sphere, {1, 0, 0});
    CHECK(evalPrimitive(s, {2, 0, 0}) == Catch::Approx(1.0));
    CHECK(evalPrimitive(s, {0, 0, 0}) == Catch::Approx(-1.0));
    CHECK(evalPrimitive(s, {0, 1, 0}) == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("box SDF matches brute-force surface distance") {
    auto b = makePrim(PrimitiveKind::Box, {1, 1, 1});
    double expected = boxSurfaceDistanceBruteForce({1, 1, 1}, {2, 2, 0});
    CHECK(evalPrimitive(b, {2, 2, 0}) == Catch::Approx(std::sqrt(2.0)).epsilon(1e-9));
    CHECK(evalPrimitive(b, {2, 2, 0}) == Catch::Approx(expected).margin(1e-2));

    // a couple of off-axis probes against the same oracle
    for (Vec3 p : {Vec3{1.7, 0.2, -0.4}, Vec3{-2.5, 1.3, 2.0}}) {
        double oracle = boxSurfaceDistanceBruteForce({1, 1, 1}, p);
        CHECK(evalPrimitive(b, p) == Catch::Approx(oracle).margin(1e-2));
    }
}

TEST_CASE("cylinder and capsule analytic distances") {
    auto cyl = makePrim(PrimitiveKind::Cylinder, {1, 1, 0});
    CHECK(evalPrimitive(cyl, {2, 0, 0}) == Catch::Approx(1.0));
    CHECK(evalPrimitive(cyl, {0, 0, 3}) == Catch::Approx(2.0));
    CHECK(evalPrimitive(cyl, {0, 0, 0}) == Catch::Approx(-1.0));

    auto cap = makePrim(PrimitiveKind::Capsule, {0.5, 1, 0});
    CHECK(evalPrimitive(cap, {0, 0, 2}) == Catch::Approx(0.5));
    CHECK(evalPrimitive(cap, {2, 0, 0}) == Catch::Approx(1.5));
    CHECK(evalPrimitive(cap, {0, 0, 0}) == Catch::Approx(-0.5));
}

TEST_CASE("plane is a half-space") {
    auto pl = makePrim(PrimitiveKind::Plane, {0, 0, 0}, {0, 0, 0}, Mat3::fromZTo({0, 1, 0}));
    CHECK(evalPrimitive(pl, {5, 2, -3}) == Catch::Approx(2.0));
    CHECK(evalPrimitive(pl, {0, -1, 0}) == Catch::Approx(-1.0));
}

TEST_CASE("SDF values are finite everywhere") {
    Rng rng(42);
    for (const auto& prim : allKindsFixture()) {
        for (int i = 0; i < 1000; ++i) {
            Vec3 p{rng.uniform(-20, 20), rng.uniform(-20, 20), rng.uniform(-20, 20)};
            CHECK(std::isfinite(evalPrimitive(prim, p)));
        }
    }
}

TEST_CASE("every primitive kind is 1-Lipschitz") {
    Rng rng(7);
    for (const auto& prim : allKindsFixture()) {
        Aabb region = primitiveAabb(prim);
        Vec3 c = prim.transform.translation;
        double r = prim.kind == PrimitiveKind::Plane ? 10.0 : 5 * length(region.extent());
        for (int i = 0; i < 10000; ++i) {
            Vec3 p = c + Vec3{rng.uniform(-r, r), rng.uniform(-r, r), rng.uniform(-r, r)};
            Vec3 q = c + Vec3{rng.uniform(-r, r), rng.uniform(-r, r), rng.uniform(-r, r)};
            double dp = evalPrimitive(prim, p);
            double dq = evalPrimitive(prim, q);
            REQUIRE(std::fabs(dp - dq) <= length(p - q) + 1e-6);
        }
    }
}

TEST_CASE("gradient examples") {
    auto s = makePrim(PrimitiveKind::Sphere, {1, 0, 0});
    Vec3 g = evalGradient(s, {2, 0, 0});
    CHECK(g.x == Catch::Approx(1.0).margin(1e-6));
    CHECK(std::fabs(g.y) < 1e-6);

    auto pl = makePrim(PrimitiveKind::Plane, {0, 0, 0}, {0, 0, 0}, Mat3::fromZTo({0, 1, 0}));
    for (Vec3 p : {Vec3{0, 3, 0}, Vec3{4, -2, 7}}) {
        Vec3 gp = evalGradient(pl, p);
        CHECK(dot(gp, {0, 1, 0}) == Catch::Approx(1.0).margin(1e-6));
    }

    // box corner direction agrees with brute-force closest surface point
    auto b = makePrim(PrimitiveKind::Box, {1, 1, 1});
    Vec3 gb = evalGradient(b, {2, 2, 0});
    Vec3 closest = boxClosestSurfacePointBruteForce({1, 1, 1}, {2, 2, 0});
    Vec3 expectedDir = normalize(Vec3{2, 2, 0} - closest);
    CHECK(dot(gb, expectedDir) == Catch::Approx(1.0).margin(1e-2));
    CHECK(gb.x == Catch::Approx(std::sqrt(2.0) / 2).margin(1e-2));
    CHECK(gb.y == Catch::Approx(std::sqrt(2.0) / 2).margin(1e-2));
}

TEST_CASE("gradient matches finer finite differences away from the medial axis") {
    Rng rng(11);
    for (const auto& prim : allKindsFixture()) {
        Vec3 c = prim.transform.translation;
        int checked = 0;
        for (int i = 0; i < 4000 && checked < 500; ++i) {
            Vec3 p = c + Vec3{rng.uniform(-4, 4), rng.uniform(-4, 4), rng.uniform(-4, 4)};
            if (std::fabs(evalPrimitive(prim, p)) <= 0.05) continue;
            auto coarse = evalGradientDetailed(prim, p, 1e-3);
            auto fine = evalGradientDetailed(prim, p, 1e-4);
            if (coarse.degenerate || fine.degenerate) continue;
            ++checked;
            REQUIRE(dot(coarse.dir, fine.dir) >= 1.0 - 1e-3);
        }
        REQUIRE(checked > 100);
    }
}

TEST_CASE("degenerate gradient at a medial axis is flagged") {
    auto s = makePrim(PrimitiveKind::Sphere, {1, 0, 0});
    auto g = evalGradientDetailed(s, {0, 0, 0});
    CHECK(g.degenerate);
    CHECK(length(g.dir) == Catch::Approx(1.0));
}

TEST_CASE("rigid-transform equivariance") {
    Rng rng(23);
    for (auto prim : allKindsFixture()) {
        for (int i = 0; i < 200; ++i) {
            Vec3 p{rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)};
            double before = evalPrimitive(prim, p);

            Mat3 extra = Mat3::fromAxisAngle({rng.uniform(-1, 1), rng.uniform(-1, 1),
                                              rng.uniform(-1, 1)},
                                             rng.uniform(0, kPi));
            Vec3 shift{rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)};

            SdfPrimitive moved = prim;
            moved.transform.rotation = extra * prim.transform.rotation;
            moved.transform.translation = extra * prim.transform.translation + shift;
            Vec3 movedP = extra * p + shift;

            REQUIRE(evalPrimitive(moved, movedP) == Catch::Approx(before).margin(1e-6));
        }
    }
}

TEST_CASE("primitive AABB bounds the surface") {
    Rng rng(31);
    for (const auto& prim : allKindsFixture()) {
        if (prim.kind == PrimitiveKind::Plane) continue;
        Aabb box = primitiveAabb(prim);
        for (int i = 0; i < 2000; ++i) {
            Vec3 p = prim.transform.translation +
                     Vec3{rng.uniform(-8, 8), rng.uniform(-8, 8), rng.uniform(-8, 8)};
            // distance to box never exceeds distance to the member surface
            REQUIRE(box.distance(p) <= std::max(0.0, evalPrimitive(prim, p)) + 1e-9);
        }
    }
}
