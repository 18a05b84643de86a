#include <catch2/catch_amalgamated.hpp>
#include <set>

#include "sdfgi/shading.hpp"

using namespace sdfgi;

namespace {

GBuffer depthGrid(int w, int h, const std::vector<double>& depths) {
    GBuffer gb(w, h);
    for (int i = 0; i < w * h; ++i) gb.pixels[i].depth = depths[i];
    return gb;
}

SdfPrimitive boxPrim(int id, Vec3 pos, Vec3 halfExt, Vec3 albedo = {0.7, 0.7, 0.7},
                     Vec3 emission = {0, 0, 0}) {
    SdfPrimitive p;
    p.id = id;
    p.kind = PrimitiveKind::Box;
    p.size = halfExt;
    p.transform.translation = pos;
    p.material.albedo = albedo;
    p.material.emission = emission;
    return p;
}

ActiveScene sceneOf(std::vector<SdfPrimitive> prims) {
    ActiveScene s;
    s.primitives = std::move(prims);
    if (!s.primitives.empty()) s.clusters = buildClusters(s.primitives, 8, 100);
    s.finalize();
    return s;
}

// analytic segment vs axis-aligned box, the oracle for the thin-wall case
bool segmentIntersectsBox(Vec3 a, Vec3 b, Vec3 c, Vec3 halfExt) {
    Vec3 d = b - a;
    double t0 = 0, t1 = 1;
    for (int i = 0; i < 3; ++i) {
        double lo = c[i] - halfExt[i], hi = c[i] + halfExt[i];
        if (std::fabs(d[i]) < 1e-15) {
            if (a[i] < lo || a[i] > hi) return false;
            continue;
        }
        double ta = (lo - a[i]) / d[i], tb = (hi - a[i]) / d[i];
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
    }
    return t0 <= t1;
}

}  // namespace

TEST_CASE("checkerboard downsample takes max on black, min on white") {
    GBuffer gb = depthGrid(4, 2, {1, 2, 5, 6,
                                  3, 4, 7, 8});
    HalfResDepth half = downsampleDepthCheckerboard(gb);
    REQUIRE(half.width == 2);
    REQUIRE(half.height == 1);
    // (0,0) is black: max of {1,2,3,4}; (1,0) is white: min of {5,6,7,8}
    CHECK(half.depth[0] == 4);
    CHECK(half.depth[1] == 5);
    CHECK(gb.pixels[half.srcPixel[0]].depth == 4);
    CHECK(gb.pixels[half.srcPixel[1]].depth == 5);
}

TEST_CASE("constant depth survives downsampling unchanged") {
    GBuffer gb = depthGrid(6, 6, std::vector<double>(36, 2.5));
    HalfResDepth half = downsampleDepthCheckerboard(gb);
    for (double d : half.depth) CHECK(d == 2.5);
}

TEST_CASE("flat blocks rotate through all four candidates") {
    GBuffer gb = depthGrid(8, 8, std::vector<double>(64, 3.0));
    HalfResDepth half = downsampleDepthCheckerboard(gb);
    std::set<int> picks;
    for (int frame = 0; frame < 4; ++frame) {
        SelectedPixels sel = selectVisibilityPixels(half, frame);
        picks.insert(sel.halfResIndex[0]);
    }
    CHECK(picks.size() == 4);
}

TEST_CASE("depth-extremum override picks the foreground pixel on even frames") {
    // foreground sample placed so a "white" (min) half-res pixel keeps it
    std::vector<double> depths(64, 100.0);
    depths[2] = 1.0;  // full-res (2,0) -> half-res (1,0), (1+0) odd -> min
    GBuffer gb = depthGrid(8, 8, depths);
    HalfResDepth half = downsampleDepthCheckerboard(gb);
    REQUIRE(half.depth[half.index(1, 0)] == 1.0);

    SelectedPixels even = selectVisibilityPixels(half, 2);
    CHECK(half.depth[even.halfResIndex[0]] == 1.0);
    SelectedPixels odd = selectVisibilityPixels(half, 3);
    CHECK(half.depth[odd.halfResIndex[0]] == 100.0);
}

TEST_CASE("four frames cover the depth extent of every block") {
    Rng rng(3);
    std::vector<double> depths(16 * 16);
    for (auto& d : depths) d = rng.uniform(1.0, 50.0);
    GBuffer gb = depthGrid(16, 16, depths);
    HalfResDepth half = downsampleDepthCheckerboard(gb);

    SelectedPixels first = selectVisibilityPixels(half, 0);
    for (int cy = 0; cy < first.height; ++cy) {
        for (int cx = 0; cx < first.width; ++cx) {
            double lo = kInf, hi = -kInf;
            std::set<double> seen;
            for (int k = 0; k < 4; ++k) {
                int hx = std::min(2 * cx + (k & 1), half.width - 1);
                int hy = std::min(2 * cy + (k >> 1), half.height - 1);
                lo = std::min(lo, half.depth[half.index(hx, hy)]);
                hi = std::max(hi, half.depth[half.index(hx, hy)]);
            }
            for (int frame = 0; frame < 4; ++frame) {
                SelectedPixels sel = selectVisibilityPixels(half, frame);
                seen.insert(half.depth[sel.halfResIndex[sel.index(cx, cy)]]);
            }
            REQUIRE(seen.count(lo));
            REQUIRE(seen.count(hi));
        }
    }
}

TEST_CASE("visibility dedup shares traces inside a tile") {
    // flat floor seen from above: 8x8 full-res pixels covering a small patch,
    // all four selected pixels of the single tile share one probe cell
    auto scene = sceneOf({boxPrim(0, {0, -0.5, 0}, {50, 0.5, 50})});
    std::vector<CascadeVolume> cascades = {makeCascade(8, 8, 8, 4.0, 0, {0, 0, 0})};
    Camera cam = Camera::lookAt({0.2, 3, 0.2}, {0.2, 0, 0.2}, {0, 0, 1}, 20);
    RenderConfig cfg;
    GBuffer gb = renderGBuffer(scene, cam, cam, 8, 8, cfg);
    HalfResDepth half = downsampleDepthCheckerboard(gb);
    SelectedPixels sel = selectVisibilityPixels(half, 0);
    REQUIRE(sel.width * sel.height == 4);  // a single 4x4-halfres tile

    VisibilityWork work = buildVisibilityTasks(cascades, gb, half, sel, cfg);
    // every selected pixel lands in the same cell and quantization bucket:
    // exactly 8 shared tasks for 64 full-res pixels
    CHECK(work.tasks.size() == 8);
    double tracesPerPixel = static_cast<double>(work.tasks.size()) / (8 * 8);
    CHECK(tracesPerPixel <= 0.25);

    // worst case: pixels far apart, disjoint stencils, no sharing
    Camera wide = Camera::lookAt({0, 10, 0.01}, {0, 0, 0}, {0, 1, 0}, 100);
    GBuffer gb2 = renderGBuffer(scene, wide, wide, 8, 8, cfg);
    HalfResDepth half2 = downsampleDepthCheckerboard(gb2);
    SelectedPixels sel2 = selectVisibilityPixels(half2, 0);
    VisibilityWork work2 = buildVisibilityTasks(cascades, gb2, half2, sel2, cfg);
    CHECK(work2.tasks.size() > 8);
    CHECK(work2.tasks.size() <= 32);
}

TEST_CASE("probe visibility: open sight, blocked, and the thin-wall case") {
    RenderConfig cfg;
    double spacing = 1.0;
    double th1 = cfg.threshold1(spacing);

    // floor only: probe straight up is unobstructed
    auto open = sceneOf({boxPrim(0, {0, -0.5, 0}, {50, 0.5, 50})});
    Vec3 onFloor{0, 0, 0}, normal{0, 1, 0};
    CHECK(probeVisibility(open, onFloor, normal, {0, 0.8, 0}, 8, th1, cfg) == 1.0);

    // thick wall between point and probe
    for (double thickness : {0.5, 0.1, 0.05, 0.02}) {
        auto walled = sceneOf({boxPrim(0, {0, -0.5, 0}, {50, 0.5, 50}),
                               boxPrim(1, {1, 1, 0}, {thickness / 2, 2, 2})});
        Vec3 probePos{2, 0.5, 0};
        REQUIRE(segmentIntersectsBox(onFloor, probePos, {1, 1, 0}, {thickness / 2, 2, 2}));
        CHECK(probeVisibility(walled, onFloor, normal, probePos, 8, th1, cfg) == 0.0);
    }
}

TEST_CASE("pixel GI renormalizes over visible probes and never leaks") {
    std::vector<CascadeVolume> cascades = {makeCascade(2, 2, 2, 1.0, 0, {0.5, 0.5, 0.5})};
    std::vector<ProbeAtlas> atlases;
    atlases.emplace_back(8, 8);
    for (int p = 0; p < 8; ++p) {
        for (int y = 0; y < 8; ++y)
            for (int x = 0; x < 8; ++x) atlases[0].setTexel(p, x, y, Vec3(kPi));
        atlases[0].fillBorder(p);
    }
    IrradianceField field{&cascades, &atlases};

    PixelVisibility pv;
    pv.valid = true;
    pv.stencil = interpolationStencil(cascades, cascades[0].origin + Vec3{0.5, 0.5, 0.5});
    REQUIRE(pv.stencil.count == 8);
    for (int i = 0; i < 8; ++i) pv.taskIndex[i] = i;

    SECTION("all visible, equal texels") {
        std::vector<double> vis(8, 1.0);
        auto r = shadePixelGI(pv, vis, {0, 0, 1}, field);
        REQUIRE(r.valid);
        CHECK(r.irradiance.x == Catch::Approx(kPi));
    }
    SECTION("one visible probe dominates") {
        // distinct value on probe 3
        for (int y = 0; y < 8; ++y)
            for (int x = 0; x < 8; ++x) atlases[0].setTexel(3, x, y, {2.5, 0.5, 0.25});
        atlases[0].fillBorder(3);
        std::vector<double> vis(8, 0.0);
        vis[3] = 1.0;
        auto r = shadePixelGI(pv, vis, {0, 0, 1}, field);
        REQUIRE(r.valid);
        CHECK(r.irradiance.x == Catch::Approx(2.5));
        CHECK(r.irradiance.z == Catch::Approx(0.25));
    }
    SECTION("all occluded flags invalid instead of leaking") {
        std::vector<double> vis(8, 0.0);
        auto r = shadePixelGI(pv, vis, {0, 0, 1}, field);
        CHECK(!r.valid);
        CHECK(length(r.irradiance) == 0.0);
    }
}

TEST_CASE("upsample propagates a constant and respects depth edges") {
    // full-res 8x8 over a 2x2 sparse grid
    GBuffer gb(8, 8);
    for (auto& px : gb.pixels) {
        px.depth = 5;
        px.normal = {0, 0, 1};
        px.worldPos = {0, 0, 0};
    }
    SparseGi sparse;
    sparse.width = 2;
    sparse.height = 2;
    sparse.irradiance = {Vec3(2), Vec3(2), Vec3(2), Vec3(2)};
    sparse.anchorPixel = {0, 4, 32, 36};
    sparse.valid = {1, 1, 1, 1};

    std::vector<CascadeVolume> cascades = {makeCascade(2, 2, 2, 10.0, 0, {0, 0, 0})};
    std::vector<ProbeAtlas> atlases;
    atlases.emplace_back(8, 8);
    IrradianceField field{&cascades, &atlases};
    HistoryBuffers none;
    RenderConfig cfg;

    ImageRgb out = upsampleAndResolve(sparse, gb, none, cascades, field, cfg);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) CHECK(out.at(x, y).x == Catch::Approx(2.0));

    // foreground strip at depth 1 with a big gap, away from the sparse anchors:
    // the bilateral weight must reject the depth-5 samples, leaving zeros
    for (int y = 6; y < 8; ++y)
        for (int x = 0; x < 8; ++x) gb.at(x, y).depth = 1.0;
    ImageRgb edge = upsampleAndResolve(sparse, gb, none, cascades, field, cfg);
    for (int x = 0; x < 8; ++x) {
        CHECK(edge.at(x, 6).x < 0.05);  // background GI does not bleed onto foreground
        CHECK(edge.at(x, 0).x == Catch::Approx(2.0));
    }
}

TEST_CASE("contact pass is the identity in the open") {
    auto scene = sceneOf({boxPrim(0, {0, -0.5, 0}, {50, 0.5, 50})});
    Camera cam = Camera::lookAt({0, 2, 0.01}, {0, 0, 0});
    RenderConfig cfg;
    GBuffer gb = renderGBuffer(scene, cam, cam, 8, 8, cfg);
    ImageRgb e(8, 8);
    for (auto& p : e.pixels) p = Vec3(1.5);
    std::vector<CascadeVolume> cascades = {makeCascade(2, 2, 2, 1.0, 0, {0, 0, 0})};
    std::vector<ProbeAtlas> atlases;
    atlases.emplace_back(8, 8);
    IrradianceField field{&cascades, &atlases};

    ImageRgb out = contactGI(scene, gb, e, field, 0.5, 8, cfg);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
            REQUIRE(!gb.at(x, y).sky());
            Vec3 expect = gb.at(x, y).albedo / kPi * e.at(x, y);
            CHECK(out.at(x, y).x == Catch::Approx(expect.x));
        }
}

TEST_CASE("contact pass drives a dark cavity to zero") {
    // point at the bottom of a deep dark slot: all short rays hit black walls
    auto scene = sceneOf({boxPrim(0, {0, -0.5, 0}, {50, 0.5, 50}, {0, 0, 0}),
                          boxPrim(1, {-0.3, 1, 0}, {0.25, 1, 2}, {0, 0, 0}),
                          boxPrim(2, {0.3, 1, 0}, {0.25, 1, 2}, {0, 0, 0})});
    Camera cam = Camera::lookAt({0, 1.8, 0}, {0, 0, 0});
    RenderConfig cfg;
    GBuffer gb = renderGBuffer(scene, cam, cam, 4, 4, cfg);
    ImageRgb e(4, 4);
    for (auto& p : e.pixels) p = Vec3(2.0);
    std::vector<CascadeVolume> cascades = {makeCascade(2, 2, 2, 1.0, 0, {0, 0, 0})};
    std::vector<ProbeAtlas> atlases;
    atlases.emplace_back(8, 8);
    IrradianceField field{&cascades, &atlases};

    ImageRgb out = contactGI(scene, gb, e, field, 0.6, 16, cfg);
    int center = 2 + 2 * 4;
    CHECK(luminance(out.pixels[center]) < 0.02);
}

TEST_CASE("occluded contact directions contribute occluder lighting, not just darkness") {
    // lit white wall next to the pixel: plain AO would only darken, the contact
    // term must add the wall's radiance back
    auto scene = sceneOf({boxPrim(0, {0, -0.5, 0}, {50, 0.5, 50}, {0.9, 0.9, 0.9}),
                          boxPrim(1, {0.4, 0.75, 0}, {0.25, 0.75, 2}, {0.9, 0.9, 0.9})});
    Light light;
    light.kind = LightKind::Point;
    light.position = {-2, 4, 0};
    light.intensity = Vec3(40);
    scene.lights = {light};

    Camera cam = Camera::lookAt({-1, 1.2, 0.01}, {0.1, 0, 0});
    RenderConfig cfg;
    GBuffer gb = renderGBuffer(scene, cam, cam, 8, 8, cfg);
    ImageRgb e(8, 8);
    for (auto& p : e.pixels) p = Vec3(0.5);
    std::vector<CascadeVolume> cascades = {makeCascade(2, 2, 2, 1.0, 0, {0, 0, 0})};
    std::vector<ProbeAtlas> atlases;
    atlases.emplace_back(8, 8);
    IrradianceField field{&cascades, &atlases};

    TraceStats stats;
    ImageRgb out = contactGI(scene, gb, e, field, 0.7, 32, cfg, &stats);

    // pick a floor pixel near the wall base (world x close to the wall)
    bool checked = false;
    for (int y = 0; y < 8 && !checked; ++y)
        for (int x = 0; x < 8 && !checked; ++x) {
            const GBufferPixel& px = gb.at(x, y);
            if (px.sky() || px.primitiveIndex != 0) continue;
            if (px.worldPos.x < -0.1 || px.worldPos.x > 0.14) continue;
            // recompute the AO alone for this pixel
            Rng rng(cfg.seed, 0xc0417ffull, static_cast<uint64_t>(y) * 8 + x);
            int unoccluded = 0;
            for (int s = 0; s < 32; ++s) {
                Vec3 dir = cosineHemisphereDir(rng, px.normal);
                double cosTheta = std::max(0.1, dot(dir, px.normal));
                Hit hit = sphereTrace(scene,
                                      px.worldPos + px.normal * (2 * cfg.surfaceEpsilon / cosTheta),
                                      dir, 0.7, cfg.surfaceEpsilon, cfg.maxTraceSteps);
                if (!hit.converged) ++unoccluded;
            }
            double ao = unoccluded / 32.0;
            if (ao > 0.85) continue;  // want a pixel with real occlusion
            Vec3 plainAoGi = px.albedo / kPi * e.at(x, y) * ao;
            CHECK(luminance(out.at(x, y)) > luminance(plainAoGi));
            checked = true;
        }
    REQUIRE(checked);
}

TEST_CASE("compose passes emission through and goes black without lights or GI") {
    auto scene = sceneOf({boxPrim(0, {0, 0, -3}, {1, 1, 0.2}, {0.5, 0.5, 0.5}, {2, 1, 0.5})});
    Camera cam = Camera::lookAt({0, 0, 0}, {0, 0, -1});
    RenderConfig cfg;
    GBuffer gb = renderGBuffer(scene, cam, cam, 4, 4, cfg);
    ImageRgb zeroGi(4, 4);
    ImageRgb out = composeFrame(scene, gb, zeroGi, cfg);
    const GBufferPixel& center = gb.at(2, 2);
    REQUIRE(!center.sky());
    CHECK(out.at(2, 2).x == Catch::Approx(2.0));
    CHECK(out.at(2, 2).y == Catch::Approx(1.0));

    // non-emissive scene, no lights, no GI: black geometry, sky elsewhere
    auto dark = sceneOf({boxPrim(0, {0, 0, -3}, {1, 1, 0.2})});
    dark.sky = {0.1, 0.2, 0.3};
    GBuffer gb2 = renderGBuffer(dark, cam, cam, 4, 4, cfg);
    ImageRgb out2 = composeFrame(dark, gb2, zeroGi, cfg);
    CHECK(length(out2.at(2, 2)) == 0.0);
    CHECK(out2.at(0, 0).z == Catch::Approx(0.3));
}
