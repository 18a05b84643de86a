#include <catch2/catch_amalgamated.hpp>

#include "sdfgi/scene_file.hpp"

using namespace sdfgi;

namespace {
const char* kMinimal = R"(
# minimal scene
sky 0.1 0.1 0.2
primitive {
  kind sphere
  position 0 1 0
  size 0.5
  albedo 0.6 0.2 0.2
}
light {
  kind point
  position 0 4 0
  intensity 10 10 10
}
)";
}

TEST_CASE("minimal scene parses with defaults") {
    SceneFile s = parseScene(kMinimal);
    REQUIRE(s.primitives.size() == 1);
    REQUIRE(s.lights.size() == 1);
    CHECK(s.primitives[0].kind == "sphere");
    CHECK(s.primitives[0].id == 0);
    CHECK(s.cascade.resX == 6);
    CHECK(s.config.hysteresis == 0.9);
    CHECK(s.camera.fovY == 60);

    SceneState st = sceneAtTime(s, 0.0);
    REQUIRE(st.primitives.size() == 1);
    CHECK(evalPrimitive(st.primitives[0], {0, 2.5, 0}) == Catch::Approx(1.0));
}

TEST_CASE("negative sphere radius is rejected, naming the field") {
    const char* bad = "primitive {\n  kind sphere\n  size -1\n}\n";
    try {
        parseScene(bad);
        FAIL("expected a parse error");
    } catch (const SceneParseError& e) {
        CHECK(std::string(e.what()).find("size") != std::string::npos);
        CHECK(e.line == 3);
    }
}

TEST_CASE("unknown keys are rejected with line and column") {
    const char* bad = "camera {\n  position 0 0 0\n  fov 60\n}\n";
    try {
        parseScene(bad);
        FAIL("expected a parse error");
    } catch (const SceneParseError& e) {
        CHECK(e.line == 3);
        CHECK(e.col == 3);
        CHECK(std::string(e.what()).find("unknown key 'fov'") != std::string::npos);
    }
}

TEST_CASE("serialization round-trips to an equal scene") {
    const char* text = R"(
sky 0.25 0.5 0.75
camera { position 1 2 8  look_at 0 0.5 0  fov_y 55 }
cascade { resolution 8 4 8  spacing 0.75  levels 2 }
config { n_rays 96  bounce_coeff 1  hysteresis 0.85  probe_budget 32 }
lod_distances 12 40
primitive { kind box  position 0 -0.25 0  size 6 0.25 6  albedo 0.7 0.7 0.7 }
primitive { kind sphere  position -1 0.75 0  size 0.75  albedo 0.2 0.4 0.8  lod_tier 1 }
primitive { kind plane  normal 0 1 0  offset -2  albedo 0.5 0.5 0.5 }
primitive { kind cylinder  position 2 1 0  rotate 1 0 0 90  size 0.3 1  albedo 0.8 0.3 0.2 }
primitive { kind capsule  position 0 1 -2  size 0.25 0.5  albedo 0.4 0.9 0.4  emission 1 2 0.5 }
light { kind point  position 0 4 1  intensity 20 18 15 }
light { kind directional  direction -0.3 -1 -0.2  intensity 1.5 1.4 1.2 }
light { kind sky  intensity 0.05 0.08 0.12 }
animate {
  target primitive 1
  key 0 position -1 0.75 0
  key 2 position 1.5 0.75 0
}
animate {
  target light 0
  key 0 intensity 20 18 15
  key 1 intensity 0 0 0
}
)";
    SceneFile a = parseScene(text);
    std::string sa = serializeScene(a);
    SceneFile b = parseScene(sa);
    std::string sb = serializeScene(b);
    REQUIRE(sa == sb);
}

TEST_CASE("animation interpolates positions and clamps at the ends") {
    SceneFile s = parseScene(R"(
primitive { kind sphere position -2 0 0 size 1 }
animate { target primitive 0  key 1 position -2 0 0  key 3 position 2 0 0 }
)");
    CHECK(sceneAtTime(s, 0.0).primitives[0].transform.translation.x == Catch::Approx(-2));
    CHECK(sceneAtTime(s, 2.0).primitives[0].transform.translation.x == Catch::Approx(0));
    CHECK(sceneAtTime(s, 3.0).primitives[0].transform.translation.x == Catch::Approx(2));
    CHECK(sceneAtTime(s, 9.0).primitives[0].transform.translation.x == Catch::Approx(2));
}

TEST_CASE("non-increasing keyframe times are rejected") {
    const char* bad = R"(
primitive { kind sphere size 1 }
animate { target primitive 0  key 1 position 0 0 0  key 1 position 1 0 0 }
)";
    CHECK_THROWS_AS(parseScene(bad), SceneParseError);
}

TEST_CASE("sky lights fold into the environment radiance") {
    SceneFile s = parseScene("sky 0.1 0.1 0.1\nlight { kind sky  intensity 0.2 0.3 0.4 }\n");
    SceneState st = sceneAtTime(s, 0);
    CHECK(st.lights.empty());
    CHECK(st.sky.x == Catch::Approx(0.3));
    CHECK(st.sky.z == Catch::Approx(0.5));
}

TEST_CASE("plane normal and offset orient the half-space") {
    SceneFile s = parseScene("primitive { kind plane  normal 0 0 1  offset 2 }\n");
    SceneState st = sceneAtTime(s, 0);
    CHECK(evalPrimitive(st.primitives[0], {0, 0, 5}) == Catch::Approx(3.0));
    CHECK(evalPrimitive(st.primitives[0], {3, -2, 0}) == Catch::Approx(-2.0));
}

TEST_CASE("structural errors carry positions") {
    CHECK_THROWS_AS(parseScene("primitive {\n kind sphere size 1\n"), SceneParseError);
    CHECK_THROWS_AS(parseScene("primitive { kind widget size 1 }\n"), SceneParseError);
    CHECK_THROWS_AS(parseScene("blob { }\n"), SceneParseError);
    CHECK_THROWS_AS(parseScene("light { kind point intensity -1 0 0 }\n"), SceneParseError);
    CHECK_THROWS_AS(
        parseScene("primitive { kind sphere size 1 albedo 1.5 0 0 }\n"), SceneParseError);
    CHECK_THROWS_AS(
        parseScene("primitive { kind sphere size 1 id 4 }\nprimitive { kind sphere size 1 id 4 }\n"),
        SceneParseError);
    CHECK_THROWS_AS(parseScene("animate { target primitive 9 key 0 position 0 0 0 }\n"),
                    SceneParseError);
    CHECK_THROWS_AS(parseScene("cascade { resolution 1 4 4 }\n"), SceneParseError);
}
