#pragma once

#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdfgi/camera.hpp"
#include "sdfgi/config.hpp"
#include "sdfgi/scene.hpp"

namespace sdfgi {

// Scene description as authored: a flat list of blocks in a small key-value
// format (see scenes/ for examples). Primitives keep their authoring parameters
// so scenes serialize back exactly.
struct PrimitiveSpec {
    std::string kind = "sphere";
    Vec3 position{0, 0, 0};
    Vec3 rotateAxis{0, 0, 1};
    double rotateDeg = 0;
    std::vector<double> size;
    Vec3 normal{0, 0, 1};  // plane orientation, alternative to rotate
    double offset = 0;
    bool hasNormal = false;
    Vec3 albedo{0.5, 0.5, 0.5};
    Vec3 emission{0, 0, 0};
    int lodTier = 0;
    int id = -1;  // -1: assigned from declaration order
};

struct LightSpec {
    std::string kind = "point";
    Vec3 position{0, 0, 0};
    Vec3 direction{0, -1, 0};
    Vec3 intensity{1, 1, 1};
};

struct Keyframe {
    double time = 0;
    enum What { Position, Intensity } what = Position;
    Vec3 value;
};

struct Track {
    enum Target { Primitive, Light } target = Primitive;
    int id = 0;  // primitive id, or light index
    std::vector<Keyframe> keys;
};

struct CameraSpec {
    Vec3 position{0, 1, 5};
    Vec3 lookAt{0, 0, 0};
    Vec3 up{0, 1, 0};
    double fovY = 60;
};

struct CascadeSpec {
    int resX = 6, resY = 6, resZ = 6;
    double spacing = 1.0;
    int levels = 1;
};

struct SceneFile {
    Vec3 sky{0, 0, 0};
    CameraSpec camera;
    CascadeSpec cascade;
    RenderConfig config;
    std::vector<double> lodDistances;
    std::vector<PrimitiveSpec> primitives;
    std::vector<LightSpec> lights;
    std::vector<Track> tracks;
};

class SceneParseError : public std::runtime_error {
public:
    SceneParseError(int line, int col, const std::string& what)
        : std::runtime_error(std::to_string(line) + ":" + std::to_string(col) + ": " + what),
          line(line),
          col(col) {}
    int line, col;
};

namespace detail {

struct Token {
    std::string text;
    int line = 0, col = 0;
};

inline std::vector<Token> tokenize(const std::string& text) {
    std::vector<Token> out;
    int line = 1, col = 1;
    size_t i = 0;
    while (i < text.size()) {
        char c = text[i];
        if (c == '#') {
            while (i < text.size() && text[i] != '\n') ++i;
            continue;
        }
        if (c == '\n') {
            ++line;
            col = 1;
            ++i;
            continue;
        }
        if (c == ' ' || c == '\t' || c == '\r') {
            ++col;
            ++i;
            continue;
        }
        if (c == '{' || c == '}') {
            out.push_back({std::string(1, c), line, col});
            ++col;
            ++i;
            continue;
        }
        Token t{{}, line, col};
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i])) &&
               text[i] != '{' && text[i] != '}' && text[i] != '#') {
            t.text += text[i];
            ++i;
            ++col;
        }
        out.push_back(std::move(t));
    }
    return out;
}

class Cursor {
public:
    explicit Cursor(std::vector<Token> toks) : toks_(std::move(toks)) {}

    bool done() const { return pos_ >= toks_.size(); }
    const Token& peek() const { return toks_[pos_]; }
    Token next() { return toks_[pos_++]; }

    [[noreturn]] void fail(const Token& at, const std::string& msg) const {
        throw SceneParseError(at.line, at.col, msg);
    }

    Token expectWord(const char* what) {
        if (done()) throw SceneParseError(lastLine(), lastCol(), std::string("expected ") + what);
        Token t = next();
        if (t.text == "{" || t.text == "}") fail(t, std::string("expected ") + what);
        return t;
    }

    double expectNumber(const char* what) {
        Token t = expectWord(what);
        char* end = nullptr;
        double v = std::strtod(t.text.c_str(), &end);
        if (end == t.text.c_str() || *end != '\0')
            fail(t, std::string("expected a number for ") + what + ", got '" + t.text + "'");
        return v;
    }

    int expectInt(const char* what) {
        Token t = expectWord(what);
        char* end = nullptr;
        long v = std::strtol(t.text.c_str(), &end, 10);
        if (end == t.text.c_str() || *end != '\0')
            fail(t, std::string("expected an integer for ") + what + ", got '" + t.text + "'");
        return static_cast<int>(v);
    }

    Vec3 expectVec3(const char* what) {
        double x = expectNumber(what), y = expectNumber(what), z = expectNumber(what);
        return {x, y, z};
    }

    void expectOpen(const Token& blockName) {
        if (done() || peek().text != "{") fail(blockName, "expected '{' after block name");
        next();
    }

    bool atClose() const { return !done() && peek().text == "}"; }
    void expectClose(const Token& blockName) {
        if (done()) fail(blockName, "unterminated block (missing '}')");
        next();
    }

    int lastLine() const { return toks_.empty() ? 1 : toks_.back().line; }
    int lastCol() const { return toks_.empty() ? 1 : toks_.back().col; }

private:
    std::vector<Token> toks_;
    size_t pos_ = 0;
};

inline void validateColor01(Cursor& cur, const Token& at, const Vec3& c, const char* field) {
    for (int i = 0; i < 3; ++i)
        if (!(c[i] >= 0 && c[i] <= 1)) cur.fail(at, std::string(field) + " must be in [0,1]");
}

inline void validateNonNegative(Cursor& cur, const Token& at, const Vec3& c, const char* field) {
    for (int i = 0; i < 3; ++i)
        if (!(c[i] >= 0) || !std::isfinite(c[i]))
            cur.fail(at, std::string(field) + " must be finite and >= 0");
}

}  // namespace detail

inline SceneFile parseScene(const std::string& text) {
    using detail::Cursor;
    using detail::Token;
    Cursor cur(detail::tokenize(text));
    SceneFile scene;
    bool sawCascade = false;
    int autoId = 0;

    while (!cur.done()) {
        Token key = cur.next();
        if (key.text == "sky") {
            scene.sky = cur.expectVec3("sky");
            detail::validateNonNegative(cur, key, scene.sky, "sky");
        } else if (key.text == "lod_distances") {
            scene.lodDistances.clear();
            while (!cur.done() && cur.peek().text != "{" && cur.peek().text != "}") {
                char* end = nullptr;
                std::strtod(cur.peek().text.c_str(), &end);
                if (end == cur.peek().text.c_str() || *end != '\0') break;
                scene.lodDistances.push_back(cur.expectNumber("lod_distances"));
            }
            for (size_t i = 1; i < scene.lodDistances.size(); ++i)
                if (scene.lodDistances[i] <= scene.lodDistances[i - 1])
                    cur.fail(key, "lod_distances must be ascending");
        } else if (key.text == "camera") {
            cur.expectOpen(key);
            while (!cur.atClose()) {
                Token k = cur.expectWord("camera key");
                if (k.text == "position") scene.camera.position = cur.expectVec3("position");
                else if (k.text == "look_at") scene.camera.lookAt = cur.expectVec3("look_at");
                else if (k.text == "up") scene.camera.up = cur.expectVec3("up");
                else if (k.text == "fov_y") scene.camera.fovY = cur.expectNumber("fov_y");
                else cur.fail(k, "unknown key '" + k.text + "' in camera block");
            }
            cur.expectClose(key);
            if (!(scene.camera.fovY > 0 && scene.camera.fovY < 180))
                cur.fail(key, "fov_y must be in (0, 180)");
        } else if (key.text == "cascade") {
            cur.expectOpen(key);
            while (!cur.atClose()) {
                Token k = cur.expectWord("cascade key");
                if (k.text == "resolution") {
                    scene.cascade.resX = cur.expectInt("resolution");
                    scene.cascade.resY = cur.expectInt("resolution");
                    scene.cascade.resZ = cur.expectInt("resolution");
                    if (scene.cascade.resX < 2 || scene.cascade.resY < 2 ||
                        scene.cascade.resZ < 2)
                        cur.fail(k, "cascade resolution must be at least 2 per axis");
                } else if (k.text == "spacing") {
                    scene.cascade.spacing = cur.expectNumber("spacing");
                    if (!(scene.cascade.spacing > 0)) cur.fail(k, "spacing must be positive");
                } else if (k.text == "levels") {
                    scene.cascade.levels = cur.expectInt("levels");
                    if (scene.cascade.levels < 1) cur.fail(k, "levels must be >= 1");
                } else {
                    cur.fail(k, "unknown key '" + k.text + "' in cascade block");
                }
            }
            cur.expectClose(key);
            sawCascade = true;
        } else if (key.text == "config") {
            cur.expectOpen(key);
            RenderConfig& c = scene.config;
            while (!cur.atClose()) {
                Token k = cur.expectWord("config key");
                const std::string& n = k.text;
                if (n == "surface_epsilon") c.surfaceEpsilon = cur.expectNumber(n.c_str());
                else if (n == "max_trace_steps") c.maxTraceSteps = cur.expectInt(n.c_str());
                else if (n == "shadow_steps") c.shadowSteps = cur.expectInt(n.c_str());
                else if (n == "ray_tmax") c.rayTMax = cur.expectNumber(n.c_str());
                else if (n == "shadow_k") c.shadowK = cur.expectNumber(n.c_str());
                else if (n == "probe_visibility_k") c.probeVisibilityK = cur.expectNumber(n.c_str());
                else if (n == "gradient_step") c.gradientStep = cur.expectNumber(n.c_str());
                else if (n == "max_per_cluster") c.maxPerCluster = cur.expectInt(n.c_str());
                else if (n == "merge_radius") c.mergeRadius = cur.expectNumber(n.c_str());
                else if (n == "threshold1_frac") c.threshold1Frac = cur.expectNumber(n.c_str());
                else if (n == "threshold2_frac") c.threshold2Frac = cur.expectNumber(n.c_str());
                else if (n == "max_descent_steps") c.maxDescentSteps = cur.expectInt(n.c_str());
                else if (n == "probe_budget") c.probeBudget = cur.expectInt(n.c_str());
                else if (n == "n_rays") c.nRaysFull = cur.expectInt(n.c_str());
                else if (n == "hysteresis") c.hysteresis = cur.expectNumber(n.c_str());
                else if (n == "alpha_min") c.alphaMin = cur.expectNumber(n.c_str());
                else if (n == "bounce_coeff") c.bounceCoeff = cur.expectNumber(n.c_str());
                else if (n == "oct_res") c.octRes = cur.expectInt(n.c_str());
                else if (n == "rotate_per_frame") c.rotatePerFrame = cur.expectInt(n.c_str()) != 0;
                else if (n == "seed") c.seed = static_cast<uint64_t>(cur.expectInt(n.c_str()));
                else if (n == "mvc_relocation_frac") c.mvcRelocationFrac = cur.expectNumber(n.c_str());
                else if (n == "dedup_quant_frac") c.dedupQuantFrac = cur.expectNumber(n.c_str());
                else if (n == "contact_radius_frac") c.contactRadiusFrac = cur.expectNumber(n.c_str());
                else if (n == "contact_samples") c.contactSamples = cur.expectInt(n.c_str());
                else if (n == "history_blend") c.historyBlend = cur.expectNumber(n.c_str());
                else if (n == "depth_sigma_frac") c.depthSigmaFrac = cur.expectNumber(n.c_str());
                else if (n == "exposure") c.exposure = cur.expectNumber(n.c_str());
                else if (n == "fps") c.fps = cur.expectInt(n.c_str());
                else cur.fail(k, "unknown key '" + n + "' in config block");
            }
            cur.expectClose(key);
            if (!(c.hysteresis >= 0 && c.hysteresis < 1))
                cur.fail(key, "hysteresis must be in [0,1)");
            if (!(c.bounceCoeff >= 0 && c.bounceCoeff <= 1))
                cur.fail(key, "bounce_coeff must be in [0,1]");
            if (c.nRaysFull < 8) cur.fail(key, "n_rays must be >= 8");
        } else if (key.text == "primitive") {
            cur.expectOpen(key);
            PrimitiveSpec p;
            Token kindTok = key;
            while (!cur.atClose()) {
                Token k = cur.expectWord("primitive key");
                if (k.text == "kind") {
                    kindTok = cur.expectWord("kind");
                    p.kind = kindTok.text;
                    if (p.kind != "sphere" && p.kind != "box" && p.kind != "plane" &&
                        p.kind != "cylinder" && p.kind != "capsule")
                        cur.fail(kindTok, "unknown primitive kind '" + p.kind + "'");
                } else if (k.text == "position") {
                    p.position = cur.expectVec3("position");
                } else if (k.text == "rotate") {
                    p.rotateAxis = cur.expectVec3("rotate axis");
                    p.rotateDeg = cur.expectNumber("rotate angle");
                    if (length(p.rotateAxis) < 1e-9) cur.fail(k, "rotate axis must be nonzero");
                } else if (k.text == "size") {
                    p.size.clear();
                    while (!cur.done() && cur.peek().text != "{" && cur.peek().text != "}") {
                        char* end = nullptr;
                        std::strtod(cur.peek().text.c_str(), &end);
                        if (end == cur.peek().text.c_str() || *end != '\0') break;
                        double v = cur.expectNumber("size");
                        if (!(v > 0)) cur.fail(k, "size values must be strictly positive");
                        p.size.push_back(v);
                    }
                } else if (k.text == "normal") {
                    p.normal = cur.expectVec3("normal");
                    p.hasNormal = true;
                    if (length(p.normal) < 1e-9) cur.fail(k, "plane normal must be nonzero");
                } else if (k.text == "offset") {
                    p.offset = cur.expectNumber("offset");
                } else if (k.text == "albedo") {
                    p.albedo = cur.expectVec3("albedo");
                    detail::validateColor01(cur, k, p.albedo, "albedo");
                } else if (k.text == "emission") {
                    p.emission = cur.expectVec3("emission");
                    detail::validateNonNegative(cur, k, p.emission, "emission");
                } else if (k.text == "lod_tier") {
                    p.lodTier = cur.expectInt("lod_tier");
                    if (p.lodTier < 0) cur.fail(k, "lod_tier must be >= 0");
                } else if (k.text == "id") {
                    p.id = cur.expectInt("id");
                } else {
                    cur.fail(k, "unknown key '" + k.text + "' in primitive block");
                }
            }
            cur.expectClose(key);
            size_t want = p.kind == "sphere" ? 1 : p.kind == "box" ? 3
                          : p.kind == "plane" ? 0 : 2;
            if (p.size.size() != want)
                cur.fail(kindTok, "primitive kind '" + p.kind + "' needs " +
                                      std::to_string(want) + " size value(s), got " +
                                      std::to_string(p.size.size()));
            if (p.id < 0) p.id = autoId;
            ++autoId;
            for (const auto& other : scene.primitives)
                if (other.id == p.id)
                    cur.fail(key, "duplicate primitive id " + std::to_string(p.id));
            scene.primitives.push_back(std::move(p));
        } else if (key.text == "light") {
            cur.expectOpen(key);
            LightSpec l;
            while (!cur.atClose()) {
                Token k = cur.expectWord("light key");
                if (k.text == "kind") {
                    Token kt = cur.expectWord("kind");
                    l.kind = kt.text;
                    if (l.kind != "point" && l.kind != "directional" && l.kind != "sky")
                        cur.fail(kt, "unknown light kind '" + l.kind + "'");
                } else if (k.text == "position") {
                    l.position = cur.expectVec3("position");
                } else if (k.text == "direction") {
                    l.direction = cur.expectVec3("direction");
                    if (length(l.direction) < 1e-9) cur.fail(k, "direction must be nonzero");
                } else if (k.text == "intensity") {
                    l.intensity = cur.expectVec3("intensity");
                    detail::validateNonNegative(cur, k, l.intensity, "intensity");
                } else {
                    cur.fail(k, "unknown key '" + k.text + "' in light block");
                }
            }
            cur.expectClose(key);
            scene.lights.push_back(std::move(l));
        } else if (key.text == "animate") {
            cur.expectOpen(key);
            Track t;
            bool sawTarget = false;
            while (!cur.atClose()) {
                Token k = cur.expectWord("animate key");
                if (k.text == "target") {
                    Token what = cur.expectWord("target kind");
                    if (what.text == "primitive") t.target = Track::Primitive;
                    else if (what.text == "light") t.target = Track::Light;
                    else cur.fail(what, "animate target must be 'primitive' or 'light'");
                    t.id = cur.expectInt("target id");
                    sawTarget = true;
                } else if (k.text == "key") {
                    Keyframe kf;
                    kf.time = cur.expectNumber("key time");
                    Token what = cur.expectWord("key property");
                    if (what.text == "position") kf.what = Keyframe::Position;
                    else if (what.text == "intensity") kf.what = Keyframe::Intensity;
                    else cur.fail(what, "key property must be 'position' or 'intensity'");
                    kf.value = cur.expectVec3("key value");
                    if (!t.keys.empty() && kf.time <= t.keys.back().time)
                        cur.fail(k, "keyframe times must be strictly increasing");
                    t.keys.push_back(kf);
                } else {
                    cur.fail(k, "unknown key '" + k.text + "' in animate block");
                }
            }
            cur.expectClose(key);
            if (!sawTarget) cur.fail(key, "animate block needs a target");
            if (t.keys.empty()) cur.fail(key, "animate block needs at least one key");
            scene.tracks.push_back(std::move(t));
        } else {
            cur.fail(key, "unknown top-level key '" + key.text + "'");
        }
    }

    (void)sawCascade;
    // cross references
    for (const auto& t : scene.tracks) {
        if (t.target == Track::Primitive) {
            bool found = false;
            for (const auto& p : scene.primitives) found |= p.id == t.id;
            if (!found)
                throw SceneParseError(1, 1, "animate target primitive id " +
                                                std::to_string(t.id) + " does not exist");
        } else if (t.id < 0 || t.id >= static_cast<int>(scene.lights.size())) {
            throw SceneParseError(1, 1, "animate target light index " + std::to_string(t.id) +
                                            " does not exist");
        }
    }
    return scene;
}

inline SceneFile loadSceneFile(const std::string& path) {
    FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw std::runtime_error("cannot open scene file: " + path);
    std::string text;
    char buf[4096];
    size_t n;
    while ((n = std::fread(buf, 1, sizeof(buf), f)) > 0) text.append(buf, n);
    std::fclose(f);
    return parseScene(text);
}

namespace detail {
inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}
inline std::string fmt(const Vec3& v) { return fmt(v.x) + " " + fmt(v.y) + " " + fmt(v.z); }
}  // namespace detail

inline std::string serializeScene(const SceneFile& s) {
    using detail::fmt;
    std::string out;
    out += "sky " + fmt(s.sky) + "\n";
    out += "camera {\n  position " + fmt(s.camera.position) + "\n  look_at " +
           fmt(s.camera.lookAt) + "\n  up " + fmt(s.camera.up) + "\n  fov_y " +
           fmt(s.camera.fovY) + "\n}\n";
    out += "cascade {\n  resolution " + std::to_string(s.cascade.resX) + " " +
           std::to_string(s.cascade.resY) + " " + std::to_string(s.cascade.resZ) +
           "\n  spacing " + fmt(s.cascade.spacing) + "\n  levels " +
           std::to_string(s.cascade.levels) + "\n}\n";
    const RenderConfig def;
    const RenderConfig& c = s.config;
    std::string cfg;
    auto num = [&](const char* key, double v, double d) {
        if (v != d) cfg += std::string("  ") + key + " " + fmt(v) + "\n";
    };
    auto inum = [&](const char* key, long long v, long long d) {
        if (v != d) cfg += std::string("  ") + key + " " + std::to_string(v) + "\n";
    };
    num("surface_epsilon", c.surfaceEpsilon, def.surfaceEpsilon);
    inum("max_trace_steps", c.maxTraceSteps, def.maxTraceSteps);
    inum("shadow_steps", c.shadowSteps, def.shadowSteps);
    num("ray_tmax", c.rayTMax, def.rayTMax);
    num("shadow_k", c.shadowK, def.shadowK);
    num("probe_visibility_k", c.probeVisibilityK, def.probeVisibilityK);
    num("gradient_step", c.gradientStep, def.gradientStep);
    inum("max_per_cluster", c.maxPerCluster, def.maxPerCluster);
    num("merge_radius", c.mergeRadius, def.mergeRadius);
    num("threshold1_frac", c.threshold1Frac, def.threshold1Frac);
    num("threshold2_frac", c.threshold2Frac, def.threshold2Frac);
    inum("max_descent_steps", c.maxDescentSteps, def.maxDescentSteps);
    inum("probe_budget", c.probeBudget, def.probeBudget);
    inum("n_rays", c.nRaysFull, def.nRaysFull);
    num("hysteresis", c.hysteresis, def.hysteresis);
    num("alpha_min", c.alphaMin, def.alphaMin);
    num("bounce_coeff", c.bounceCoeff, def.bounceCoeff);
    inum("oct_res", c.octRes, def.octRes);
    inum("rotate_per_frame", c.rotatePerFrame ? 1 : 0, def.rotatePerFrame ? 1 : 0);
    inum("seed", static_cast<long long>(c.seed), static_cast<long long>(def.seed));
    num("mvc_relocation_frac", c.mvcRelocationFrac, def.mvcRelocationFrac);
    num("dedup_quant_frac", c.dedupQuantFrac, def.dedupQuantFrac);
    num("contact_radius_frac", c.contactRadiusFrac, def.contactRadiusFrac);
    inum("contact_samples", c.contactSamples, def.contactSamples);
    num("history_blend", c.historyBlend, def.historyBlend);
    num("depth_sigma_frac", c.depthSigmaFrac, def.depthSigmaFrac);
    num("exposure", c.exposure, def.exposure);
    inum("fps", c.fps, def.fps);
    if (!cfg.empty()) out += "config {\n" + cfg + "}\n";
    if (!s.lodDistances.empty()) {
        out += "lod_distances";
        for (double d : s.lodDistances) out += " " + fmt(d);
        out += "\n";
    }
    for (const auto& p : s.primitives) {
        out += "primitive {\n  kind " + p.kind + "\n  id " + std::to_string(p.id) + "\n";
        out += "  position " + fmt(p.position) + "\n";
        if (p.rotateDeg != 0)
            out += "  rotate " + fmt(p.rotateAxis) + " " + fmt(p.rotateDeg) + "\n";
        if (!p.size.empty()) {
            out += "  size";
            for (double v : p.size) out += " " + fmt(v);
            out += "\n";
        }
        if (p.hasNormal) {
            out += "  normal " + fmt(p.normal) + "\n  offset " + fmt(p.offset) + "\n";
        }
        out += "  albedo " + fmt(p.albedo) + "\n";
        if (length(p.emission) > 0) out += "  emission " + fmt(p.emission) + "\n";
        if (p.lodTier != 0) out += "  lod_tier " + std::to_string(p.lodTier) + "\n";
        out += "}\n";
    }
    for (const auto& l : s.lights) {
        out += "light {\n  kind " + l.kind + "\n";
        if (l.kind == "point") out += "  position " + fmt(l.position) + "\n";
        if (l.kind == "directional" || l.kind == "sky")
            out += "  direction " + fmt(l.direction) + "\n";
        out += "  intensity " + fmt(l.intensity) + "\n}\n";
    }
    for (const auto& t : s.tracks) {
        out += "animate {\n  target ";
        out += t.target == Track::Primitive ? "primitive " : "light ";
        out += std::to_string(t.id) + "\n";
        for (const auto& k : t.keys) {
            out += "  key " + fmt(k.time) + " ";
            out += k.what == Keyframe::Position ? "position " : "intensity ";
            out += fmt(k.value) + "\n";
        }
        out += "}\n";
    }
    return out;
}

inline Vec3 evalTrackVec(const std::vector<Keyframe>& keys, Keyframe::What what, double time,
                         const Vec3& fallback) {
    const Keyframe* prev = nullptr;
    for (const auto& k : keys) {
        if (k.what != what) continue;
        if (k.time >= time) {
            if (!prev) return k.value;
            double span = k.time - prev->time;
            double t = span > 0 ? (time - prev->time) / span : 0;
            return lerp(prev->value, k.value, t);
        }
        prev = &k;
    }
    return prev ? prev->value : fallback;
}

// Instantiated scene objects at a point in time, with animation applied and
// sky-kind lights folded into the environment radiance.
struct SceneState {
    std::vector<SdfPrimitive> primitives;
    std::vector<Light> lights;
    Vec3 sky;
};

inline SceneState sceneAtTime(const SceneFile& s, double time) {
    SceneState st;
    st.sky = s.sky;
    for (const auto& spec : s.primitives) {
        SdfPrimitive p;
        p.id = spec.id;
        p.lodTier = spec.lodTier;
        p.material.albedo = spec.albedo;
        p.material.emission = spec.emission;
        if (spec.kind == "sphere") {
            p.kind = PrimitiveKind::Sphere;
            p.size = {spec.size[0], 0, 0};
        } else if (spec.kind == "box") {
            p.kind = PrimitiveKind::Box;
            p.size = {spec.size[0], spec.size[1], spec.size[2]};
        } else if (spec.kind == "plane") {
            p.kind = PrimitiveKind::Plane;
        } else if (spec.kind == "cylinder") {
            p.kind = PrimitiveKind::Cylinder;
            p.size = {spec.size[0], spec.size[1], 0};
        } else {
            p.kind = PrimitiveKind::Capsule;
            p.size = {spec.size[0], spec.size[1], 0};
        }
        Vec3 pos = spec.position;
        for (const auto& t : s.tracks)
            if (t.target == Track::Primitive && t.id == spec.id)
                pos = evalTrackVec(t.keys, Keyframe::Position, time, pos);
        if (spec.kind == "plane" && spec.hasNormal) {
            Vec3 n = normalize(spec.normal);
            p.transform.rotation = Mat3::fromZTo(n);
            p.transform.translation = n * spec.offset + pos;
        } else {
            if (spec.rotateDeg != 0)
                p.transform.rotation =
                    Mat3::fromAxisAngle(spec.rotateAxis, spec.rotateDeg * kPi / 180.0);
            p.transform.translation = pos;
        }
        st.primitives.push_back(p);
    }
    for (size_t i = 0; i < s.lights.size(); ++i) {
        const LightSpec& spec = s.lights[i];
        Vec3 intensity = spec.intensity;
        Vec3 pos = spec.position;
        for (const auto& t : s.tracks) {
            if (t.target != Track::Light || t.id != static_cast<int>(i)) continue;
            intensity = evalTrackVec(t.keys, Keyframe::Intensity, time, intensity);
            pos = evalTrackVec(t.keys, Keyframe::Position, time, pos);
        }
        if (spec.kind == "sky") {
            st.sky += intensity;
            continue;
        }
        Light l;
        l.kind = spec.kind == "point" ? LightKind::Point : LightKind::Directional;
        l.position = pos;
        l.direction = normalize(spec.direction);
        l.intensity = intensity;
        st.lights.push_back(l);
    }
    return st;
}

inline Camera buildCamera(const CameraSpec& spec) {
    return Camera::lookAt(spec.position, spec.lookAt, spec.up, spec.fovY);
}

}  // namespace sdfgi
