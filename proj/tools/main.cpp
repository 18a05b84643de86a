// Batch CLI: render scenes with the probe pipeline, benchmark the cluster
// acceleration, compare against the path-traced reference, and dump probe
// atlases. See README.md for the scene format and output layouts.

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "sdfgi/bvh_baseline.hpp"
#include "sdfgi/oracle.hpp"
#include "sdfgi/pipeline.hpp"

using namespace sdfgi;
namespace fs = std::filesystem;

namespace {

struct CommonOpts {
    std::string scenePath;
    int width = 480, height = 270;
    int threads = hardwareThreads();
    int seed = -1;
    std::vector<std::string> overrides;
    bool deterministic = false;
};

void addCommon(CLI::App* cmd, CommonOpts& o, bool withSize = true) {
    cmd->add_option("--scene", o.scenePath, "scene file")->required();
    if (withSize) {
        cmd->add_option("--width", o.width, "render width");
        cmd->add_option("--height", o.height, "render height");
    }
    cmd->add_option("--threads", o.threads, "worker threads");
    cmd->add_option("--seed", o.seed, "override the scene's RNG seed");
    cmd->add_option("--set", o.overrides,
                    "config override, e.g. --set \"hysteresis 0.8\" (repeatable)");
    cmd->add_flag("--deterministic", o.deterministic,
                  "single-threaded reproducible mode");
}

SceneFile loadWithOverrides(const CommonOpts& o) {
    SceneFile f = loadSceneFile(o.scenePath);
    if (!o.overrides.empty()) {
        std::string text = serializeScene(f) + "\nconfig {\n";
        for (const auto& s : o.overrides) text += "  " + s + "\n";
        text += "}\n";
        f = parseScene(text);
    }
    if (o.seed >= 0) f.config.seed = static_cast<uint64_t>(o.seed);
    return f;
}

std::string frameName(const std::string& dir, int frame, const char* ext) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "frame_%04d.%s", frame, ext);
    return (fs::path(dir) / buf).string();
}

double meanLuminance(const ImageRgb& img, const GBuffer* gb = nullptr) {
    double sum = 0;
    int n = 0;
    for (size_t i = 0; i < img.pixels.size(); ++i) {
        if (gb && gb->pixels[i].sky()) continue;
        sum += luminance(img.pixels[i]);
        ++n;
    }
    return n ? sum / n : 0.0;
}

int runRender(const CommonOpts& o, int frames, const std::string& outDir, bool hdr,
              bool dumpAtlas) {
    SceneFile f = loadWithOverrides(o);
    std::error_code ec;
    fs::create_directories(outDir, ec);
    int threads = o.deterministic ? 1 : o.threads;
    Renderer renderer(std::move(f), o.width, o.height, threads);

    std::ofstream metrics(fs::path(outDir) / "metrics.csv");
    if (!metrics) {
        std::cerr << "cannot write metrics in " << outDir << "\n";
        return 1;
    }
    metrics << FrameMetrics::csvHeader() << "\n";
    for (int frame = 0; frame < frames; ++frame) {
        FrameMetrics m = renderer.renderFrame();
        metrics << m.csvRow() << "\n";
        if (!writePpm(renderer.image(), frameName(outDir, frame, "ppm"),
                      renderer.config().exposure)) {
            std::cerr << "cannot write frame " << frame << "\n";
            return 1;
        }
        if (hdr && !writeHdr(renderer.image(), frameName(outDir, frame, "sdfi"))) {
            std::cerr << "cannot write HDR frame " << frame << "\n";
            return 1;
        }
    }
    if (dumpAtlas) {
        const auto& atlases = renderer.readAtlases();
        for (size_t c = 0; c < atlases.size(); ++c) {
            std::string path =
                (fs::path(outDir) / ("atlas_c" + std::to_string(c) + ".sdfa")).string();
            if (!atlases[c].dump(path)) {
                std::cerr << "cannot write atlas " << path << "\n";
                return 1;
            }
        }
    }
    std::cout << "wrote " << frames << " frame(s) to " << outDir << "\n";
    return 0;
}

// Contact sheet of octahedral tiles: resX*resY tiles per row, one row per z.
ImageRgb atlasSheet(const ProbeAtlas& atlas, const CascadeVolume& cascade, double exposure) {
    int t = atlas.tileSize();
    int cols = cascade.resX * cascade.resY;
    int rows = cascade.resZ;
    ImageRgb img(cols * t, rows * t);
    for (int p = 0; p < atlas.probeCount(); ++p) {
        int col = p % cols, row = p / cols;
        for (int y = 0; y < t; ++y)
            for (int x = 0; x < t; ++x) {
                Vec3 v = atlas.sampleBilinear(
                    p, {(x - 0.5) / atlas.res(), (y - 0.5) / atlas.res()});
                img.at(col * t + x, row * t + y) = v * exposure;
            }
    }
    return img;
}

int runDumpProbes(const CommonOpts& o, int frames, const std::string& outDir) {
    SceneFile f = loadWithOverrides(o);
    std::error_code ec;
    fs::create_directories(outDir, ec);
    Renderer renderer(std::move(f), o.width, o.height,
                      o.deterministic ? 1 : o.threads);
    for (int frame = 0; frame < frames; ++frame) renderer.renderFrame();
    const auto& atlases = renderer.readAtlases();
    for (size_t c = 0; c < atlases.size(); ++c) {
        std::string bin = (fs::path(outDir) / ("atlas_c" + std::to_string(c) + ".sdfa")).string();
        std::string ppm = (fs::path(outDir) / ("atlas_c" + std::to_string(c) + ".ppm")).string();
        if (!atlases[c].dump(bin) ||
            !writePpm(atlasSheet(atlases[c], renderer.cascades()[c], 0.25), ppm)) {
            std::cerr << "cannot write atlas dump for cascade " << c << "\n";
            return 1;
        }
        std::cout << bin << "\n" << ppm << "\n";
    }
    return 0;
}

struct BenchRow {
    std::string mode, strategy;
    int rep;
    double seconds;
    uint64_t queries;
};

template <typename QueryFn>
uint64_t traceWorkload(const std::vector<Vec3>& origins, const std::vector<Vec3>& dirs,
                       int raysPerOrigin, double tMax, double eps, QueryFn&& query) {
    uint64_t queries = 0;
    for (size_t pi = 0; pi < origins.size(); ++pi) {
        for (int r = 0; r < raysPerOrigin; ++r) {
            const Vec3& dir = dirs[pi * raysPerOrigin + r];
            double t = 0, lastD = kInf;
            for (int step = 0; step < 96; ++step) {
                double d = query(origins[pi] + dir * t,
                                 lastD == kInf ? kInf : 2 * lastD);
                ++queries;
                if (d < eps) break;
                t += d;
                lastD = d;
                if (t > tMax) break;
            }
        }
    }
    return queries;
}

int runBench(const CommonOpts& o, const std::string& mode, int nQueries, int reps,
             const std::string& outPath) {
    SceneFile f = loadWithOverrides(o);
    SceneState state = sceneAtTime(f, 0);
    Camera cam = buildCamera(f.camera);
    ActiveScene scene = cullAndLod(state.primitives, cam.position, f.lodDistances,
                                   {f.config.maxPerCluster, f.config.mergeRadius});
    scene.lights = state.lights;
    scene.sky = state.sky;
    std::cout << "scene: " << scene.primitives.size() << " primitives, "
              << scene.clusters.size() << " clusters\n";

    std::vector<BenchRow> rows;
    using Clock = std::chrono::steady_clock;
    auto timeIt = [&](auto&& fn) {
        auto t0 = Clock::now();
        uint64_t q = fn();
        auto t1 = Clock::now();
        return std::make_pair(std::chrono::duration<double>(t1 - t0).count(), q);
    };

    if (mode == "visibility-budget") {
        Renderer renderer(f, o.width, o.height, o.threads);
        double worst = 0;
        for (int frame = 0; frame < reps; ++frame) {
            FrameMetrics m = renderer.renderFrame();
            rows.push_back({"visibility-budget", "pipeline", frame, m.tVisibilityMs / 1e3,
                            static_cast<uint64_t>(m.visTracesPerPixel * o.width * o.height)});
            std::cout << "frame " << frame << " vis traces/pixel " << m.visTracesPerPixel
                      << "\n";
            worst = std::max(worst, m.visTracesPerPixel);
        }
        std::cout << "max traces/pixel " << worst << (worst <= 0.25 ? "  (<= 0.25)" : "")
                  << "\n";
    } else {
        DistanceBvh bvh(scene.primitives);

        // workload A: uniform random point queries in the inflated scene bounds
        Aabb bounds;
        for (const auto& c : scene.clusters)
            if (!c.unbounded) bounds.expand(c.aabb);
        bounds = bounds.inflated(2.0);
        Rng rng(f.config.seed, 0xbe7c4);
        std::vector<Vec3> points(nQueries);
        for (auto& p : points)
            p = {rng.uniform(bounds.lo.x, bounds.hi.x), rng.uniform(bounds.lo.y, bounds.hi.y),
                 rng.uniform(bounds.lo.z, bounds.hi.z)};

        // workload B: the probe-update ray set (relocated probes, Fibonacci dirs)
        CascadeVolume cascade = makeCascade(f.cascade.resX, f.cascade.resY, f.cascade.resZ,
                                            f.cascade.spacing, 0, cam.position);
        updateProbePositions(cascade, scene, f.config.threshold1(cascade.spacing),
                             f.config.threshold2(cascade.spacing), f.config.maxDescentSteps);
        std::vector<Vec3> origins;
        std::vector<Vec3> dirs;
        int raysPerProbe = f.config.nRaysFull;
        for (int i = 0; i < cascade.probeCount(); ++i) {
            if (!cascade.probes[i].alive) continue;
            origins.push_back(cascade.probes[i].pos);
            auto pd = sampleDirections(raysPerProbe, 0, i, f.config.seed);
            dirs.insert(dirs.end(), pd.begin(), pd.end());
        }

        double volatile sink = 0;  // keep the query results alive
        auto pointPass = [&](auto&& query) {
            return [&, query]() -> uint64_t {
                double acc = 0;
                for (const Vec3& p : points) acc += query(p, kInf);
                sink = acc;
                return points.size();
            };
        };
        auto tracePass = [&](auto&& query) {
            return [&, query]() -> uint64_t {
                return traceWorkload(origins, dirs, raysPerProbe, f.config.rayTMax,
                                     f.config.surfaceEpsilon, query);
            };
        };

        auto clusterQ = [&](const Vec3& p, double init) {
            return querySceneSdf(scene, p, init);
        };
        auto naiveQ = [&](const Vec3& p, double) { return querySceneSdfNaive(scene, p); };
        auto bvhQ = [&](const Vec3& p, double init) { return bvh.query(p, init); };

        for (int rep = 0; rep < reps; ++rep) {
            auto [cs, cq] = timeIt(pointPass(clusterQ));
            rows.push_back({"points", "cluster", rep, cs, cq});
            auto [ns, nq] = timeIt(pointPass(naiveQ));
            rows.push_back({"points", "naive", rep, ns, nq});
            auto [cts, ctq] = timeIt(tracePass(clusterQ));
            rows.push_back({"probe-update", "cluster", rep, cts, ctq});
            auto [nts, ntq] = timeIt(tracePass(naiveQ));
            rows.push_back({"probe-update", "naive", rep, nts, ntq});
            if (mode == "cluster-vs-bvh") {
                auto [bs, bq] = timeIt(pointPass(bvhQ));
                rows.push_back({"points", "bvh", rep, bs, bq});
                auto [bts, btq] = timeIt(tracePass(bvhQ));
                rows.push_back({"probe-update", "bvh", rep, bts, btq});
            }
        }

        auto medianOf = [&](const std::string& m, const std::string& s) {
            std::vector<double> v;
            for (auto& r : rows)
                if (r.mode == m && r.strategy == s) v.push_back(r.seconds);
            std::sort(v.begin(), v.end());
            double med = v[v.size() / 2];
            std::vector<double> dev;
            for (double x : v) dev.push_back(std::fabs(x - med));
            std::sort(dev.begin(), dev.end());
            return std::make_pair(med, dev[dev.size() / 2]);
        };
        for (const char* m : {"points", "probe-update"}) {
            auto [cm, cmad] = medianOf(m, "cluster");
            auto [nm, nmad] = medianOf(m, "naive");
            std::cout << m << ": cluster median " << cm << "s (mad " << cmad << "), naive "
                      << nm << "s (mad " << nmad << "), speedup " << nm / cm << "x\n";
            if (mode == "cluster-vs-bvh") {
                auto [bm, bmad] = medianOf(m, "bvh");
                std::cout << m << ": bvh median " << bm << "s (mad " << bmad
                          << "), cluster speedup over bvh " << bm / cm << "x\n";
            }
        }
    }

    if (!outPath.empty()) {
        std::ofstream out(outPath);
        if (!out) {
            std::cerr << "cannot write " << outPath << "\n";
            return 1;
        }
        out << "mode,strategy,rep,seconds,queries\n";
        for (auto& r : rows)
            out << r.mode << "," << r.strategy << "," << r.rep << "," << r.seconds << ","
                << r.queries << "\n";
    }
    return 0;
}

int runCompare(const CommonOpts& o, int frames, int spp, int bounces,
               const std::string& outDir, bool noGi) {
    SceneFile f = loadWithOverrides(o);
    std::error_code ec;
    fs::create_directories(outDir, ec);

    Renderer renderer(f, o.width, o.height, o.threads);
    renderer.setGiEnabled(!noGi);
    for (int frame = 0; frame < frames; ++frame) renderer.renderFrame();
    const ImageRgb& oursIndirect = renderer.indirect();
    const GBuffer& gb = renderer.gbuffer();

    SceneState state = sceneAtTime(f, static_cast<double>(frames - 1) / f.config.fps);
    Camera cam = buildCamera(f.camera);
    ActiveScene scene = cullAndLod(state.primitives, cam.position, f.lodDistances,
                                   {f.config.maxPerCluster, f.config.mergeRadius});
    scene.lights = state.lights;
    scene.sky = state.sky;

    oracle::Params prm;
    prm.spp = spp;
    prm.maxBounces = bounces;
    prm.seed = f.config.seed;
    prm.surfaceEpsilon = f.config.surfaceEpsilon;
    prm.tMax = f.config.rayTMax;
    std::cout << "oracle full render (" << spp << " spp)...\n";
    ImageRgb oracleFull =
        oracle::pathTraceImage(scene, cam, o.width, o.height, prm, nullptr, o.threads);
    oracle::Params dprm = prm;
    dprm.maxBounces = 1;
    ImageRgb oracleDirect =
        oracle::pathTraceImage(scene, cam, o.width, o.height, dprm, nullptr, o.threads);

    ImageRgb oracleIndirect(o.width, o.height);
    for (size_t i = 0; i < oracleIndirect.pixels.size(); ++i)
        oracleIndirect.pixels[i] = vmax(oracleFull.pixels[i] - oracleDirect.pixels[i], Vec3(0));

    // relative error of the indirect component over shaded pixels, with a floor
    // at 5% of the mean oracle indirect so near-black pixels cannot blow up
    double meanOracle = meanLuminance(oracleIndirect, &gb);
    double floor = std::max(1e-9, 0.05 * meanOracle);
    std::vector<double> errs;
    ImageRgb diff(o.width, o.height);
    for (size_t i = 0; i < oracleIndirect.pixels.size(); ++i) {
        if (gb.pixels[i].sky()) continue;
        double ours = luminance(oursIndirect.pixels[i]);
        double ref = luminance(oracleIndirect.pixels[i]);
        double e = std::fabs(ours - ref) / std::max(ref, floor);
        errs.push_back(e);
        diff.pixels[i] = Vec3(e);
    }
    std::sort(errs.begin(), errs.end());
    double mean = 0;
    for (double e : errs) mean += e;
    mean = errs.empty() ? 0 : mean / errs.size();
    double p95 = errs.empty() ? 0 : errs[static_cast<size_t>(0.95 * (errs.size() - 1))];

    bool ok = writeHdr(oursIndirect, (fs::path(outDir) / "ours_indirect.sdfi").string()) &&
              writeHdr(oracleIndirect, (fs::path(outDir) / "oracle_indirect.sdfi").string()) &&
              writeHdr(oracleFull, (fs::path(outDir) / "oracle_full.sdfi").string()) &&
              writePpm(diff, (fs::path(outDir) / "difference.ppm").string(), 0.5) &&
              writePpm(renderer.image(), (fs::path(outDir) / "ours_full.ppm").string(),
                       f.config.exposure) &&
              writePpm(oracleFull, (fs::path(outDir) / "oracle_full.ppm").string(),
                       f.config.exposure);
    std::ofstream report(fs::path(outDir) / "report.txt");
    report << "pixels " << errs.size() << "\nmean_rel_error " << mean << "\np95_rel_error "
           << p95 << "\nmean_oracle_indirect_luminance " << meanOracle << "\n";
    ok = ok && report.good();
    std::cout << "indirect mean rel error " << mean << ", p95 " << p95 << "\n";
    if (!ok) {
        std::cerr << "failed writing outputs to " << outDir << "\n";
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SDF-based dynamic diffuse GI renderer"};
    app.require_subcommand(1);

    CommonOpts renderOpts, benchOpts, compareOpts, dumpOpts;
    int renderFrames = 64, benchQueries = 1000000, benchReps = 10;
    int compareFrames = 128, compareSpp = 512, compareBounces = 16, dumpFrames = 32;
    std::string renderOut = "out", benchMode = "cluster-vs-naive", benchOut, compareOut =
        "compare_out", dumpOut = "probes_out";
    bool renderHdr = false, renderDumpAtlas = false, compareNoGi = false;

    CLI::App* render = app.add_subcommand("render", "render frames with the probe pipeline");
    addCommon(render, renderOpts);
    render->add_option("--frames", renderFrames, "frame count");
    render->add_option("--out", renderOut, "output directory");
    render->add_flag("--hdr", renderHdr, "also write raw float images");
    render->add_flag("--dump-atlas", renderDumpAtlas, "write final probe atlases");

    CLI::App* bench = app.add_subcommand("bench", "benchmark the acceleration structure");
    addCommon(bench, benchOpts);
    bench->add_option("--mode", benchMode, "cluster-vs-naive | cluster-vs-bvh | visibility-budget")
        ->check(CLI::IsMember({"cluster-vs-naive", "cluster-vs-bvh", "visibility-budget"}));
    bench->add_option("--queries", benchQueries, "random point queries per rep");
    bench->add_option("--reps", benchReps, "repetitions (or frames for visibility-budget)");
    bench->add_option("--out", benchOut, "write machine-readable rows here");

    CLI::App* compare = app.add_subcommand("compare", "error report against the path tracer");
    addCommon(compare, compareOpts);
    compare->add_option("--frames", compareFrames, "pipeline frames before measuring");
    compare->add_option("--spp", compareSpp, "oracle samples per pixel");
    compare->add_option("--bounces", compareBounces, "oracle bounce cap");
    compare->add_option("--out", compareOut, "output directory");
    compare->add_flag("--no-gi", compareNoGi, "disable probe GI (baseline sanity)");

    CLI::App* dump = app.add_subcommand("dump-probes", "run frames, then dump probe atlases");
    addCommon(dump, dumpOpts);
    dump->add_option("--frames", dumpFrames, "frames to run first");
    dump->add_option("--out", dumpOut, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (render->parsed())
            return runRender(renderOpts, renderFrames, renderOut, renderHdr, renderDumpAtlas);
        if (bench->parsed())
            return runBench(benchOpts, benchMode, benchQueries, benchReps, benchOut);
        if (compare->parsed())
            return runCompare(compareOpts, compareFrames, compareSpp, compareBounces,
                              compareOut, compareNoGi);
        if (dump->parsed()) return runDumpProbes(dumpOpts, dumpFrames, dumpOut);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
