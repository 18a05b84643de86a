#pragma once

#include <chrono>
#include <string>

#include "sdfgi/scene_file.hpp"
#include "sdfgi/shading.hpp"

namespace sdfgi {

struct FrameMetrics {
    int frame = 0;
    int activePrimitives = 0;
    int clusters = 0;
    int probesTotal = 0;
    int probesUpdated = 0;
    int relocated = 0;
    int rejected = 0;
    int dead = 0;
    double tCullMs = 0, tProbePosMs = 0, tProbeUpdateMs = 0, tGBufferMs = 0;
    double tVisibilityMs = 0, tGiResolveMs = 0, tContactMs = 0, tComposeMs = 0;
    double visTracesPerPixel = 0;
    double jitterMaxTexelDelta = 0;
    TraceStats stats;

    static std::string csvHeader() {
        return "frame,active_primitives,clusters,probes_total,probes_updated,relocated,"
               "rejected,dead,t_cull_ms,t_probe_pos_ms,t_probe_update_ms,t_gbuffer_ms,"
               "t_visibility_ms,t_gi_resolve_ms,t_contact_ms,t_compose_ms,"
               "vis_traces_per_pixel,jitter_max_texel_delta";
    }

    std::string csvRow() const {
        char buf[512];
        std::snprintf(buf, sizeof(buf),
                      "%d,%d,%d,%d,%d,%d,%d,%d,%.3f,%.3f,%.3f,%.3f,%.3f,%.3f,%.3f,%.3f,%.6f,"
                      "%.6g",
                      frame, activePrimitives, clusters, probesTotal, probesUpdated, relocated,
                      rejected, dead, tCullMs, tProbePosMs, tProbeUpdateMs, tGBufferMs,
                      tVisibilityMs, tGiResolveMs, tContactMs, tComposeMs, visTracesPerPixel,
                      jitterMaxTexelDelta);
        return buf;
    }
};

// The whole per-frame pipeline, in stage order: scene instancing + cluster
// build, probe placement, scheduled probe updates, G-buffer, checkerboard
// visibility + probe interpolation, temporal resolve, contact pass, compose.
// Readers of probe irradiance always see the previous frame's atlas; buffers
// swap at frame end.
class Renderer {
public:
    Renderer(SceneFile file, int width, int height, int threads = 1)
        : file_(std::move(file)),
          cfg_(file_.config),
          width_(width),
          height_(height),
          threads_(threads) {
        camera_ = buildCamera(file_.camera);
        prevCamera_ = camera_;
        for (int level = 0; level < file_.cascade.levels; ++level)
            cascades_.push_back(makeCascade(file_.cascade.resX, file_.cascade.resY,
                                            file_.cascade.resZ, file_.cascade.spacing, level,
                                            camera_.position));
        for (int b = 0; b < 2; ++b)
            for (const auto& c : cascades_)
                atlas_[b].emplace_back(c.probeCount(), cfg_.octRes);
    }

    const RenderConfig& config() const { return cfg_; }
    RenderConfig& config() { return cfg_; }
    int frameIndex() const { return frame_; }
    const Camera& camera() const { return camera_; }
    void setCamera(const Camera& cam) { camera_ = cam; }
    void setGiEnabled(bool on) { giEnabled_ = on; }

    const std::vector<CascadeVolume>& cascades() const { return cascades_; }
    const std::vector<ProbeAtlas>& readAtlases() const { return atlas_[readIdx_]; }
    const ActiveScene& activeScene() const { return active_; }
    const GBuffer& gbuffer() const { return gbuffer_; }
    const ImageRgb& image() const { return image_; }
    const ImageRgb& indirect() const { return indirect_; }
    const ImageRgb& resolvedIrradiance() const { return history_.irradiance; }

    FrameMetrics renderFrame() {
        using Clock = std::chrono::steady_clock;
        auto ms = [](Clock::time_point a, Clock::time_point b) {
            return std::chrono::duration<double, std::milli>(b - a).count();
        };
        FrameMetrics m;
        m.frame = frame_;
        TraceStats stats;

        // scene instancing, culling, cluster build
        auto t0 = Clock::now();
        double time = static_cast<double>(frame_) / cfg_.fps;
        SceneState state = sceneAtTime(file_, time);
        active_ = cullAndLod(state.primitives, camera_.position, file_.lodDistances,
                             {cfg_.maxPerCluster, cfg_.mergeRadius});
        active_.lights = state.lights;
        active_.sky = state.sky;
        active_.frameIndex = frame_;
        m.activePrimitives = static_cast<int>(active_.primitives.size());
        m.clusters = static_cast<int>(active_.clusters.size());
        auto t1 = Clock::now();
        m.tCullMs = ms(t0, t1);

        // probe placement
        for (size_t ci = 0; ci < cascades_.size(); ++ci) {
            if (recenterCascade(cascades_[ci], camera_.position)) {
                atlas_[0][ci].clear();
                atlas_[1][ci].clear();
            }
            auto rep = updateProbePositions(cascades_[ci], active_,
                                            cfg_.threshold1(cascades_[ci].spacing),
                                            cfg_.threshold2(cascades_[ci].spacing),
                                            cfg_.maxDescentSteps, &stats, cfg_.gradientStep);
            m.relocated += rep.relocated;
            m.rejected += rep.rejected;
            m.dead += rep.dead;
            m.probesTotal += cascades_[ci].probeCount();
        }
        auto t2 = Clock::now();
        m.tProbePosMs = ms(t1, t2);

        int writeIdx = 1 - readIdx_;
        IrradianceField prevField{&cascades_, &atlas_[readIdx_]};

        if (giEnabled_) {
            // scheduled probe updates, writing the back buffer
            atlas_[writeIdx] = atlas_[readIdx_];
            int budget = cfg_.probeBudget > 0 ? cfg_.probeBudget : m.probesTotal;
            auto refs = selectProbesForUpdate(cascades_, camera_.position, camera_.forward,
                                              budget, frame_);
            m.probesUpdated = static_cast<int>(refs.size());
            std::vector<TraceStats> chunkStats(std::max(1, threads_));
            std::vector<double> chunkJitter(std::max(1, threads_), 0.0);
            parallelFor(0, static_cast<int64_t>(refs.size()), threads_,
                        [&](int64_t i, int worker) {
                            const ProbeRef& ref = refs[i];
                            if (!cascades_[ref.cascade].probes[ref.index].alive) return;
                            auto r = updateProbe(active_, cascades_[ref.cascade], ref.index,
                                                 prevField, atlas_[writeIdx][ref.cascade],
                                                 cfg_.nRaysFull, cfg_, frame_,
                                                 &chunkStats[worker]);
                            chunkJitter[worker] =
                                std::max(chunkJitter[worker], r.maxTexelDelta);
                        });
            for (auto& s : chunkStats) stats.merge(s);
            for (double j : chunkJitter) m.jitterMaxTexelDelta = std::max(m.jitterMaxTexelDelta, j);
        }
        auto t3 = Clock::now();
        m.tProbeUpdateMs = ms(t2, t3);

        // primary visibility
        gbuffer_ = renderGBuffer(active_, camera_, prevCamera_, width_, height_, cfg_, &stats,
                                 threads_);
        auto t4 = Clock::now();
        m.tGBufferMs = ms(t3, t4);

        // checkerboarded probe visibility and sparse GI
        SparseGi sparse;
        if (giEnabled_) {
            HalfResDepth half = downsampleDepthCheckerboard(gbuffer_);
            SelectedPixels sel = selectVisibilityPixels(half, frame_);
            VisibilityWork work = buildVisibilityTasks(cascades_, gbuffer_, half, sel, cfg_);
            uint64_t visBefore = stats.visibilityTraces;
            std::vector<double> vis =
                runVisibilityTasks(active_, cascades_, work, cfg_, &stats, threads_);
            m.visTracesPerPixel =
                static_cast<double>(stats.visibilityTraces - visBefore) /
                (static_cast<double>(width_) * height_);
            sparse.width = sel.width;
            sparse.height = sel.height;
            sparse.irradiance.resize(work.pixels.size());
            sparse.anchorPixel.resize(work.pixels.size());
            sparse.valid.assign(work.pixels.size(), 0);
            for (size_t i = 0; i < work.pixels.size(); ++i) {
                int anchor = half.srcPixel[sel.halfResIndex[i]];
                sparse.anchorPixel[i] = anchor;
                PixelGiResult r = shadePixelGI(work.pixels[i], vis,
                                               gbuffer_.pixels[anchor].normal, prevField);
                sparse.irradiance[i] = r.irradiance;
                sparse.valid[i] = r.valid ? 1 : 0;
            }
        }
        auto t5 = Clock::now();
        m.tVisibilityMs = ms(t4, t5);

        // temporal resolve to full resolution
        ImageRgb resolvedE(width_, height_);
        if (giEnabled_)
            resolvedE = upsampleAndResolve(sparse, gbuffer_, history_, cascades_, prevField,
                                           cfg_, threads_);
        auto t6 = Clock::now();
        m.tGiResolveMs = ms(t5, t6);

        // contact pass
        if (giEnabled_) {
            double radius = cfg_.contactRadiusFrac * file_.cascade.spacing;
            indirect_ = contactGI(active_, gbuffer_, resolvedE, prevField, radius,
                                  cfg_.contactSamples, cfg_, &stats, threads_);
        } else {
            indirect_ = ImageRgb(width_, height_);
        }
        auto t7 = Clock::now();
        m.tContactMs = ms(t6, t7);

        image_ = composeFrame(active_, gbuffer_, indirect_, cfg_, &stats, threads_);
        auto t8 = Clock::now();
        m.tComposeMs = ms(t7, t8);

        // roll buffers
        history_.irradiance = std::move(resolvedE);
        history_.depth.resize(gbuffer_.pixels.size());
        for (size_t i = 0; i < gbuffer_.pixels.size(); ++i)
            history_.depth[i] = gbuffer_.pixels[i].depth;
        history_.valid = giEnabled_;
        prevCamera_ = camera_;
        if (giEnabled_) readIdx_ = writeIdx;
        ++frame_;
        m.stats = stats;
        return m;
    }

private:
    SceneFile file_;
    RenderConfig cfg_;
    int width_, height_, threads_;
    Camera camera_, prevCamera_;
    std::vector<CascadeVolume> cascades_;
    std::vector<ProbeAtlas> atlas_[2];
    int readIdx_ = 0;
    bool giEnabled_ = true;
    HistoryBuffers history_;
    ActiveScene active_;
    GBuffer gbuffer_;
    ImageRgb indirect_;
    ImageRgb image_;
    int frame_ = 0;
};

}  // namespace sdfgi
