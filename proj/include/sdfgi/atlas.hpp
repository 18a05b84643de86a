#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "sdfgi/octahedral.hpp"
#include "sdfgi/vec.hpp"

namespace sdfgi {

// Irradiance atlas for one cascade: per probe an (R+2)^2 float RGB tile, the
// extra ring duplicating texels across the octahedral seams so plain bilinear
// filtering is seamless. Probes are stored in grid-raster order.
class ProbeAtlas {
public:
    ProbeAtlas() = default;
    ProbeAtlas(int probeCount, int res) : res_(res), tile_(res + 2), count_(probeCount) {
        data_.assign(static_cast<size_t>(count_) * tile_ * tile_ * 3, 0.0f);
    }

    int res() const { return res_; }
    int tileSize() const { return tile_; }
    int probeCount() const { return count_; }
    const std::vector<float>& raw() const { return data_; }

    Vec3 texel(int probe, int x, int y) const {  // interior coordinates [0, res)
        const float* p = at(probe, x + 1, y + 1);
        return {p[0], p[1], p[2]};
    }

    void setTexel(int probe, int x, int y, const Vec3& v) {
        float* p = at(probe, x + 1, y + 1);
        p[0] = static_cast<float>(v.x);
        p[1] = static_cast<float>(v.y);
        p[2] = static_cast<float>(v.z);
    }

    // Duplicate interior texels into the border ring using the octahedral wrap:
    // edges copy the adjacent interior row/column reversed, corners copy the
    // diagonally opposite interior corner.
    void fillBorder(int probe) {
        int r = res_;
        for (int i = 1; i <= r; ++i) {
            copy(probe, i, 0, r + 1 - i, 1);          // bottom
            copy(probe, i, r + 1, r + 1 - i, r);      // top
            copy(probe, 0, i, 1, r + 1 - i);          // left
            copy(probe, r + 1, i, r, r + 1 - i);      // right
        }
        copy(probe, 0, 0, r, r);
        copy(probe, r + 1, 0, 1, r);
        copy(probe, 0, r + 1, r, 1);
        copy(probe, r + 1, r + 1, 1, 1);
    }

    // Bilinear lookup at uv in [0,1]^2 (octahedral coordinates of a direction).
    Vec3 sampleBilinear(int probe, const Vec2& uv) const {
        double cx = clamp01(uv.x) * res_ + 1.0;  // continuous coords in tile space
        double cy = clamp01(uv.y) * res_ + 1.0;
        int x0 = static_cast<int>(std::floor(cx - 0.5));
        int y0 = static_cast<int>(std::floor(cy - 0.5));
        double tx = cx - 0.5 - x0;
        double ty = cy - 0.5 - y0;
        x0 = std::clamp(x0, 0, tile_ - 2);
        y0 = std::clamp(y0, 0, tile_ - 2);
        auto fetch = [&](int x, int y) {
            const float* p = at(probe, x, y);
            return Vec3{p[0], p[1], p[2]};
        };
        Vec3 a = lerp(fetch(x0, y0), fetch(x0 + 1, y0), tx);
        Vec3 b = lerp(fetch(x0, y0 + 1), fetch(x0 + 1, y0 + 1), tx);
        return lerp(a, b, ty);
    }

    Vec3 sampleDir(int probe, const Vec3& dir) const {
        return sampleBilinear(probe, octEncode(dir));
    }

    void clear() { std::fill(data_.begin(), data_.end(), 0.0f); }

    bool operator==(const ProbeAtlas& o) const {
        return res_ == o.res_ && count_ == o.count_ && data_ == o.data_;
    }

    // Flat binary dump: 16-byte header (magic "SDFA", u32 version, u32 R,
    // u32 probe count) followed by the raw float tiles.
    bool dump(const std::string& path) const {
        FILE* f = std::fopen(path.c_str(), "wb");
        if (!f) return false;
        uint32_t version = 1, r = static_cast<uint32_t>(res_),
                 n = static_cast<uint32_t>(count_);
        bool ok = std::fwrite("SDFA", 1, 4, f) == 4 && std::fwrite(&version, 4, 1, f) == 1 &&
                  std::fwrite(&r, 4, 1, f) == 1 && std::fwrite(&n, 4, 1, f) == 1 &&
                  std::fwrite(data_.data(), sizeof(float), data_.size(), f) == data_.size();
        std::fclose(f);
        return ok;
    }

    static bool load(const std::string& path, ProbeAtlas& out) {
        FILE* f = std::fopen(path.c_str(), "rb");
        if (!f) return false;
        char magic[4];
        uint32_t version = 0, r = 0, n = 0;
        bool ok = std::fread(magic, 1, 4, f) == 4 && std::memcmp(magic, "SDFA", 4) == 0 &&
                  std::fread(&version, 4, 1, f) == 1 && std::fread(&r, 4, 1, f) == 1 &&
                  std::fread(&n, 4, 1, f) == 1;
        if (ok) {
            out = ProbeAtlas(static_cast<int>(n), static_cast<int>(r));
            ok = std::fread(out.data_.data(), sizeof(float), out.data_.size(), f) ==
                 out.data_.size();
        }
        std::fclose(f);
        return ok;
    }

private:
    const float* at(int probe, int x, int y) const {
        return &data_[((static_cast<size_t>(probe) * tile_ + y) * tile_ + x) * 3];
    }
    float* at(int probe, int x, int y) {
        return &data_[((static_cast<size_t>(probe) * tile_ + y) * tile_ + x) * 3];
    }
    void copy(int probe, int dstX, int dstY, int srcX, int srcY) {
        std::memcpy(at(probe, dstX, dstY), at(probe, srcX, srcY), 3 * sizeof(float));
    }

    int res_ = 0;
    int tile_ = 0;
    int count_ = 0;
    std::vector<float> data_;
};

}  // namespace sdfgi
