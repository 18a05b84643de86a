#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "sdfgi/vec.hpp"

namespace sdfgi {

struct ImageRgb {
    int width = 0, height = 0;
    std::vector<Vec3> pixels;

    ImageRgb() = default;
    ImageRgb(int w, int h) : width(w), height(h), pixels(static_cast<size_t>(w) * h) {}

    Vec3& at(int x, int y) { return pixels[static_cast<size_t>(y) * width + x]; }
    const Vec3& at(int x, int y) const { return pixels[static_cast<size_t>(y) * width + x]; }
};

// 8-bit binary PPM, exposure multiplier then gamma 2.2.
inline bool writePpm(const ImageRgb& img, const std::string& path, double exposure = 1.0,
                     double gamma = 2.2) {
    FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) return false;
    std::fprintf(f, "P6\n%d %d\n255\n", img.width, img.height);
    std::vector<unsigned char> row(static_cast<size_t>(img.width) * 3);
    double inv = 1.0 / gamma;
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            Vec3 c = img.at(x, y) * exposure;
            for (int k = 0; k < 3; ++k) {
                double v = std::pow(clamp01(c[k]), inv);
                row[x * 3 + k] = static_cast<unsigned char>(std::lround(v * 255.0));
            }
        }
        if (std::fwrite(row.data(), 1, row.size(), f) != row.size()) {
            std::fclose(f);
            return false;
        }
    }
    std::fclose(f);
    return true;
}

// Raw float32 HDR dump: 16-byte header (magic "SDFI", u32 width, u32 height,
// u32 channels=3) followed by row-major float triplets.
inline bool writeHdr(const ImageRgb& img, const std::string& path) {
    FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) return false;
    uint32_t w = static_cast<uint32_t>(img.width), h = static_cast<uint32_t>(img.height),
             ch = 3;
    bool ok = std::fwrite("SDFI", 1, 4, f) == 4 && std::fwrite(&w, 4, 1, f) == 1 &&
              std::fwrite(&h, 4, 1, f) == 1 && std::fwrite(&ch, 4, 1, f) == 1;
    std::vector<float> data;
    data.reserve(img.pixels.size() * 3);
    for (const Vec3& p : img.pixels) {
        data.push_back(static_cast<float>(p.x));
        data.push_back(static_cast<float>(p.y));
        data.push_back(static_cast<float>(p.z));
    }
    ok = ok && std::fwrite(data.data(), sizeof(float), data.size(), f) == data.size();
    std::fclose(f);
    return ok;
}

inline bool readHdr(const std::string& path, ImageRgb& out) {
    FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) return false;
    char magic[4];
    uint32_t w = 0, h = 0, ch = 0;
    bool ok = std::fread(magic, 1, 4, f) == 4 && std::memcmp(magic, "SDFI", 4) == 0 &&
              std::fread(&w, 4, 1, f) == 1 && std::fread(&h, 4, 1, f) == 1 &&
              std::fread(&ch, 4, 1, f) == 1 && ch == 3;
    if (ok) {
        std::vector<float> data(static_cast<size_t>(w) * h * 3);
        ok = std::fread(data.data(), sizeof(float), data.size(), f) == data.size();
        if (ok) {
            out = ImageRgb(static_cast<int>(w), static_cast<int>(h));
            for (size_t i = 0; i < out.pixels.size(); ++i)
                out.pixels[i] = {data[i * 3], data[i * 3 + 1], data[i * 3 + 2]};
        }
    }
    std::fclose(f);
    return ok;
}

}  // namespace sdfgi
