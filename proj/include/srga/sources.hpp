#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "srga/image.hpp"
#include "srga/rng.hpp"

namespace srga {

/// Parameters of the dead-leaves source generator. Occluding textured discs
/// with a power-law radius density reproduce the scale-invariant statistics
/// of natural images well enough to stand in for photographic HR sources.
struct DeadLeavesParams {
    int width = 512;
    int height = 512;
    double min_radius = 2.0;
    double max_radius = 120.0;
    int discs = 6000;
    double max_texture_amplitude = 45.0;
    double grain = 3.0;  ///< std of per-pixel grain on the 0..255 scale
};

/// One dead-leaves image, a pure function of (params, seed).
inline RgbImage dead_leaves_image(const DeadLeavesParams& p, std::uint64_t seed) {
    Rng rng(seed);
    FloatImage img(p.width, p.height);
    const double bg[3] = {rng.uniform(0, 255), rng.uniform(0, 255), rng.uniform(0, 255)};
    for (int y = 0; y < p.height; ++y)
        for (int x = 0; x < p.width; ++x)
            for (int c = 0; c < 3; ++c) img.at(x, y, c) = bg[c];

    // Radius density ~ r^-3 on [min, max], sampled by inverting the CDF.
    const double a = 1.0 / (p.min_radius * p.min_radius);
    const double b = 1.0 / (p.max_radius * p.max_radius);
    for (int d = 0; d < p.discs; ++d) {
        const double r = 1.0 / std::sqrt(a - rng.uniform() * (a - b));
        const double cx = rng.uniform(-r, p.width + r);
        const double cy = rng.uniform(-r, p.height + r);
        double color[3];
        for (double& c : color) c = rng.uniform(0, 255);
        const double amp = rng.uniform(0, p.max_texture_amplitude);
        const double freq = rng.uniform(0.02, 0.45) * 2.0 * std::numbers::pi;
        const double orient = rng.uniform(0, std::numbers::pi);
        const double phase = rng.uniform(0, 2.0 * std::numbers::pi);
        const double fx = freq * std::cos(orient), fy = freq * std::sin(orient);

        const int x0 = std::max(0, static_cast<int>(std::floor(cx - r)));
        const int x1 = std::min(p.width - 1, static_cast<int>(std::ceil(cx + r)));
        const int y0 = std::max(0, static_cast<int>(std::floor(cy - r)));
        const int y1 = std::min(p.height - 1, static_cast<int>(std::ceil(cy + r)));
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const double dx = x - cx, dy = y - cy;
                if (dx * dx + dy * dy > r * r) continue;
                const double t = amp * std::sin(fx * x + fy * y + phase);
                for (int c = 0; c < 3; ++c) img.at(x, y, c) = color[c] + t;
            }
        }
    }
    if (p.grain > 0.0)
        for (double& v : img.data) v += p.grain * rng.normal();
    return quantize(img);
}

/// Writes `count` dead-leaves images as src_NNNN.png; image i uses the
/// stream stream_seed(seed, i). Returns the written paths.
inline std::vector<std::filesystem::path> write_dead_leaves_sources(const std::filesystem::path& out_dir,
                                                                    int count, std::uint64_t seed,
                                                                    const DeadLeavesParams& p = {}) {
    std::filesystem::create_directories(out_dir);
    std::vector<std::filesystem::path> paths;
    for (int i = 0; i < count; ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "src_%04d.png", i);
        const auto path = out_dir / name;
        write_png(path, dead_leaves_image(p, stream_seed(seed, static_cast<std::uint64_t>(i))));
        paths.push_back(path);
    }
    return paths;
}

}  // namespace srga
