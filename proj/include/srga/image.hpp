#pragma once

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "srga/error.hpp"

namespace srga {

/// 8-bit RGB raster, row-major, channels interleaved.
struct RgbImage {
    static constexpr int channels = 3;

    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    RgbImage() = default;
    RgbImage(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h * channels, fill) {
        if (w < 0 || h < 0) throw DimensionError("negative image dimensions");
    }

    std::size_t index(int x, int y, int c) const {
        return (static_cast<std::size_t>(y) * width + x) * channels + c;
    }
    std::uint8_t& at(int x, int y, int c) { return data[index(x, y, c)]; }
    std::uint8_t at(int x, int y, int c) const { return data[index(x, y, c)]; }

    bool operator==(const RgbImage&) const = default;
};

/// A PIES patch is just a small RgbImage.
using ImagePatch = RgbImage;

/// Floating-point RGB raster on the 0..255 intensity scale. Degradations run
/// in this representation and are quantized once at the end.
struct FloatImage {
    static constexpr int channels = 3;

    int width = 0;
    int height = 0;
    std::vector<double> data;

    FloatImage() = default;
    FloatImage(int w, int h, double fill = 0.0)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h * channels, fill) {
        if (w < 0 || h < 0) throw DimensionError("negative image dimensions");
    }

    explicit FloatImage(const RgbImage& img)
        : width(img.width), height(img.height), data(img.data.begin(), img.data.end()) {}

    std::size_t index(int x, int y, int c) const {
        return (static_cast<std::size_t>(y) * width + x) * channels + c;
    }
    double& at(int x, int y, int c) { return data[index(x, y, c)]; }
    double at(int x, int y, int c) const { return data[index(x, y, c)]; }
};

/// Round half away from zero, then clamp to [0, 255].
inline std::uint8_t quantize_sample(double v) {
    const double r = std::round(v);
    return static_cast<std::uint8_t>(std::clamp(r, 0.0, 255.0));
}

inline RgbImage quantize(const FloatImage& img) {
    RgbImage out(img.width, img.height);
    std::transform(img.data.begin(), img.data.end(), out.data.begin(), quantize_sample);
    return out;
}

/// Tiles `image` with patch_size x patch_size windows every `stride` pixels in
/// raster order. Windows that would run past the border are dropped.
inline std::vector<RgbImage> extract_patches(const RgbImage& image, int patch_size, int stride = 0) {
    if (stride <= 0) stride = patch_size;
    if (patch_size <= 0) throw ParameterError("patch size must be positive");
    if (image.width < patch_size || image.height < patch_size) {
        throw DimensionError("image " + std::to_string(image.width) + "x" +
                             std::to_string(image.height) + " is smaller than patch size " +
                             std::to_string(patch_size));
    }
    std::vector<RgbImage> patches;
    for (int y = 0; y + patch_size <= image.height; y += stride) {
        for (int x = 0; x + patch_size <= image.width; x += stride) {
            RgbImage p(patch_size, patch_size);
            for (int r = 0; r < patch_size; ++r) {
                const auto* src = &image.data[image.index(x, y + r, 0)];
                std::copy_n(src, static_cast<std::size_t>(patch_size) * 3, &p.data[p.index(0, r, 0)]);
            }
            patches.push_back(std::move(p));
        }
    }
    return patches;
}

/// Number of patches extract_patches would return, without copying pixels.
inline std::size_t patch_count(int width, int height, int patch_size, int stride = 0) {
    if (stride <= 0) stride = patch_size;
    if (width < patch_size || height < patch_size) return 0;
    return static_cast<std::size_t>((width - patch_size) / stride + 1) *
           static_cast<std::size_t>((height - patch_size) / stride + 1);
}

// PNG I/O through libpng's simplified API. Any input PNG (gray, palette,
// alpha, 16-bit) is converted to 8-bit RGB on read.

inline RgbImage read_png(const std::filesystem::path& path) {
    png_image img{};
    img.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&img, path.string().c_str())) {
        throw IoError("cannot read PNG " + path.string() + ": " + img.message);
    }
    img.format = PNG_FORMAT_RGB;
    RgbImage out(static_cast<int>(img.width), static_cast<int>(img.height));
    if (!png_image_finish_read(&img, nullptr, out.data.data(), 0, nullptr)) {
        const std::string msg = img.message;
        png_image_free(&img);
        throw IoError("cannot decode PNG " + path.string() + ": " + msg);
    }
    return out;
}

inline void write_png(const std::filesystem::path& path, const RgbImage& image) {
    png_image img{};
    img.version = PNG_IMAGE_VERSION;
    img.width = static_cast<png_uint_32>(image.width);
    img.height = static_cast<png_uint_32>(image.height);
    img.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&img, path.string().c_str(), 0, image.data.data(), 0, nullptr)) {
        const std::string msg = img.message;
        png_image_free(&img);
        throw IoError("cannot write PNG " + path.string() + ": " + msg);
    }
}

/// Sorted list of *.png files in a directory (non-recursive).
inline std::vector<std::filesystem::path> list_pngs(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        auto ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
        if (ext == ".png") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

}  // namespace srga
