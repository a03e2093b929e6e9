#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "srga/degrade.hpp"
#include "srga/error.hpp"
#include "srga/image.hpp"
#include "srga/parallel.hpp"

namespace srga {

inline constexpr int kHrPatchSize = 128;
inline constexpr int kLrPatchSize = 32;
inline constexpr int kPiesSubsetSize = 800;

/// HR patch plus where it was cut from.
struct SourcedPatch {
    RgbImage patch;
    std::string source_image;  ///< file name within the HR source directory
    int offset_x = 0;
    int offset_y = 0;
};

/// Cuts the first `count` non-overlapping HR patches from the PNGs of
/// `hr_dir`, visiting files in sorted order and patches in raster order.
inline std::vector<SourcedPatch> collect_hr_patches(const std::filesystem::path& hr_dir, std::size_t count,
                                                    int patch_size = kHrPatchSize) {
    std::vector<SourcedPatch> out;
    if (count == 0) return out;
    const auto files = list_pngs(hr_dir);
    for (const auto& file : files) {
        const RgbImage img = read_png(file);
        if (img.width < patch_size || img.height < patch_size) continue;
        for (int y = 0; y + patch_size <= img.height && out.size() < count; y += patch_size) {
            for (int x = 0; x + patch_size <= img.width && out.size() < count; x += patch_size) {
                SourcedPatch sp{RgbImage(patch_size, patch_size), file.filename().string(), x, y};
                for (int r = 0; r < patch_size; ++r) {
                    std::copy_n(&img.data[img.index(x, y + r, 0)], static_cast<std::size_t>(patch_size) * 3,
                                &sp.patch.data[sp.patch.index(0, r, 0)]);
                }
                out.push_back(std::move(sp));
            }
        }
        if (out.size() == count) return out;
    }
    throw DataError("insufficient source pixels in " + hr_dir.string() + ": need " + std::to_string(count) +
                    " patches of " + std::to_string(patch_size) + "px, found " + std::to_string(out.size()));
}

struct PiesEntry {
    std::string hr_path;  ///< relative to the dataset directory
    std::string lr_path;
    std::string source_image;
    int offset_x = 0;
    int offset_y = 0;
    std::optional<AnisoBlur> kernel;
};

struct PiesManifest {
    DegradationSpec spec;
    std::vector<PiesEntry> entries;
};

inline nlohmann::json spec_to_json(const DegradationSpec& s) {
    nlohmann::json j;
    j["text"] = to_string(s);
    j["name"] = dataset_name(s);
    switch (s.kind) {
        case DegradationKind::Clean:
            j["kind"] = "clean";
            break;
        case DegradationKind::IsoBlur:
            j["kind"] = "iso_blur";
            j["blur_width"] = s.blur_width;
            break;
        case DegradationKind::AnisoBlur:
            j["kind"] = "aniso_blur";
            if (s.aniso_random) {
                j["aniso"] = "random";
                j["aniso_sigma_range"] = {kAnisoSigmaMin, kAnisoSigmaMax};
                j["aniso_theta_range"] = {0.0, kAnisoThetaMax};
            } else {
                j["aniso"] = {{"sigma1", s.aniso.sigma1}, {"sigma2", s.aniso.sigma2}, {"theta", s.aniso.theta}};
            }
            j["kernel_size"] = kAnisoKernelSize;
            break;
        case DegradationKind::Noise:
            j["kind"] = "noise";
            j["noise_level"] = s.noise_level;
            break;
        case DegradationKind::BlurNoise:
            j["kind"] = "blur_noise";
            j["blur_width"] = s.blur_width;
            j["noise_level"] = s.noise_level;
            break;
        case DegradationKind::LuminanceShift:
            j["kind"] = "luminance_shift";
            j["lum_delta"] = s.lum_delta;
            break;
    }
    if (s.has_blur() && s.kind != DegradationKind::AnisoBlur) j["kernel_size"] = 2 * iso_kernel_radius(s.blur_width) + 1;
    if (s.has_noise()) j["noise_channels"] = "independent";
    if (s.kind != DegradationKind::LuminanceShift && s.lum_delta != 0.0) j["lum_delta"] = s.lum_delta;
    j["scale"] = s.scale;
    j["seed"] = s.seed;
    return j;
}

inline nlohmann::json to_json(const PiesManifest& m) {
    nlohmann::json j;
    j["spec"] = spec_to_json(m.spec);
    j["seed"] = m.spec.seed;
    j["scale"] = m.spec.scale;
    j["hr_size"] = kHrPatchSize;
    j["lr_size"] = kHrPatchSize / m.spec.scale;
    j["pipeline"] = "blur(HR) -> bicubic_down -> noise(LR) -> luminance(LR) -> quantize";
    j["count"] = m.entries.size();
    auto& entries = j["entries"] = nlohmann::json::array();
    for (const auto& e : m.entries) {
        nlohmann::json je{{"hr_path", e.hr_path},
                          {"lr_path", e.lr_path},
                          {"source_image", e.source_image},
                          {"source_offset", {e.offset_x, e.offset_y}}};
        if (e.kernel) je["kernel"] = {{"sigma1", e.kernel->sigma1}, {"sigma2", e.kernel->sigma2}, {"theta", e.kernel->theta}};
        entries.push_back(std::move(je));
    }
    return j;
}

/// LR patches (quantized) for every HR patch, patch i degraded with stream i.
inline std::vector<RgbImage> synthesize_lr(const std::vector<RgbImage>& hr, const DegradationSpec& spec,
                                           unsigned threads = 0) {
    validate(spec);
    std::vector<RgbImage> lr(hr.size());
    parallel_for(hr.size(), threads, [&](std::size_t i) { lr[i] = degrade(hr[i], spec, i); });
    return lr;
}

inline std::string patch_file_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%06zu.png", i);
    return buf;
}

/// Writes one PIES subset under out_dir: hr/*.png, lr/*.png, manifest.json.
inline PiesManifest synth_pies(const std::vector<SourcedPatch>& sources, const std::filesystem::path& out_dir,
                               const DegradationSpec& spec, std::size_t count, unsigned threads = 0) {
    namespace fs = std::filesystem;
    validate(spec);
    if (sources.size() < count) {
        throw DataError("insufficient source patches: need " + std::to_string(count) + ", have " +
                        std::to_string(sources.size()));
    }
    std::error_code ec;
    fs::create_directories(out_dir / "hr", ec);
    if (!ec) fs::create_directories(out_dir / "lr", ec);
    if (ec) throw IoError("cannot create output directory " + out_dir.string() + ": " + ec.message());

    PiesManifest manifest{spec, std::vector<PiesEntry>(count)};
    parallel_for(count, threads, [&](std::size_t i) {
        const auto& src = sources[i];
        const auto degraded = degrade_float(src.patch, spec, i);
        const std::string name = patch_file_name(i);
        write_png(out_dir / "hr" / name, src.patch);
        write_png(out_dir / "lr" / name, quantize(degraded.lr));
        manifest.entries[i] = {"hr/" + name, "lr/" + name, src.source_image, src.offset_x, src.offset_y,
                               degraded.kernel};
    });

    std::ofstream os(out_dir / "manifest.json");
    if (!os) throw IoError("cannot write " + (out_dir / "manifest.json").string());
    os << to_json(manifest).dump(2) << '\n';
    if (!os) throw IoError("cannot write " + (out_dir / "manifest.json").string());
    return manifest;
}

inline PiesManifest synth_pies(const std::filesystem::path& hr_dir, const std::filesystem::path& out_dir,
                               const DegradationSpec& spec, std::size_t count, unsigned threads = 0) {
    return synth_pies(collect_hr_patches(hr_dir, count), out_dir, spec, count, threads);
}

}  // namespace srga
