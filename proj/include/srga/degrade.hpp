#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "srga/degradation_spec.hpp"
#include "srga/error.hpp"
#include "srga/image.hpp"
#include "srga/rng.hpp"

namespace srga {

/// Side length of the anisotropic blur kernel.
inline constexpr int kAnisoKernelSize = 21;
/// Minimum half-width of the isotropic kernel (21x21 at small widths).
inline constexpr int kIsoKernelMinRadius = 10;

/// Square convolution kernel, row-major, odd side length.
struct Kernel2D {
    int size = 0;
    std::vector<double> weights;

    int radius() const { return size / 2; }
    double at(int dx, int dy) const {
        return weights[static_cast<std::size_t>(dy + radius()) * size + (dx + radius())];
    }
};

/// Isotropic half-width: 10 taps, widened to 4 sigma for wide kernels so the
/// truncated tail stays negligible.
inline int iso_kernel_radius(double sigma) {
    return std::max(kIsoKernelMinRadius, static_cast<int>(std::ceil(4.0 * sigma)));
}

/// Sampled 1-D Gaussian of width sigma, normalized to unit sum.
inline std::vector<double> gaussian_kernel_1d(double sigma) {
    if (!(sigma > 0.0)) throw ParameterError("blur width must be positive");
    const int r = iso_kernel_radius(sigma);
    std::vector<double> k(2 * r + 1);
    double sum = 0.0;
    for (int i = -r; i <= r; ++i) {
        k[i + r] = std::exp(-0.5 * i * i / (sigma * sigma));
        sum += k[i + r];
    }
    for (double& v : k) v /= sum;
    return k;
}

inline Kernel2D normalize(Kernel2D k) {
    double sum = 0.0;
    for (double v : k.weights) sum += v;
    for (double& v : k.weights) v /= sum;
    return k;
}

inline Kernel2D isotropic_kernel(double sigma) {
    const auto k1 = gaussian_kernel_1d(sigma);
    Kernel2D k{static_cast<int>(k1.size()), {}};
    k.weights.resize(k1.size() * k1.size());
    for (std::size_t y = 0; y < k1.size(); ++y)
        for (std::size_t x = 0; x < k1.size(); ++x) k.weights[y * k1.size() + x] = k1[y] * k1[x];
    return normalize(std::move(k));
}

/// 21x21 Gaussian with covariance R(theta) diag(s1^2, s2^2) R(theta)^T.
/// x runs along image columns, y along rows.
inline Kernel2D anisotropic_kernel(const AnisoBlur& a) {
    if (!(a.sigma1 > 0.0) || !(a.sigma2 > 0.0)) throw ParameterError("anisotropic widths must be positive");
    const double c = std::cos(a.theta), s = std::sin(a.theta);
    const double v1 = a.sigma1 * a.sigma1, v2 = a.sigma2 * a.sigma2;
    // Inverse covariance = R diag(1/v1, 1/v2) R^T.
    const double ixx = c * c / v1 + s * s / v2;
    const double iyy = s * s / v1 + c * c / v2;
    const double ixy = c * s * (1.0 / v1 - 1.0 / v2);

    Kernel2D k{kAnisoKernelSize, std::vector<double>(kAnisoKernelSize * kAnisoKernelSize)};
    const int r = k.radius();
    for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
            const double q = ixx * dx * dx + 2.0 * ixy * dx * dy + iyy * dy * dy;
            k.weights[static_cast<std::size_t>(dy + r) * k.size + (dx + r)] = std::exp(-0.5 * q);
        }
    }
    return normalize(std::move(k));
}

/// Mirror index into [0, n) without repeating the edge sample (… 2 1 | 0 1 2 … n-1 | n-2 …).
inline int reflect_index(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * (n - 1);
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - i;
}

/// Reflected source index for every position in [-r, n + r).
inline std::vector<int> reflect_table(int n, int r) {
    std::vector<int> t(static_cast<std::size_t>(n + 2 * r));
    for (int i = -r; i < n + r; ++i) t[static_cast<std::size_t>(i + r)] = reflect_index(i, n);
    return t;
}

inline FloatImage convolve(const FloatImage& img, const Kernel2D& k) {
    FloatImage out(img.width, img.height);
    const int r = k.radius();
    const auto tx = reflect_table(img.width, r);
    const auto ty = reflect_table(img.height, r);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            double acc[3] = {0.0, 0.0, 0.0};
            for (int dy = -r; dy <= r; ++dy) {
                const int sy = ty[static_cast<std::size_t>(y + dy + r)];
                for (int dx = -r; dx <= r; ++dx) {
                    const double w = k.at(dx, dy);
                    const std::size_t base = img.index(tx[static_cast<std::size_t>(x + dx + r)], sy, 0);
                    acc[0] += w * img.data[base];
                    acc[1] += w * img.data[base + 1];
                    acc[2] += w * img.data[base + 2];
                }
            }
            for (int c = 0; c < 3; ++c) out.at(x, y, c) = acc[c];
        }
    }
    return out;
}

inline FloatImage convolve_separable(const FloatImage& img, const std::vector<double>& k) {
    const int r = static_cast<int>(k.size() / 2);
    const auto tx = reflect_table(img.width, r);
    const auto ty = reflect_table(img.height, r);
    FloatImage tmp(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            double acc[3] = {0.0, 0.0, 0.0};
            for (int d = -r; d <= r; ++d) {
                const double w = k[static_cast<std::size_t>(d + r)];
                const std::size_t base = img.index(tx[static_cast<std::size_t>(x + d + r)], y, 0);
                acc[0] += w * img.data[base];
                acc[1] += w * img.data[base + 1];
                acc[2] += w * img.data[base + 2];
            }
            for (int c = 0; c < 3; ++c) tmp.at(x, y, c) = acc[c];
        }
    }
    FloatImage out(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            double acc[3] = {0.0, 0.0, 0.0};
            for (int d = -r; d <= r; ++d) {
                const double w = k[static_cast<std::size_t>(d + r)];
                const std::size_t base = tmp.index(x, ty[static_cast<std::size_t>(y + d + r)], 0);
                acc[0] += w * tmp.data[base];
                acc[1] += w * tmp.data[base + 1];
                acc[2] += w * tmp.data[base + 2];
            }
            for (int c = 0; c < 3; ++c) out.at(x, y, c) = acc[c];
        }
    }
    return out;
}

/// Blur kernel for a fixed-kernel blur spec.
inline Kernel2D blur_kernel(const DegradationSpec& spec) {
    switch (spec.kind) {
        case DegradationKind::IsoBlur:
        case DegradationKind::BlurNoise:
            return isotropic_kernel(spec.blur_width);
        case DegradationKind::AnisoBlur:
            if (spec.aniso_random) throw ParameterError("random anisotropic kernels are drawn per patch");
            return anisotropic_kernel(spec.aniso);
        default:
            throw ParameterError("degradation '" + to_string(spec) + "' has no blur kernel");
    }
}

/// Blurs the HR image. For random anisotropic specs pass the per-patch kernel
/// parameters in `drawn`.
inline FloatImage gaussian_blur(const FloatImage& img, const DegradationSpec& spec,
                                const AnisoBlur* drawn = nullptr) {
    switch (spec.kind) {
        case DegradationKind::IsoBlur:
        case DegradationKind::BlurNoise:
            return convolve_separable(img, gaussian_kernel_1d(spec.blur_width));
        case DegradationKind::AnisoBlur:
            if (spec.aniso_random) {
                if (!drawn) throw ParameterError("random anisotropic blur needs a drawn kernel");
                return convolve(img, anisotropic_kernel(*drawn));
            }
            return convolve(img, anisotropic_kernel(spec.aniso));
        default:
            throw ParameterError("degradation '" + to_string(spec) + "' does not blur");
    }
}

inline RgbImage gaussian_blur(const RgbImage& img, const DegradationSpec& spec) {
    return quantize(gaussian_blur(FloatImage(img), spec));
}

// ---------------------------------------------------------------------------
// MATLAB imresize-compatible bicubic downsampling.

/// Keys cubic convolution kernel with a = -0.5.
inline double keys_cubic(double x) {
    const double ax = std::abs(x);
    const double ax2 = ax * ax, ax3 = ax2 * ax;
    if (ax <= 1.0) return 1.5 * ax3 - 2.5 * ax2 + 1.0;
    if (ax <= 2.0) return -0.5 * ax3 + 2.5 * ax2 - 4.0 * ax + 2.0;
    return 0.0;
}

/// Resampling taps for one output sample.
struct ResampleTaps {
    std::vector<int> index;
    std::vector<double> weight;
};

/// Contribution table for shrinking a length-`in_len` axis by integer `factor`,
/// with the kernel stretched by `factor` (antialiasing) and symmetric borders.
inline std::vector<ResampleTaps> downsample_taps(int in_len, int factor) {
    const int out_len = in_len / factor;
    const double scale = 1.0 / factor;
    const double kernel_width = 4.0 * factor;
    const int taps = static_cast<int>(std::ceil(kernel_width)) + 2;

    std::vector<ResampleTaps> table(out_len);
    for (int o = 0; o < out_len; ++o) {
        // 1-based output coordinate mapped into 1-based input space.
        const double u = (o + 1) / scale + 0.5 * (1.0 - 1.0 / scale);
        const int left = static_cast<int>(std::floor(u - kernel_width / 2.0));
        auto& t = table[o];
        double sum = 0.0;
        for (int p = 0; p < taps; ++p) {
            const int j = left + p;  // 1-based
            const double w = scale * keys_cubic(scale * (u - j));
            if (w == 0.0) continue;
            // Symmetric extension: 1..n, n..1, repeating.
            int m = (j - 1) % (2 * in_len);
            if (m < 0) m += 2 * in_len;
            const int src = m < in_len ? m : 2 * in_len - 1 - m;
            t.index.push_back(src);
            t.weight.push_back(w);
            sum += w;
        }
        for (double& w : t.weight) w /= sum;
    }
    return table;
}

/// Shrinks by `factor` on both axes: rows (vertical) first, then columns.
inline FloatImage bicubic_downsample(const FloatImage& img, int factor) {
    if (factor < 1) throw ParameterError("downsampling factor must be positive");
    if (img.width % factor != 0 || img.height % factor != 0) {
        throw DimensionError("image " + std::to_string(img.width) + "x" + std::to_string(img.height) +
                             " is not divisible by " + std::to_string(factor));
    }
    const int ow = img.width / factor, oh = img.height / factor;
    const auto vtaps = downsample_taps(img.height, factor);
    const auto htaps = downsample_taps(img.width, factor);

    FloatImage tall(img.width, oh);
    for (int y = 0; y < oh; ++y) {
        const auto& t = vtaps[y];
        for (int x = 0; x < img.width; ++x) {
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (std::size_t k = 0; k < t.index.size(); ++k) acc += t.weight[k] * img.at(x, t.index[k], c);
                tall.at(x, y, c) = acc;
            }
        }
    }
    FloatImage out(ow, oh);
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            const auto& t = htaps[x];
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (std::size_t k = 0; k < t.index.size(); ++k) acc += t.weight[k] * tall.at(t.index[k], y, c);
                out.at(x, y, c) = acc;
            }
        }
    }
    return out;
}

inline RgbImage bicubic_downsample(const RgbImage& img, int factor = 4) {
    return quantize(bicubic_downsample(FloatImage(img), factor));
}

// ---------------------------------------------------------------------------
// Noise and luminance.

/// Adds i.i.d. N(0, level^2) to every sample, channels drawn independently in
/// interleaved raster order.
inline void add_noise_inplace(FloatImage& img, double level, Rng& rng) {
    if (!(level >= 0.0)) throw ParameterError("noise level must be non-negative");
    if (level == 0.0) return;
    for (double& v : img.data) v += level * rng.normal();
}

/// Noise for patch `patch_index`, drawn from the stream derived from
/// (spec.seed, patch_index).
inline RgbImage add_noise(const RgbImage& patch, const DegradationSpec& spec, std::uint64_t patch_index = 0) {
    if (!spec.has_noise()) throw ParameterError("degradation '" + to_string(spec) + "' adds no noise");
    if (!(spec.noise_level >= 0.0)) throw ParameterError("noise level must be non-negative");
    FloatImage f(patch);
    Rng rng(stream_seed(spec.seed, patch_index));
    add_noise_inplace(f, spec.noise_level, rng);
    return quantize(f);
}

inline void luminance_shift_inplace(FloatImage& img, double delta) {
    for (double& v : img.data) v += delta;
}

inline RgbImage luminance_shift(const RgbImage& patch, double delta) {
    FloatImage f(patch);
    luminance_shift_inplace(f, delta);
    return quantize(f);
}

// ---------------------------------------------------------------------------
// Full pipeline: blur(HR) -> bicubic down -> noise(LR) -> luminance(LR).

struct DegradedPatch {
    FloatImage lr;                 ///< unquantized LR samples
    std::optional<AnisoBlur> kernel; ///< per-patch kernel when drawn at random
};

inline DegradedPatch degrade_float(const RgbImage& hr, const DegradationSpec& spec, std::uint64_t patch_index) {
    validate(spec);
    Rng rng(stream_seed(spec.seed, patch_index));
    DegradedPatch result;

    FloatImage img(hr);
    if (spec.has_blur()) {
        if (spec.kind == DegradationKind::AnisoBlur && spec.aniso_random) {
            AnisoBlur a;
            a.sigma1 = rng.uniform(kAnisoSigmaMin, kAnisoSigmaMax);
            a.sigma2 = rng.uniform(kAnisoSigmaMin, kAnisoSigmaMax);
            a.theta = rng.uniform(0.0, kAnisoThetaMax);
            result.kernel = a;
        }
        img = gaussian_blur(img, spec, result.kernel ? &*result.kernel : nullptr);
    }
    img = bicubic_downsample(img, spec.scale);
    if (spec.has_noise()) add_noise_inplace(img, spec.noise_level, rng);
    if (spec.has_luminance_shift()) luminance_shift_inplace(img, spec.lum_delta);
    result.lr = std::move(img);
    return result;
}

/// LR patch for HR patch `patch_index`; quantized once at the end.
inline RgbImage degrade(const RgbImage& hr, const DegradationSpec& spec, std::uint64_t patch_index) {
    return quantize(degrade_float(hr, spec, patch_index).lr);
}

}  // namespace srga
