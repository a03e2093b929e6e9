#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "srga/degrade.hpp"
#include "srga/error.hpp"
#include "srga/featstore.hpp"
#include "srga/image.hpp"
#include "srga/parallel.hpp"
#include "srga/rng.hpp"

namespace srga {

/// Deterministic stand-in for the body of an SR network: four 3x3 stride-1
/// convolutions 3 -> 16 -> 32 -> 64 -> 64 with reflect padding, ReLU after the
/// first three, no biases, no normalization. Without biases the network is
/// positively homogeneous: scaling the input by c > 0 scales every feature by c.
///
/// Weights: one Rng(seed) stream visited layer by layer, then output channel,
/// input channel, kernel row, kernel column; each weight is (2u - 1) * sqrt(3 / fan_in)
/// with u = Rng::uniform() and fan_in = 9 * in_channels.
class ProbeNet {
public:
    static constexpr std::array<int, 5> kChannels = {3, 16, 32, 64, 64};
    static constexpr int kKernel = 3;

    explicit ProbeNet(std::uint64_t seed) : seed_(seed) {
        Rng rng(seed);
        for (std::size_t l = 0; l + 1 < kChannels.size(); ++l) {
            const int cin = kChannels[l], cout = kChannels[l + 1];
            const int fan_in = kKernel * kKernel * cin;
            const double bound = std::sqrt(3.0 / fan_in);
            // Row (ky * 3 + kx) * cin + ci matches the im2col column layout.
            Eigen::MatrixXf w(fan_in, cout);
            for (int o = 0; o < cout; ++o)
                for (int ci = 0; ci < cin; ++ci)
                    for (int ky = 0; ky < kKernel; ++ky)
                        for (int kx = 0; kx < kKernel; ++kx)
                            w((ky * kKernel + kx) * cin + ci, o) =
                                static_cast<float>((2.0 * rng.uniform() - 1.0) * bound);
            weights_.push_back(std::move(w));
        }
    }

    std::uint64_t seed() const { return seed_; }
    int output_channels() const { return kChannels.back(); }
    std::string model_id() const { return "probe-net/seed=" + std::to_string(seed_); }
    static std::string layer_tag() { return "conv4"; }
    const Eigen::MatrixXf& weights(std::size_t layer) const { return weights_.at(layer); }

    /// Forward pass on an (h, w, 3) float image already scaled to network
    /// range. Writes (h, w, 64) features, channels fastest.
    void forward(std::span<const float> input, int height, int width, std::span<float> output) const {
        using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
        const int pixels = height * width;
        RowMat act = Eigen::Map<const RowMat>(input.data(), pixels, kChannels[0]);
        RowMat cols;
        for (std::size_t l = 0; l < weights_.size(); ++l) {
            const int cin = kChannels[l];
            cols.resize(pixels, kKernel * kKernel * cin);
            for (int y = 0; y < height; ++y) {
                for (int x = 0; x < width; ++x) {
                    float* dst = cols.row(y * width + x).data();
                    for (int ky = 0; ky < kKernel; ++ky) {
                        const int sy = reflect_index(y + ky - 1, height);
                        for (int kx = 0; kx < kKernel; ++kx) {
                            const int sx = reflect_index(x + kx - 1, width);
                            const float* src = act.row(sy * width + sx).data();
                            std::copy_n(src, cin, dst + (ky * kKernel + kx) * cin);
                        }
                    }
                }
            }
            RowMat next = cols * weights_[l];
            if (l + 1 < weights_.size()) next = next.cwiseMax(0.0f);
            act = std::move(next);
        }
        std::copy_n(act.data(), output.size(), output.data());
    }

private:
    std::uint64_t seed_;
    std::vector<Eigen::MatrixXf> weights_;
};

namespace detail {

template <typename Image>
FeatureSet run_probe(const ProbeNet& net, std::span<const Image> patches, double input_scale, unsigned threads) {
    if (patches.empty()) throw DimensionError("no patches to extract features from");
    const int h = patches.front().height, w = patches.front().width;
    for (const auto& p : patches) {
        if (p.height != h || p.width != w) {
            throw DimensionError("mixed patch sizes: " + std::to_string(w) + "x" + std::to_string(h) + " and " +
                                 std::to_string(p.width) + "x" + std::to_string(p.height));
        }
    }
    FeatureSet out(patches.size(), static_cast<std::size_t>(h), static_cast<std::size_t>(w),
                   static_cast<std::size_t>(net.output_channels()));
    out.model_id = net.model_id();
    out.layer_tag = ProbeNet::layer_tag();
    parallel_for(patches.size(), threads, [&](std::size_t i) {
        const auto& p = patches[i];
        std::vector<float> input(p.data.size());
        for (std::size_t k = 0; k < input.size(); ++k)
            input[k] = static_cast<float>(static_cast<double>(p.data[k]) / 255.0 * input_scale);
        net.forward(input, h, w, out.tensor(i));
    });
    return out;
}

}  // namespace detail

/// Features of LR patches; 8-bit samples are mapped to [0, 1] (times input_scale).
inline FeatureSet extract_features(const ProbeNet& net, std::span<const RgbImage> patches, unsigned threads = 0,
                                   double input_scale = 1.0) {
    return detail::run_probe(net, patches, input_scale, threads);
}

/// Floating-point path: samples on the 0..255 scale, no quantization.
inline FeatureSet extract_features(const ProbeNet& net, std::span<const FloatImage> patches, unsigned threads = 0,
                                   double input_scale = 1.0) {
    return detail::run_probe(net, patches, input_scale, threads);
}

}  // namespace srga
