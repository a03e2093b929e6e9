#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "srga/error.hpp"

namespace srga {

/// N feature maps of identical H x W x C shape, stored contiguously in
/// (n, h, w, c) order with c fastest. This is also the NPY payload order.
struct FeatureSet {
    std::size_t n = 0, h = 0, w = 0, c = 0;
    std::vector<float> data;
    std::string model_id = "unknown";
    std::string dataset_id = "unknown";
    std::string layer_tag = "unknown";

    FeatureSet() = default;
    FeatureSet(std::size_t n_, std::size_t h_, std::size_t w_, std::size_t c_)
        : n(n_), h(h_), w(w_), c(c_), data(n_ * h_ * w_ * c_, 0.0f) {}

    std::size_t tensor_size() const { return h * w * c; }

    std::span<float> tensor(std::size_t i) { return {data.data() + i * tensor_size(), tensor_size()}; }
    std::span<const float> tensor(std::size_t i) const {
        return {data.data() + i * tensor_size(), tensor_size()};
    }

    float& at(std::size_t i, std::size_t y, std::size_t x, std::size_t ch) {
        return data[((i * h + y) * w + x) * c + ch];
    }
    float at(std::size_t i, std::size_t y, std::size_t x, std::size_t ch) const {
        return data[((i * h + y) * w + x) * c + ch];
    }
};

/// Throws unless n >= 1, the buffer matches the shape and every value is finite.
inline void check_invariants(const FeatureSet& s) {
    if (s.n == 0) throw DataError("feature set is empty (N must be >= 1)");
    if (s.tensor_size() == 0) throw DataError("feature tensors have zero size");
    if (s.data.size() != s.n * s.tensor_size()) throw DataError("feature buffer does not match its shape");
    for (std::size_t i = 0; i < s.data.size(); ++i) {
        if (!std::isfinite(s.data[i])) {
            throw DataError("non-finite feature value in tensor " + std::to_string(i / s.tensor_size()) +
                            " (flat offset " + std::to_string(i % s.tensor_size()) + ")");
        }
    }
}

/// Row-major N x (H*W*C) view; row n is vec(F_n) with c fastest, then w, then h,
/// so element (h, w, c) of tensor n sits at column h*W*C + w*C + c.
struct FlattenedFeatures {
    std::span<const float> values;
    std::size_t rows = 0;
    std::size_t cols = 0;

    std::span<const float> row(std::size_t i) const { return values.subspan(i * cols, cols); }
    float operator()(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
};

inline FlattenedFeatures flatten(const FeatureSet& s) { return {s.data, s.n, s.tensor_size()}; }

inline constexpr std::size_t flat_column(std::size_t y, std::size_t x, std::size_t ch, std::size_t w,
                                         std::size_t c) {
    return (y * w + x) * c + ch;
}

/// Subset of tensors, in the given order.
inline FeatureSet select(const FeatureSet& s, std::span<const std::size_t> indices) {
    FeatureSet out(indices.size(), s.h, s.w, s.c);
    out.model_id = s.model_id;
    out.dataset_id = s.dataset_id;
    out.layer_tag = s.layer_tag;
    for (std::size_t k = 0; k < indices.size(); ++k) {
        if (indices[k] >= s.n) throw ContractError("tensor index out of range");
        std::copy_n(s.tensor(indices[k]).data(), s.tensor_size(), out.tensor(k).data());
    }
    return out;
}

// ---------------------------------------------------------------------------
// NPY v1.0, restricted to 4-D little-endian float32 in C order.

// The payload is copied verbatim, so the host must be little-endian.
static_assert(std::endian::native == std::endian::little, "NPY I/O assumes a little-endian host");

namespace npy {

inline constexpr std::array<char, 6> kMagic = {'\x93', 'N', 'U', 'M', 'P', 'Y'};
inline constexpr std::size_t kAlignment = 64;

/// Complete header (magic, version, length, dict, padding, newline).
inline std::string header(std::size_t n, std::size_t h, std::size_t w, std::size_t c) {
    std::string dict = "{'descr': '<f4', 'fortran_order': False, 'shape': (" + std::to_string(n) + ", " +
                       std::to_string(h) + ", " + std::to_string(w) + ", " + std::to_string(c) + "), }";
    const std::size_t prefix = kMagic.size() + 2 + 2;
    const std::size_t unpadded = prefix + dict.size() + 1;
    const std::size_t padded = (unpadded + kAlignment - 1) / kAlignment * kAlignment;
    dict.append(padded - unpadded, ' ');
    dict.push_back('\n');
    if (dict.size() > 0xFFFF) throw FormatError("NPY header too long for version 1.0");

    std::string out(kMagic.begin(), kMagic.end());
    out.push_back('\x01');
    out.push_back('\x00');
    out.push_back(static_cast<char>(dict.size() & 0xFF));
    out.push_back(static_cast<char>((dict.size() >> 8) & 0xFF));
    return out + dict;
}

/// Value text following `'key':` in a header dict, up to the next top-level comma.
inline std::string dict_value(const std::string& dict, const std::string& key) {
    const std::string needle = "'" + key + "'";
    const auto pos = dict.find(needle);
    if (pos == std::string::npos) throw FormatError("NPY header lacks key " + needle);
    auto colon = dict.find(':', pos + needle.size());
    if (colon == std::string::npos) throw FormatError("NPY header malformed near " + needle);
    std::size_t i = colon + 1;
    while (i < dict.size() && dict[i] == ' ') ++i;
    std::size_t j = i;
    int depth = 0;
    for (; j < dict.size(); ++j) {
        const char ch = dict[j];
        if (ch == '(') ++depth;
        if (ch == ')') --depth;
        if ((ch == ',' && depth == 0) || ch == '}') break;
    }
    std::string v = dict.substr(i, j - i);
    while (!v.empty() && v.back() == ' ') v.pop_back();
    return v;
}

inline std::vector<std::size_t> parse_shape(const std::string& text) {
    if (text.size() < 2 || text.front() != '(' || text.back() != ')') throw FormatError("bad NPY shape " + text);
    std::vector<std::size_t> dims;
    std::string item;
    for (std::size_t i = 1; i + 1 <= text.size() - 1; ++i) {
        const char ch = text[i];
        if (ch == ',' ) {
            if (!item.empty()) dims.push_back(std::stoull(item));
            item.clear();
        } else if (ch >= '0' && ch <= '9') {
            item.push_back(ch);
        } else if (ch != ' ' && ch != 'L') {
            throw FormatError("bad NPY shape " + text);
        }
    }
    if (!item.empty()) dims.push_back(std::stoull(item));
    return dims;
}

}  // namespace npy

inline std::filesystem::path sidecar_path(const std::filesystem::path& npy_path) {
    auto p = npy_path;
    p.replace_extension(".meta.json");
    return p;
}

inline void write_feature_file(const FeatureSet& set, const std::filesystem::path& path) {
    check_invariants(set);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open " + path.string() + " for writing");
    const std::string hdr = npy::header(set.n, set.h, set.w, set.c);
    os.write(hdr.data(), static_cast<std::streamsize>(hdr.size()));
    os.write(reinterpret_cast<const char*>(set.data.data()),
             static_cast<std::streamsize>(set.data.size() * sizeof(float)));
    if (!os) throw IoError("failed writing " + path.string());
    os.close();

    const nlohmann::json meta{
        {"model_id", set.model_id}, {"dataset_id", set.dataset_id}, {"layer_tag", set.layer_tag},
        {"shape", {set.n, set.h, set.w, set.c}}};
    std::ofstream ms(sidecar_path(path));
    if (!ms) throw IoError("cannot write sidecar for " + path.string());
    ms << meta.dump(2) << '\n';
}

inline FeatureSet read_feature_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path.string());

    std::array<char, 10> pre{};
    is.read(pre.data(), pre.size());
    if (is.gcount() != static_cast<std::streamsize>(pre.size()) ||
        !std::equal(npy::kMagic.begin(), npy::kMagic.end(), pre.begin())) {
        throw FormatError(path.string() + ": not an NPY file (bad magic)");
    }
    if (pre[6] != 1 || pre[7] != 0) {
        throw FormatError(path.string() + ": unsupported NPY version " + std::to_string(int(pre[6])) + "." +
                          std::to_string(int(pre[7])) + " (only 1.0)");
    }
    const std::size_t hlen = static_cast<unsigned char>(pre[8]) | (static_cast<std::size_t>(static_cast<unsigned char>(pre[9])) << 8);
    std::string dict(hlen, '\0');
    is.read(dict.data(), static_cast<std::streamsize>(hlen));
    if (is.gcount() != static_cast<std::streamsize>(hlen)) throw FormatError(path.string() + ": truncated header");

    const std::string descr = npy::dict_value(dict, "descr");
    if (descr != "'<f4'") throw FormatError(path.string() + ": unsupported dtype " + descr + " (need '<f4')");
    if (npy::dict_value(dict, "fortran_order") != "False") {
        throw FormatError(path.string() + ": Fortran-ordered arrays are not supported");
    }
    const auto dims = npy::parse_shape(npy::dict_value(dict, "shape"));
    if (dims.size() != 4) {
        throw FormatError(path.string() + ": expected a 4-D (N,H,W,C) array, got rank " + std::to_string(dims.size()));
    }

    FeatureSet set(dims[0], dims[1], dims[2], dims[3]);
    const std::size_t bytes = set.data.size() * sizeof(float);
    is.read(reinterpret_cast<char*>(set.data.data()), static_cast<std::streamsize>(bytes));
    if (static_cast<std::size_t>(is.gcount()) != bytes) throw FormatError(path.string() + ": truncated payload");
    if (is.peek() != std::char_traits<char>::eof()) throw FormatError(path.string() + ": trailing bytes after payload");

    set.dataset_id = path.stem().string();
    const auto meta_path = sidecar_path(path);
    if (std::filesystem::exists(meta_path)) {
        std::ifstream ms(meta_path);
        nlohmann::json meta;
        try {
            ms >> meta;
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(meta_path.string() + ": " + e.what());
        }
        set.model_id = meta.value("model_id", set.model_id);
        set.dataset_id = meta.value("dataset_id", set.dataset_id);
        set.layer_tag = meta.value("layer_tag", set.layer_tag);
    }
    check_invariants(set);
    return set;
}

}  // namespace srga
