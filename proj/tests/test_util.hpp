#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>

#include "srga/image.hpp"

namespace testutil {

/// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("srga_" + tag + "_" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

private:
    std::filesystem::path path_;
};

inline srga::RgbImage constant_image(int w, int h, std::uint8_t v) {
    srga::RgbImage img(w, h);
    std::fill(img.data.begin(), img.data.end(), v);
    return img;
}

inline srga::RgbImage random_image(int w, int h, std::uint64_t seed) {
    std::mt19937_64 eng(seed);
    srga::RgbImage img(w, h);
    for (auto& v : img.data) v = static_cast<std::uint8_t>(eng() & 0xFF);
    return img;
}

inline std::string read_bytes(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

/// Runs the CLI binary; returns its exit status.
inline int run_cli(const std::string& args, const std::filesystem::path& log = {}) {
    std::string cmd = std::string("\"") + SRGA_CLI_PATH + "\" " + args;
    cmd += log.empty() ? " > /dev/null 2>&1" : " > \"" + log.string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace testutil
