#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include "thermocolor/image.hpp"

namespace testing_support {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<unsigned> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("thermocolor_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

template <std::size_t C>
thermocolor::Image<C> random_image(std::size_t w, std::size_t h, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    thermocolor::Image<C> img(w, h);
    for (auto& v : img.data()) v = static_cast<std::uint8_t>(rng() & 0xFF);
    return img;
}

} // namespace testing_support
