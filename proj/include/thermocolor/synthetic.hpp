#pragma once

// Deterministic synthetic scenes for tests, benchmarks and demos.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "thermocolor/image.hpp"

namespace thermocolor::synthetic {

/// Smooth random field: a sum of randomly oriented plane waves whose
/// wavelengths lie in [min_wavelength, max_wavelength], stretched onto
/// `levels` evenly spaced values in [0, 255]. Long wavelengths make mutual
/// information fall off gradually with misalignment, the way it does on
/// real scenes.
inline GrayImage smooth_field(std::size_t width, std::size_t height, std::uint64_t seed, std::size_t levels = 256,
                              std::size_t waves = 8, double min_wavelength = 80.0, double max_wavelength = 400.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    struct Wave {
        double kx, ky, phase, amp;
    };
    std::vector<Wave> ws;
    for (std::size_t i = 0; i < waves; ++i) {
        const double theta = 2.0 * std::numbers::pi * unit(rng);
        const double lambda = min_wavelength * std::pow(max_wavelength / min_wavelength, unit(rng));
        const double k = 2.0 * std::numbers::pi / lambda;
        ws.push_back({k * std::cos(theta), k * std::sin(theta), 2.0 * std::numbers::pi * unit(rng),
                      0.5 + unit(rng)});
    }
    std::vector<double> v(width * height);
    for (std::size_t r = 0; r < height; ++r)
        for (std::size_t c = 0; c < width; ++c) {
            double s = 0;
            for (const auto& w : ws)
                s += w.amp * std::sin(w.kx * static_cast<double>(c) + w.ky * static_cast<double>(r) + w.phase);
            v[r * width + c] = s;
        }
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    const double span = std::max(*hi - *lo, 1e-12);
    GrayImage out(width, height);
    const double steps = static_cast<double>(std::clamp<std::size_t>(levels, 2, 256) - 1);
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double q = std::floor(steps * (v[i] - *lo) / span + 0.5) / steps;
        out.data()[i] = clamp_to_byte(255.0 * q);
    }
    return out;
}

/// Uniform i.i.d. noise.
inline GrayImage noise(std::size_t width, std::size_t height, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    GrayImage out(width, height);
    for (auto& p : out.data()) p = static_cast<std::uint8_t>(rng() & 0xFF);
    return out;
}

/// Copies `patch` into `canvas` with its top-left corner at (row, col).
template <std::size_t C>
void plant(Image<C>& canvas, const Image<C>& patch, std::size_t row, std::size_t col) {
    for (std::size_t r = 0; r < patch.height(); ++r)
        for (std::size_t c = 0; c < patch.width(); ++c)
            for (std::size_t ch = 0; ch < C; ++ch) canvas.at(row + r, col + c, ch) = patch.at(r, c, ch);
}

/// Pseudo-color used to derive optical scenes from thermal ones; smooth and
/// invertible enough for a network to learn.
inline std::array<std::uint8_t, 3> palette(std::uint8_t v) {
    const double t = v / 255.0;
    const double r = 255.0 * std::clamp(1.5 * t - 0.2, 0.0, 1.0);
    const double g = 255.0 * (0.5 + 0.45 * std::sin(std::numbers::pi * t));
    const double b = 255.0 * std::clamp(1.0 - 1.2 * t, 0.0, 1.0);
    return {clamp_to_byte(r), clamp_to_byte(g), clamp_to_byte(b)};
}

inline RgbImage colorize(const GrayImage& g) {
    RgbImage out(g.width(), g.height());
    for (std::size_t i = 0; i < g.pixel_count(); ++i) {
        const auto p = palette(g.data()[i]);
        for (std::size_t c = 0; c < 3; ++c) out.data()[3 * i + c] = p[c];
    }
    return out;
}

/// Optical scene and thermal view whose frame sits at (row, col) in it.
/// The thermal view is an intensity-inverted copy of the optical luma, so
/// the pair shares structure but not intensities.
struct PlantedPair {
    GrayImage thermal;
    RgbImage optical;
    std::size_t row = 0;
    std::size_t col = 0;
};

inline PlantedPair planted_pair(std::size_t thermal_h, std::size_t thermal_w, std::size_t optical_h,
                                std::size_t optical_w, std::size_t row, std::size_t col, std::uint64_t seed,
                                std::size_t levels = 256) {
    const GrayImage scene = smooth_field(optical_w, optical_h, seed, levels);
    PlantedPair p;
    p.optical = colorize(scene);
    const GrayImage luma = rgb_to_gray(p.optical);
    p.thermal = crop(luma, row, col, thermal_h, thermal_w);
    for (auto& v : p.thermal.data()) v = static_cast<std::uint8_t>(255 - v);
    p.row = row;
    p.col = col;
    return p;
}

} // namespace thermocolor::synthetic
