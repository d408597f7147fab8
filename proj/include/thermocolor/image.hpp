#pragma once

// Image containers, binary Netpbm I/O, color conversions and resizing.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "thermocolor/errors.hpp"
#include "thermocolor/fileio.hpp"

namespace thermocolor {

/// 8-bit image with interleaved channels, stored row-major.
template <std::size_t Channels>
class Image {
public:
    static constexpr std::size_t channels = Channels;

    Image() = default;

    Image(std::size_t width, std::size_t height, std::uint8_t fill = 0)
        : width_(width), height_(height), data_(width * height * Channels, fill) {
        if (width == 0 || height == 0) throw ShapeError("image dimensions must be positive");
    }

    Image(std::size_t width, std::size_t height, std::vector<std::uint8_t> data)
        : width_(width), height_(height), data_(std::move(data)) {
        if (width == 0 || height == 0) throw ShapeError("image dimensions must be positive");
        if (data_.size() != width * height * Channels)
            throw ShapeError("pixel buffer length does not match image dimensions");
    }

    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }
    std::size_t pixel_count() const noexcept { return width_ * height_; }
    bool empty() const noexcept { return data_.empty(); }

    std::span<const std::uint8_t> data() const noexcept { return data_; }
    std::span<std::uint8_t> data() noexcept { return data_; }
    const std::vector<std::uint8_t>& buffer() const noexcept { return data_; }

    std::uint8_t at(std::size_t row, std::size_t col, std::size_t ch = 0) const {
        return data_[(row * width_ + col) * Channels + ch];
    }
    std::uint8_t& at(std::size_t row, std::size_t col, std::size_t ch = 0) {
        return data_[(row * width_ + col) * Channels + ch];
    }

    friend bool operator==(const Image&, const Image&) = default;

private:
    std::size_t width_ = 0;
    std::size_t height_ = 0;
    std::vector<std::uint8_t> data_;
};

using GrayImage = Image<1>;
using RgbImage = Image<3>;

/// CIE L*a*b* planes, each affinely rescaled onto [0, 255].
struct LabImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<double> l;
    std::vector<double> a_chan;
    std::vector<double> b_chan;

    LabImage() = default;
    LabImage(std::size_t w, std::size_t h)
        : width(w), height(h), l(w * h), a_chan(w * h), b_chan(w * h) {
        if (w == 0 || h == 0) throw ShapeError("image dimensions must be positive");
    }
};

inline std::uint8_t clamp_to_byte(double v) {
    if (!(v > 0.0)) return 0;  // also maps NaN to 0
    if (v >= 255.0) return 255;
    return static_cast<std::uint8_t>(std::floor(v + 0.5));
}

// ---------------------------------------------------------------------------
// Netpbm

namespace detail {

struct PnmHeader {
    char kind = 0;
    std::size_t width = 0;
    std::size_t height = 0;
    std::size_t maxval = 0;
    std::size_t payload_offset = 0;
};

inline bool is_pnm_space(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

inline PnmHeader parse_pnm_header(const std::vector<unsigned char>& bytes, const std::string& what) {
    PnmHeader h;
    if (bytes.size() < 2 || bytes[0] != 'P') throw FormatError(what + ": not a Netpbm file");
    h.kind = static_cast<char>(bytes[1]);
    std::size_t pos = 2;

    auto read_number = [&](const char* field) -> std::size_t {
        // Whitespace and '#' comments may precede every header field.
        while (pos < bytes.size()) {
            if (is_pnm_space(bytes[pos])) {
                ++pos;
            } else if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else {
                break;
            }
        }
        if (pos >= bytes.size() || bytes[pos] < '0' || bytes[pos] > '9')
            throw FormatError(what + ": malformed header (" + field + ")");
        std::size_t v = 0;
        while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') {
            v = v * 10 + static_cast<std::size_t>(bytes[pos] - '0');
            if (v > (std::size_t{1} << 31)) throw FormatError(what + ": header value too large");
            ++pos;
        }
        return v;
    };

    h.width = read_number("width");
    h.height = read_number("height");
    h.maxval = read_number("maxval");
    if (pos >= bytes.size() || !is_pnm_space(bytes[pos]))
        throw FormatError(what + ": missing whitespace after maxval");
    h.payload_offset = pos + 1;
    return h;
}

template <std::size_t Channels>
Image<Channels> load_pnm(const std::filesystem::path& path, char expected_kind) {
    const std::string what = path.string();
    const auto bytes = fileio::read_bytes(path);
    const auto h = parse_pnm_header(bytes, what);
    if (h.kind != expected_kind)
        throw FormatError(what + ": unsupported Netpbm variant P" + std::string(1, h.kind) +
                          " (expected P" + std::string(1, expected_kind) + ")");
    if (h.maxval != 255) throw FormatError(what + ": maxval must be 255");
    if (h.width == 0 || h.height == 0) throw FormatError(what + ": zero image dimension");
    const std::size_t payload = h.width * h.height * Channels;
    if (bytes.size() < h.payload_offset + payload) throw FormatError(what + ": truncated pixel data");
    std::vector<std::uint8_t> data(bytes.begin() + static_cast<std::ptrdiff_t>(h.payload_offset),
                                   bytes.begin() + static_cast<std::ptrdiff_t>(h.payload_offset + payload));
    return Image<Channels>(h.width, h.height, std::move(data));
}

template <std::size_t Channels>
std::string encode_pnm(const Image<Channels>& img, char kind) {
    if (img.empty()) throw ShapeError("cannot encode an empty image");
    std::string out = "P";
    out += kind;
    out += '\n';
    out += std::to_string(img.width()) + ' ' + std::to_string(img.height()) + '\n';
    out += "255\n";
    out.append(reinterpret_cast<const char*>(img.data().data()), img.data().size());
    return out;
}

} // namespace detail

inline GrayImage load_pgm(const std::filesystem::path& path) { return detail::load_pnm<1>(path, '5'); }
inline RgbImage load_ppm(const std::filesystem::path& path) { return detail::load_pnm<3>(path, '6'); }

inline std::string encode_pgm(const GrayImage& img) { return detail::encode_pnm(img, '5'); }
inline std::string encode_ppm(const RgbImage& img) { return detail::encode_pnm(img, '6'); }

inline void save_pgm(const GrayImage& img, const std::filesystem::path& path) {
    fileio::write_atomic(path, encode_pgm(img));
}
inline void save_ppm(const RgbImage& img, const std::filesystem::path& path) {
    fileio::write_atomic(path, encode_ppm(img));
}

// ---------------------------------------------------------------------------
// Color

/// BT.601 luma.
inline GrayImage rgb_to_gray(const RgbImage& img) {
    if (img.empty()) throw ShapeError("empty image");
    GrayImage out(img.width(), img.height());
    const auto src = img.data();
    auto dst = out.data();
    for (std::size_t i = 0; i < out.pixel_count(); ++i) {
        const double y = 0.299 * src[3 * i] + 0.587 * src[3 * i + 1] + 0.114 * src[3 * i + 2];
        dst[i] = clamp_to_byte(y);
    }
    return out;
}

inline RgbImage gray_to_rgb(const GrayImage& img) {
    RgbImage out(img.width(), img.height());
    for (std::size_t i = 0; i < img.pixel_count(); ++i)
        for (std::size_t c = 0; c < 3; ++c) out.data()[3 * i + c] = img.data()[i];
    return out;
}

namespace lab {

// D65 reference white, Y normalized to 1.
inline constexpr double white_x = 0.95047;
inline constexpr double white_y = 1.0;
inline constexpr double white_z = 1.08883;
inline constexpr double epsilon = 216.0 / 24389.0;
inline constexpr double kappa = 24389.0 / 27.0;

inline double srgb_to_linear(double c) {
    return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}
inline double linear_to_srgb(double c) {
    return c <= 0.0031308 ? 12.92 * c : 1.055 * std::pow(c, 1.0 / 2.4) - 0.055;
}
inline double f(double t) { return t > epsilon ? std::cbrt(t) : (kappa * t + 16.0) / 116.0; }
inline double f_inv(double t) {
    const double t3 = t * t * t;
    return t3 > epsilon ? t3 : (116.0 * t - 16.0) / kappa;
}

/// L* in [0,100], a*, b* unbounded (roughly [-128,127] for sRGB) from 8-bit sRGB.
inline std::array<double, 3> from_rgb(double r8, double g8, double b8) {
    const double r = srgb_to_linear(r8 / 255.0);
    const double g = srgb_to_linear(g8 / 255.0);
    const double b = srgb_to_linear(b8 / 255.0);
    const double x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
    const double y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
    const double z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
    const double fx = f(x / white_x);
    const double fy = f(y / white_y);
    const double fz = f(z / white_z);
    return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

/// Unclamped 8-bit-scale sRGB from L*a*b*.
inline std::array<double, 3> to_rgb(double l, double a, double b) {
    const double fy = (l + 16.0) / 116.0;
    const double fx = fy + a / 500.0;
    const double fz = fy - b / 200.0;
    const double x = white_x * f_inv(fx);
    const double y = white_y * (l > kappa * epsilon ? fy * fy * fy : l / kappa);
    const double z = white_z * f_inv(fz);
    const double r = 3.2404542 * x - 1.5371385 * y - 0.4985314 * z;
    const double g = -0.9692660 * x + 1.8760108 * y + 0.0415560 * z;
    const double bl = 0.0556434 * x - 0.2040259 * y + 1.0572252 * z;
    return {255.0 * linear_to_srgb(std::max(r, 0.0)), 255.0 * linear_to_srgb(std::max(g, 0.0)),
            255.0 * linear_to_srgb(std::max(bl, 0.0))};
}

// Affine maps between native L*a*b* ranges and the [0,255] storage range.
inline double scale_l(double l) { return l * 255.0 / 100.0; }
inline double unscale_l(double v) { return v * 100.0 / 255.0; }
inline double scale_ab(double ab) { return ab + 128.0; }
inline double unscale_ab(double v) { return v - 128.0; }

} // namespace lab

inline LabImage rgb_to_lab(const RgbImage& img) {
    if (img.empty()) throw ShapeError("empty image");
    LabImage out(img.width(), img.height());
    const auto src = img.data();
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
        const auto v = lab::from_rgb(src[3 * i], src[3 * i + 1], src[3 * i + 2]);
        out.l[i] = std::clamp(lab::scale_l(v[0]), 0.0, 255.0);
        out.a_chan[i] = std::clamp(lab::scale_ab(v[1]), 0.0, 255.0);
        out.b_chan[i] = std::clamp(lab::scale_ab(v[2]), 0.0, 255.0);
    }
    return out;
}

inline RgbImage lab_to_rgb(const LabImage& img) {
    const std::size_t n = img.width * img.height;
    if (n == 0 || img.l.size() != n || img.a_chan.size() != n || img.b_chan.size() != n)
        throw ShapeError("LAB planes do not match image dimensions");
    RgbImage out(img.width, img.height);
    auto dst = out.data();
    for (std::size_t i = 0; i < n; ++i) {
        const auto rgb = lab::to_rgb(lab::unscale_l(img.l[i]), lab::unscale_ab(img.a_chan[i]),
                                     lab::unscale_ab(img.b_chan[i]));
        for (std::size_t c = 0; c < 3; ++c) dst[3 * i + c] = clamp_to_byte(rgb[c]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Resampling

/// Bilinear resize with corner-aligned sampling: output corners sample input
/// corners exactly.
template <std::size_t Channels>
Image<Channels> resize_bilinear(const Image<Channels>& img, std::size_t new_width, std::size_t new_height) {
    if (new_width == 0 || new_height == 0) throw ShapeError("resize target must be at least 1x1");
    if (img.empty()) throw ShapeError("empty image");
    if (new_width == img.width() && new_height == img.height()) return img;

    auto source_coord = [](std::size_t dst, std::size_t dst_n, std::size_t src_n) {
        if (dst_n == 1) return (static_cast<double>(src_n) - 1.0) / 2.0;
        return static_cast<double>(dst) * (static_cast<double>(src_n) - 1.0) / (static_cast<double>(dst_n) - 1.0);
    };

    Image<Channels> out(new_width, new_height);
    for (std::size_t r = 0; r < new_height; ++r) {
        const double sy = source_coord(r, new_height, img.height());
        const auto y0 = static_cast<std::size_t>(std::floor(sy));
        const std::size_t y1 = std::min(y0 + 1, img.height() - 1);
        const double fy = sy - static_cast<double>(y0);
        for (std::size_t c = 0; c < new_width; ++c) {
            const double sx = source_coord(c, new_width, img.width());
            const auto x0 = static_cast<std::size_t>(std::floor(sx));
            const std::size_t x1 = std::min(x0 + 1, img.width() - 1);
            const double fx = sx - static_cast<double>(x0);
            for (std::size_t ch = 0; ch < Channels; ++ch) {
                const double top = (1.0 - fx) * img.at(y0, x0, ch) + fx * img.at(y0, x1, ch);
                const double bottom = (1.0 - fx) * img.at(y1, x0, ch) + fx * img.at(y1, x1, ch);
                out.at(r, c, ch) = clamp_to_byte((1.0 - fy) * top + fy * bottom);
            }
        }
    }
    return out;
}

/// Copies the rectangle starting at (row, col) with the given size.
template <std::size_t Channels>
Image<Channels> crop(const Image<Channels>& img, std::size_t row, std::size_t col, std::size_t height,
                     std::size_t width) {
    if (row + height > img.height() || col + width > img.width())
        throw ShapeError("crop window exceeds image bounds");
    Image<Channels> out(width, height);
    for (std::size_t r = 0; r < height; ++r)
        std::copy_n(img.data().begin() + static_cast<std::ptrdiff_t>(((row + r) * img.width() + col) * Channels),
                    width * Channels,
                    out.data().begin() + static_cast<std::ptrdiff_t>(r * width * Channels));
    return out;
}

} // namespace thermocolor
