#pragma once

// Image quality scores and their aggregation over a test set.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "thermocolor/errors.hpp"
#include "thermocolor/image.hpp"

namespace thermocolor {

namespace detail {

template <std::size_t C>
void require_same_size(const Image<C>& a, const Image<C>& b, const char* what) {
    if (a.width() != b.width() || a.height() != b.height())
        throw ShapeError(std::string(what) + ": dimension mismatch " + std::to_string(a.width()) + "x" +
                         std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                         std::to_string(b.height()));
}

} // namespace detail

/// Mean absolute difference over all channel-pixels.
template <std::size_t C>
double mae(const Image<C>& a, const Image<C>& b) {
    detail::require_same_size(a, b, "mae");
    double s = 0;
    for (std::size_t i = 0; i < a.data().size(); ++i) s += std::abs(double(a.data()[i]) - double(b.data()[i]));
    return s / static_cast<double>(a.data().size());
}

template <std::size_t C>
double mse(const Image<C>& a, const Image<C>& b) {
    detail::require_same_size(a, b, "mse");
    double s = 0;
    for (std::size_t i = 0; i < a.data().size(); ++i) {
        const double d = double(a.data()[i]) - double(b.data()[i]);
        s += d * d;
    }
    return s / static_cast<double>(a.data().size());
}

template <std::size_t C>
double rmse(const Image<C>& a, const Image<C>& b) {
    return std::sqrt(mse(a, b));
}

inline constexpr double peak_value = 255.0;

/// Decibels; +infinity for identical images.
inline double psnr_from_mse(double m) {
    if (m == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak_value * peak_value / m);
}

template <std::size_t C>
double psnr(const Image<C>& a, const Image<C>& b) {
    return psnr_from_mse(mse(a, b));
}

struct SsimOptions {
    std::size_t window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
};

/// Normalized separable Gaussian weights.
inline std::vector<double> gaussian_window(std::size_t size, double sigma) {
    std::vector<double> w(size);
    const double centre = (static_cast<double>(size) - 1.0) / 2.0;
    double sum = 0;
    for (std::size_t i = 0; i < size; ++i) {
        const double d = static_cast<double>(i) - centre;
        w[i] = std::exp(-d * d / (2.0 * sigma * sigma));
        sum += w[i];
    }
    for (auto& v : w) v /= sum;
    return w;
}

/// Single-scale SSIM with a Gaussian window, evaluated at every window
/// position fully inside the image, per channel, then averaged.
template <std::size_t C>
double ssim(const Image<C>& a, const Image<C>& b, const SsimOptions& opt = {}) {
    detail::require_same_size(a, b, "ssim");
    if (opt.window == 0 || a.width() < opt.window || a.height() < opt.window)
        throw ShapeError("ssim: image smaller than the " + std::to_string(opt.window) + "x" +
                         std::to_string(opt.window) + " window");
    const auto g = gaussian_window(opt.window, opt.sigma);
    const double c1 = (opt.k1 * peak_value) * (opt.k1 * peak_value);
    const double c2 = (opt.k2 * peak_value) * (opt.k2 * peak_value);
    const std::size_t out_w = a.width() - opt.window + 1, out_h = a.height() - opt.window + 1;

    double total = 0;
    for (std::size_t ch = 0; ch < C; ++ch) {
        double channel_sum = 0;
        for (std::size_t r = 0; r < out_h; ++r)
            for (std::size_t c = 0; c < out_w; ++c) {
                double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
                for (std::size_t i = 0; i < opt.window; ++i)
                    for (std::size_t j = 0; j < opt.window; ++j) {
                        const double w = g[i] * g[j];
                        const double x = a.at(r + i, c + j, ch), y = b.at(r + i, c + j, ch);
                        mx += w * x;
                        my += w * y;
                        sxx += w * x * x;
                        syy += w * y * y;
                        sxy += w * x * y;
                    }
                const double vx = sxx - mx * mx, vy = syy - my * my, cov = sxy - mx * my;
                channel_sum += ((2 * mx * my + c1) * (2 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
            }
        total += channel_sum / static_cast<double>(out_w * out_h);
    }
    return total / static_cast<double>(C);
}

inline double dssim_from_ssim(double s) { return (1.0 - s) / 2.0; }

// ---------------------------------------------------------------------------
// Set evaluation

struct ImageScores {
    std::string image_id;
    double l1 = 0, rmse = 0, psnr_db = 0, ssim = 0, dssim = 0;
};

struct Aggregate {
    double low = 0, average = 0, high = 0;
};

struct ScoreReport {
    std::vector<ImageScores> images;
    Aggregate l1, rmse, psnr_db, ssim, dssim;
    std::size_t psnr_excluded = 0;  // identical pairs left out of the PSNR aggregate

    std::string to_csv() const;
    std::string to_table() const;
};

struct ScoredPair {
    std::string image_id;
    RgbImage predicted;
    RgbImage reference;
};

inline ImageScores score_pair(const std::string& id, const RgbImage& predicted, const RgbImage& reference,
                              const SsimOptions& opt = {}) {
    ImageScores s;
    s.image_id = id;
    s.l1 = mae(predicted, reference);
    s.rmse = rmse(predicted, reference);
    s.psnr_db = psnr(predicted, reference);
    s.ssim = ssim(predicted, reference, opt);
    s.dssim = dssim_from_ssim(s.ssim);
    return s;
}

namespace detail {

template <typename Get>
Aggregate aggregate(const std::vector<ImageScores>& rows, Get get, std::size_t* skipped = nullptr) {
    Aggregate a{std::numeric_limits<double>::infinity(), 0.0, -std::numeric_limits<double>::infinity()};
    std::size_t n = 0;
    for (const auto& r : rows) {
        const double v = get(r);
        if (!std::isfinite(v)) {
            if (skipped) ++*skipped;
            continue;
        }
        a.low = std::min(a.low, v);
        a.high = std::max(a.high, v);
        a.average += v;
        ++n;
    }
    if (n == 0) {
        const double inf = std::numeric_limits<double>::infinity();
        return {inf, inf, inf};
    }
    a.average /= static_cast<double>(n);
    return a;
}

} // namespace detail

/// Per-image scores plus low/average/high. Rows are sorted by image id so
/// the report does not depend on input order.
inline ScoreReport evaluate_scores(std::vector<ImageScores> rows) {
    if (rows.empty()) throw Error("evaluation set is empty");
    std::sort(rows.begin(), rows.end(),
              [](const ImageScores& x, const ImageScores& y) { return x.image_id < y.image_id; });
    ScoreReport r;
    r.images = std::move(rows);
    r.l1 = detail::aggregate(r.images, [](const ImageScores& s) { return s.l1; });
    r.rmse = detail::aggregate(r.images, [](const ImageScores& s) { return s.rmse; });
    r.psnr_db = detail::aggregate(r.images, [](const ImageScores& s) { return s.psnr_db; }, &r.psnr_excluded);
    r.ssim = detail::aggregate(r.images, [](const ImageScores& s) { return s.ssim; });
    r.dssim = detail::aggregate(r.images, [](const ImageScores& s) { return s.dssim; });
    return r;
}

inline ScoreReport evaluate_set(const std::vector<ScoredPair>& pairs, const SsimOptions& opt = {}) {
    if (pairs.empty()) throw Error("evaluation set is empty");
    std::vector<ImageScores> rows;
    rows.reserve(pairs.size());
    for (const auto& p : pairs) rows.push_back(score_pair(p.image_id, p.predicted, p.reference, opt));
    return evaluate_scores(std::move(rows));
}

namespace detail {

inline std::string fmt(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::ostringstream o;
    o << std::setprecision(10) << v;
    return o.str();
}

} // namespace detail

inline std::string ScoreReport::to_csv() const {
    std::ostringstream o;
    o << "image_id,l1,rmse,psnr_db,ssim,dssim\n";
    for (const auto& s : images)
        o << s.image_id << ',' << detail::fmt(s.l1) << ',' << detail::fmt(s.rmse) << ',' << detail::fmt(s.psnr_db)
          << ',' << detail::fmt(s.ssim) << ',' << detail::fmt(s.dssim) << '\n';
    const auto row = [&](const char* name, double Aggregate::*field) {
        o << name << ',' << detail::fmt(l1.*field) << ',' << detail::fmt(rmse.*field) << ','
          << detail::fmt(psnr_db.*field) << ',' << detail::fmt(ssim.*field) << ',' << detail::fmt(dssim.*field)
          << '\n';
    };
    row("low", &Aggregate::low);
    row("average", &Aggregate::average);
    row("high", &Aggregate::high);
    return o.str();
}

inline std::string ScoreReport::to_table() const {
    std::ostringstream o;
    o << std::fixed << std::setprecision(4);
    o << std::left << std::setw(10) << "" << std::right << std::setw(12) << "L1" << std::setw(12) << "RMSE"
      << std::setw(12) << "PSNR(dB)" << std::setw(12) << "SSIM" << std::setw(12) << "DSSIM" << '\n';
    const auto row = [&](const char* name, double Aggregate::*field) {
        o << std::left << std::setw(10) << name << std::right << std::setw(12) << l1.*field << std::setw(12)
          << rmse.*field << std::setw(12) << psnr_db.*field << std::setw(12) << ssim.*field << std::setw(12)
          << dssim.*field << '\n';
    };
    row("Average", &Aggregate::average);
    row("Low", &Aggregate::low);
    row("High", &Aggregate::high);
    if (psnr_excluded > 0)
        o << "note: " << psnr_excluded << " identical pair(s) excluded from the PSNR aggregate\n";
    return o.str();
}

} // namespace thermocolor
