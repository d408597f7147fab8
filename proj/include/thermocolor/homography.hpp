#pragma once

// Projective calibration between the optical and thermal frames, reduced to a
// per-imager uniform rescale of the optical image.

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "thermocolor/errors.hpp"
#include "thermocolor/image.hpp"

namespace thermocolor {

struct PointCorrespondence {
    double src_x = 0.0;  // optical frame
    double src_y = 0.0;
    double dst_x = 0.0;  // thermal frame
    double dst_y = 0.0;
};

class HomographyMatrix {
public:
    HomographyMatrix() : h_(Eigen::Matrix3d::Identity()) {}

    /// Normalizes so that h(2,2) == 1. Rejects singular or non-normalizable input.
    explicit HomographyMatrix(const Eigen::Matrix3d& h) : h_(h) {
        if (!h_.allFinite()) throw DegenerateError("homography has non-finite entries");
        if (std::abs(h_(2, 2)) < 1e-14) throw DegenerateError("homography cannot be normalized (h33 = 0)");
        h_ /= h_(2, 2);
        if (std::abs(h_.determinant()) < 1e-14) throw DegenerateError("homography is singular");
    }

    const Eigen::Matrix3d& matrix() const noexcept { return h_; }
    double operator()(int r, int c) const { return h_(r, c); }

    std::pair<double, double> apply(double x, double y) const {
        const Eigen::Vector3d p = h_ * Eigen::Vector3d(x, y, 1.0);
        return {p.x() / p.z(), p.y() / p.z()};
    }

private:
    Eigen::Matrix3d h_;
};

namespace detail {

inline bool collinear(const PointCorrespondence& a, const PointCorrespondence& b, const PointCorrespondence& c,
                      bool source) {
    const double ax = source ? a.src_x : a.dst_x, ay = source ? a.src_y : a.dst_y;
    const double bx = source ? b.src_x : b.dst_x, by = source ? b.src_y : b.dst_y;
    const double cx = source ? c.src_x : c.dst_x, cy = source ? c.src_y : c.dst_y;
    const double cross = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax);
    const double scale = std::max({std::abs(bx - ax), std::abs(by - ay), std::abs(cx - ax), std::abs(cy - ay), 1e-300});
    return std::abs(cross) <= 1e-12 * scale * scale;
}

/// Similarity transform moving the centroid to the origin with mean distance sqrt(2).
inline Eigen::Matrix3d normalizing_transform(std::span<const PointCorrespondence> pairs, bool source) {
    double cx = 0, cy = 0;
    for (const auto& p : pairs) {
        cx += source ? p.src_x : p.dst_x;
        cy += source ? p.src_y : p.dst_y;
    }
    cx /= static_cast<double>(pairs.size());
    cy /= static_cast<double>(pairs.size());
    double mean_dist = 0;
    for (const auto& p : pairs)
        mean_dist += std::hypot((source ? p.src_x : p.dst_x) - cx, (source ? p.src_y : p.dst_y) - cy);
    mean_dist /= static_cast<double>(pairs.size());
    if (mean_dist <= 0) throw DegenerateError("all points coincide");
    const double s = std::sqrt(2.0) / mean_dist;
    Eigen::Matrix3d t;
    t << s, 0, -s * cx, 0, s, -s * cy, 0, 0, 1;
    return t;
}

} // namespace detail

/// Exact 8x8 solve (h33 = 1) for four correspondences, normalized DLT
/// least squares for more.
inline HomographyMatrix estimate_homography(std::span<const PointCorrespondence> pairs) {
    if (pairs.size() < 4) throw DegenerateError("at least 4 correspondences are required");
    for (const auto& p : pairs)
        if (!std::isfinite(p.src_x) || !std::isfinite(p.src_y) || !std::isfinite(p.dst_x) || !std::isfinite(p.dst_y))
            throw DegenerateError("correspondence has non-finite coordinates");

    if (pairs.size() == 4) {
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = i + 1; j < 4; ++j)
                for (std::size_t k = j + 1; k < 4; ++k)
                    if (detail::collinear(pairs[i], pairs[j], pairs[k], true) ||
                        detail::collinear(pairs[i], pairs[j], pairs[k], false))
                        throw DegenerateError("three of the four points are collinear");

        Eigen::Matrix<double, 8, 8> a;
        Eigen::Matrix<double, 8, 1> rhs;
        for (int i = 0; i < 4; ++i) {
            const auto& p = pairs[static_cast<std::size_t>(i)];
            a.row(2 * i) << p.src_x, p.src_y, 1, 0, 0, 0, -p.src_x * p.dst_x, -p.src_y * p.dst_x;
            a.row(2 * i + 1) << 0, 0, 0, p.src_x, p.src_y, 1, -p.src_x * p.dst_y, -p.src_y * p.dst_y;
            rhs(2 * i) = p.dst_x;
            rhs(2 * i + 1) = p.dst_y;
        }
        Eigen::FullPivLU<Eigen::Matrix<double, 8, 8>> lu(a);
        if (!lu.isInvertible()) throw DegenerateError("singular correspondence system");
        const Eigen::Matrix<double, 8, 1> h = lu.solve(rhs);
        Eigen::Matrix3d m;
        m << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), 1.0;
        return HomographyMatrix(m);
    }

    const Eigen::Matrix3d ts = detail::normalizing_transform(pairs, true);
    const Eigen::Matrix3d td = detail::normalizing_transform(pairs, false);
    Eigen::MatrixXd a(2 * pairs.size(), 9);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const Eigen::Vector3d s = ts * Eigen::Vector3d(pairs[i].src_x, pairs[i].src_y, 1);
        const Eigen::Vector3d d = td * Eigen::Vector3d(pairs[i].dst_x, pairs[i].dst_y, 1);
        const auto r = static_cast<Eigen::Index>(2 * i);
        a.row(r) << -s.x(), -s.y(), -1, 0, 0, 0, d.x() * s.x(), d.x() * s.y(), d.x();
        a.row(r + 1) << 0, 0, 0, -s.x(), -s.y(), -1, d.y() * s.x(), d.y() * s.y(), d.y();
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    // A rank below 8 means the fit is not unique.
    if (sv(7) <= 1e-12 * sv(0)) throw DegenerateError("degenerate correspondence configuration");
    const Eigen::VectorXd v = svd.matrixV().col(8);
    Eigen::Matrix3d hn;
    hn << v(0), v(1), v(2), v(3), v(4), v(5), v(6), v(7), v(8);
    return HomographyMatrix(td.inverse() * hn * ts);
}

inline HomographyMatrix estimate_homography(const std::vector<PointCorrespondence>& pairs) {
    return estimate_homography(std::span<const PointCorrespondence>(pairs));
}

struct ScaleFactors {
    double sx = 1.0;
    double sy = 1.0;
};

/// Axis scale magnitudes of the affine part.
inline ScaleFactors scale_factors(const HomographyMatrix& h) {
    return {std::hypot(h(0, 0), h(1, 0)), std::hypot(h(0, 1), h(1, 1))};
}

/// Calibration constants of a thermal imager: the uniform optical rescale
/// and the native thermal frame size.
struct ImagerProfile {
    std::string name;
    double scale_x = 1.0;
    double scale_y = 1.0;
    std::size_t thermal_width = 0;
    std::size_t thermal_height = 0;
};

namespace imagers {
inline ImagerProfile sonel() { return {"sonel", 0.18, 0.18, 384, 288}; }
inline ImagerProfile flir() { return {"flir", 0.365, 0.365, 240, 320}; }
} // namespace imagers

inline std::size_t round_half_up(double v) { return static_cast<std::size_t>(std::floor(v + 0.5)); }

inline RgbImage rescale_optical(const RgbImage& img, double sx, double sy) {
    if (!(sx > 0.0) || !(sy > 0.0)) throw ShapeError("rescale factors must be positive");
    const std::size_t w = round_half_up(static_cast<double>(img.width()) * sx);
    const std::size_t h = round_half_up(static_cast<double>(img.height()) * sy);
    if (w < 1 || h < 1) throw ShapeError("rescaled optical image would be empty");
    return resize_bilinear(img, w, h);
}

} // namespace thermocolor
