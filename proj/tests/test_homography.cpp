#include <gtest/gtest.h>

#include <random>

#include "thermocolor/homography.hpp"

using namespace thermocolor;

namespace {

std::vector<PointCorrespondence> map_points(const Eigen::Matrix3d& h, const std::vector<std::pair<double, double>>& src) {
    std::vector<PointCorrespondence> out;
    for (auto [x, y] : src) {
        const Eigen::Vector3d p = h * Eigen::Vector3d(x, y, 1);
        out.push_back({x, y, p.x() / p.z(), p.y() / p.z()});
    }
    return out;
}

Eigen::Matrix3d random_homography(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1, 1);
    Eigen::Matrix3d h;
    h << 1 + 0.3 * u(rng), 0.2 * u(rng), 50 * u(rng), 0.2 * u(rng), 1 + 0.3 * u(rng), 50 * u(rng), 1e-4 * u(rng),
        1e-4 * u(rng), 1;
    return h;
}

} // namespace

TEST(Homography, IdentityCorrespondencesGiveIdentity) {
    const auto pairs = map_points(Eigen::Matrix3d::Identity(), {{0, 0}, {10, 0}, {0, 10}, {13, 17}});
    const auto h = estimate_homography(pairs);
    EXPECT_TRUE(h.matrix().isApprox(Eigen::Matrix3d::Identity(), 1e-12));
}

TEST(Homography, UniformScale) {
    const std::vector<PointCorrespondence> pairs{{0, 0, 0, 0}, {1, 0, 2, 0}, {0, 1, 0, 2}, {1, 1, 2, 2}};
    const auto h = estimate_homography(pairs);
    EXPECT_TRUE(h.matrix().isApprox(Eigen::Vector3d(2, 2, 1).asDiagonal().toDenseMatrix(), 1e-12));
}

TEST(Homography, FourRandomPairsReproject) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> coord(0, 500);
    for (int trial = 0; trial < 50; ++trial) {
        const auto truth = random_homography(rng);
        const auto pairs = map_points(truth, {{coord(rng), coord(rng)}, {coord(rng), coord(rng)},
                                              {coord(rng), coord(rng)}, {coord(rng), coord(rng)}});
        HomographyMatrix h;
        try {
            h = estimate_homography(pairs);
        } catch (const DegenerateError&) {
            continue;  // random draw happened to be near-collinear
        }
        for (const auto& p : pairs) {
            const auto [x, y] = h.apply(p.src_x, p.src_y);
            EXPECT_NEAR(x, p.dst_x, 1e-9);
            EXPECT_NEAR(y, p.dst_y, 1e-9);
        }
        EXPECT_DOUBLE_EQ(h(2, 2), 1.0);
    }
}

TEST(Homography, LeastSquaresRecoversExactMapFromManyPoints) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> coord(0, 400);
    const auto truth = random_homography(rng);
    std::vector<std::pair<double, double>> src;
    for (int i = 0; i < 20; ++i) src.emplace_back(coord(rng), coord(rng));
    const auto h = estimate_homography(map_points(truth, src));
    EXPECT_TRUE(h.matrix().isApprox(truth / truth(2, 2), 1e-8));
}

TEST(Homography, LeastSquaresToleratesNoise) {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> coord(0, 400);
    std::normal_distribution<double> noise(0, 0.1);
    const auto truth = random_homography(rng);
    std::vector<std::pair<double, double>> src;
    for (int i = 0; i < 60; ++i) src.emplace_back(coord(rng), coord(rng));
    auto pairs = map_points(truth, src);
    for (auto& p : pairs) {
        p.dst_x += noise(rng);
        p.dst_y += noise(rng);
    }
    const auto h = estimate_homography(pairs);
    double worst = 0;
    for (auto [x, y] : src) {
        const Eigen::Vector3d t = truth * Eigen::Vector3d(x, y, 1);
        const auto [hx, hy] = h.apply(x, y);
        worst = std::max(worst, std::hypot(hx - t.x() / t.z(), hy - t.y() / t.z()));
    }
    EXPECT_LT(worst, 0.5);
}

TEST(Homography, DegenerateConfigurationsAreRejected) {
    const std::vector<PointCorrespondence> collinear{{0, 0, 0, 0}, {1, 1, 1, 1}, {2, 2, 2, 2}, {0, 5, 0, 5}};
    EXPECT_THROW(estimate_homography(collinear), DegenerateError);
    const std::vector<PointCorrespondence> duplicate{{0, 0, 0, 0}, {0, 0, 0, 0}, {1, 0, 1, 0}, {0, 1, 0, 1}};
    EXPECT_THROW(estimate_homography(duplicate), DegenerateError);
    const std::vector<PointCorrespondence> too_few{{0, 0, 0, 0}, {1, 0, 1, 0}, {0, 1, 0, 1}};
    EXPECT_THROW(estimate_homography(too_few), DegenerateError);
    std::vector<PointCorrespondence> line;
    for (int i = 0; i < 6; ++i) line.push_back({double(i), 2.0 * i, double(i), 2.0 * i});
    EXPECT_THROW(estimate_homography(line), DegenerateError);
    Eigen::Matrix3d singular = Eigen::Matrix3d::Zero();
    singular(2, 2) = 1;
    EXPECT_THROW(HomographyMatrix{singular}, DegenerateError);
}

TEST(ScaleFactors, ImagerConstants) {
    Eigen::Matrix3d sonel = Eigen::Matrix3d::Identity();
    sonel(0, 0) = sonel(1, 1) = 0.18;
    const auto s = scale_factors(HomographyMatrix(sonel));
    EXPECT_NEAR(s.sx, 0.18, 1e-12);
    EXPECT_NEAR(s.sy, 0.18, 1e-12);
    EXPECT_DOUBLE_EQ(imagers::sonel().scale_x, 0.18);
    EXPECT_DOUBLE_EQ(imagers::flir().scale_x, 0.365);
    EXPECT_EQ(imagers::sonel().thermal_width * imagers::sonel().thermal_height, 110592u);
}

TEST(ScaleFactors, RotationDoesNotChangeScale) {
    const double a = 0.3, k = 0.365;
    Eigen::Matrix3d h;
    h << k * std::cos(a), -k * std::sin(a), 4, k * std::sin(a), k * std::cos(a), 9, 0, 0, 1;
    const auto s = scale_factors(HomographyMatrix(h));
    EXPECT_NEAR(s.sx, k, 1e-12);
    EXPECT_NEAR(s.sy, k, 1e-12);
}

TEST(ScaleFactors, EstimatedFromPointsMatchesTrueScale) {
    std::vector<PointCorrespondence> pairs;
    for (auto [x, y] : std::vector<std::pair<double, double>>{{100, 200}, {2400, 150}, {2300, 1800}, {300, 1700}})
        pairs.push_back({x, y, 0.18 * x + 12, 0.18 * y - 7});
    const auto s = scale_factors(estimate_homography(pairs));
    EXPECT_NEAR(s.sx, 0.18, 1e-10);
    EXPECT_NEAR(s.sy, 0.18, 1e-10);
}

TEST(Rescale, CameraResolutionsRoundHalfUp) {
    EXPECT_EQ(round_half_up(466.56), 467u);
    EXPECT_EQ(round_half_up(349.92), 350u);
    const auto sonel = rescale_optical(RgbImage(2592, 1944, 10), 0.18, 0.18);
    EXPECT_EQ(sonel.width(), 467u);
    EXPECT_EQ(sonel.height(), 350u);
    const auto flir = rescale_optical(RgbImage(1536, 2048, 10), 0.365, 0.365);
    EXPECT_EQ(flir.width(), 561u);
    EXPECT_EQ(flir.height(), 748u);
    EXPECT_THROW(rescale_optical(RgbImage(4, 4), 0.0, 1.0), ShapeError);
}
