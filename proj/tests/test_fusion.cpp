#include <gtest/gtest.h>

#include "support.hpp"
#include "thermocolor/fusion.hpp"

using namespace thermocolor;
using testing_support::random_image;

namespace {

LabImage constant_lab(std::size_t w, std::size_t h, double l, double a, double b) {
    LabImage img(w, h);
    std::fill(img.l.begin(), img.l.end(), l);
    std::fill(img.a_chan.begin(), img.a_chan.end(), a);
    std::fill(img.b_chan.begin(), img.b_chan.end(), b);
    return img;
}

} // namespace

TEST(Fusion, LuminanceIsTheMean) {
    EXPECT_DOUBLE_EQ(fused_luminance(100, 200), 150.0);
    EXPECT_DOUBLE_EQ(fused_luminance(0, 255), 127.5);
    EXPECT_DOUBLE_EQ(fused_luminance(255, 255), 255.0);
}

TEST(Fusion, LabPlanesSpotValues) {
    const auto mask = constant_lab(3, 2, 100, 40, 210);
    const auto out = fuse_lab(mask, GrayImage(3, 2, 200));
    for (std::size_t i = 0; i < 6; ++i) {
        EXPECT_DOUBLE_EQ(out.l[i], 150.0);
        EXPECT_DOUBLE_EQ(out.a_chan[i], 40.0);
        EXPECT_DOUBLE_EQ(out.b_chan[i], 210.0);
    }
}

TEST(Fusion, ChrominancePassesThroughUnchanged) {
    const auto mask = rgb_to_lab(random_image<3>(20, 15, 1));
    const auto out = fuse_lab(mask, random_image<1>(20, 15, 2));
    EXPECT_EQ(out.a_chan, mask.a_chan);
    EXPECT_EQ(out.b_chan, mask.b_chan);
}

TEST(Fusion, ThermalEqualToMaskLuminanceIsAFixedPoint) {
    auto mask = rgb_to_lab(random_image<3>(16, 16, 3));
    GrayImage thermal(16, 16);
    for (std::size_t i = 0; i < mask.l.size(); ++i) {
        mask.l[i] = std::round(mask.l[i]);
        thermal.data()[i] = static_cast<std::uint8_t>(mask.l[i]);
    }
    EXPECT_EQ(fuse_lab(mask, thermal).l, mask.l);
}

TEST(Fusion, MonotoneInThermal) {
    const auto mask = rgb_to_lab(random_image<3>(1, 1, 4));
    double prev = -1;
    for (int t = 0; t < 256; ++t) {
        const double l = fuse_lab(mask, GrayImage(1, 1, static_cast<std::uint8_t>(t))).l[0];
        EXPECT_GT(l, prev);
        prev = l;
    }
    // Through the byte round trip the order is kept, ties allowed.
    const RgbImage gray_mask(1, 1, 90);
    int prev_byte = -1;
    for (int t = 0; t < 256; t += 5) {
        const int v = fuse(gray_mask, GrayImage(1, 1, static_cast<std::uint8_t>(t))).data()[1];
        EXPECT_GE(v, prev_byte);
        prev_byte = v;
    }
}

TEST(Fusion, AchromaticMaskStaysGray) {
    for (int m : {0, 40, 128, 200, 255})
        for (int t : {0, 77, 255}) {
            const auto out = fuse(RgbImage(4, 4, static_cast<std::uint8_t>(m)), GrayImage(4, 4, static_cast<std::uint8_t>(t)));
            for (std::size_t i = 0; i < out.pixel_count(); ++i) {
                EXPECT_NEAR(out.data()[3 * i], out.data()[3 * i + 1], 1);
                EXPECT_NEAR(out.data()[3 * i + 2], out.data()[3 * i + 1], 1);
            }
        }
}

TEST(Fusion, OutputLuminanceBetweenInputs) {
    const auto mask = random_image<3>(12, 12, 5);
    const auto thermal = random_image<1>(12, 12, 6);
    const auto out_l = rgb_to_lab(fuse(mask, thermal)).l;
    const auto mask_l = rgb_to_lab(mask).l;
    for (std::size_t i = 0; i < out_l.size(); ++i) {
        const double lo = std::min(mask_l[i], double(thermal.data()[i]));
        const double hi = std::max(mask_l[i], double(thermal.data()[i]));
        // Gamut clipping in the byte conversion can move L by a few units.
        EXPECT_GE(out_l[i], lo - 6.0);
        EXPECT_LE(out_l[i], hi + 6.0);
    }
}

TEST(Fusion, SizeHandling) {
    EXPECT_THROW(fuse_lab(constant_lab(4, 4, 0, 128, 128), GrayImage(4, 5)), ShapeError);
    const auto out = fuse(RgbImage(8, 6, 100), GrayImage(32, 24, 100));
    EXPECT_EQ(out.width(), 8u);
    EXPECT_EQ(out.height(), 6u);
}

TEST(Fusion, InGamutLuminanceSurvivesByteRoundTrip) {
    // Low-chroma masks keep the fused color inside sRGB.
    auto mask = random_image<3>(16, 16, 7);
    for (auto& v : mask.data()) v = static_cast<std::uint8_t>(100 + v / 8);
    const auto thermal = random_image<1>(16, 16, 8);
    const auto mask_lab = rgb_to_lab(mask);
    const auto back = rgb_to_lab(fuse(mask, thermal));
    for (std::size_t i = 0; i < back.l.size(); ++i)
        EXPECT_NEAR(back.l[i], (mask_lab.l[i] + thermal.data()[i]) / 2.0, 1.0);
}
