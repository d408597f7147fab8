#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "support.hpp"
#include "thermocolor/image.hpp"

using namespace thermocolor;
using testing_support::random_image;
using testing_support::TempDir;

namespace {

void write_file(const std::filesystem::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary);
    out << bytes;
}

std::string read_file(const std::filesystem::path& p) {
    const auto b = fileio::read_bytes(p);
    return {b.begin(), b.end()};
}

} // namespace

TEST(Netpbm, DecodesTwoByTwoGray) {
    TempDir dir;
    write_file(dir / "a.pgm", std::string("P5\n2 2\n255\n") + std::string("\x00\xff\x80\x40", 4));
    const auto img = load_pgm(dir / "a.pgm");
    EXPECT_EQ(img, GrayImage(2, 2, std::vector<std::uint8_t>{0, 255, 128, 64}));
}

TEST(Netpbm, AcceptsCommentsInHeader) {
    TempDir dir;
    write_file(dir / "c.pgm", std::string("P5\n# made by hand\n1 1 # width height\n255\n") + "\x07");
    EXPECT_EQ(load_pgm(dir / "c.pgm").at(0, 0), 7);
}

TEST(Netpbm, RejectsAsciiAndWideVariants) {
    TempDir dir;
    write_file(dir / "p2.pgm", "P2\n2 1\n255\n0 255\n");
    EXPECT_THROW(load_pgm(dir / "p2.pgm"), FormatError);
    write_file(dir / "wide.pgm", std::string("P5\n1 1\n65535\n") + std::string("\x00\x01", 2));
    EXPECT_THROW(load_pgm(dir / "wide.pgm"), FormatError);
    write_file(dir / "p6.ppm", std::string("P6\n1 1\n255\n") + "abc");
    EXPECT_THROW(load_pgm(dir / "p6.ppm"), FormatError);
}

TEST(Netpbm, RejectsTruncationAndBadHeaders) {
    TempDir dir;
    write_file(dir / "short.pgm", std::string("P5\n4 4\n255\n") + "abc");
    EXPECT_THROW(load_pgm(dir / "short.pgm"), FormatError);
    write_file(dir / "zero.pgm", "P5\n0 4\n255\n");
    EXPECT_THROW(load_pgm(dir / "zero.pgm"), FormatError);
    write_file(dir / "junk.pgm", "P5\nfour 4\n255\n");
    EXPECT_THROW(load_pgm(dir / "junk.pgm"), FormatError);
    EXPECT_THROW(load_pgm(dir / "missing.pgm"), IoError);
}

TEST(Netpbm, WhitePixelPpmIsHeaderPlusThreeBytes) {
    TempDir dir;
    save_ppm(RgbImage(1, 1, 255), dir / "w.ppm");
    EXPECT_EQ(read_file(dir / "w.ppm"), std::string("P6\n1 1\n255\n\xff\xff\xff"));
}

TEST(Netpbm, SaveLoadRoundTripsBitExactly) {
    TempDir dir;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto g = random_image<1>(64, 64, seed);
        save_pgm(g, dir / "g.pgm");
        EXPECT_EQ(load_pgm(dir / "g.pgm"), g);
        const auto c = random_image<3>(37, 23, seed + 100);
        save_ppm(c, dir / "c.ppm");
        EXPECT_EQ(load_ppm(dir / "c.ppm"), c);
    }
}

TEST(Netpbm, ZeroSizedImagesAreRejected) {
    EXPECT_THROW(GrayImage(0, 3), ShapeError);
    EXPECT_THROW(RgbImage(3, 0), ShapeError);
    TempDir dir;
    EXPECT_THROW(save_ppm(RgbImage(), dir / "e.ppm"), ShapeError);
    EXPECT_FALSE(std::filesystem::exists(dir / "e.ppm"));
}

TEST(Gray, LumaWeights) {
    EXPECT_EQ(rgb_to_gray(RgbImage(1, 1, 255)).at(0, 0), 255);
    RgbImage red(1, 1);
    red.at(0, 0, 0) = 255;
    EXPECT_EQ(rgb_to_gray(red).at(0, 0), 76);
    for (int g = 0; g < 256; ++g)
        EXPECT_EQ(rgb_to_gray(RgbImage(1, 1, static_cast<std::uint8_t>(g))).at(0, 0), g);
}

TEST(Lab, BlackAndWhiteAnchors) {
    const auto black = rgb_to_lab(RgbImage(1, 1, 0));
    EXPECT_NEAR(black.l[0], 0.0, 1e-9);
    EXPECT_NEAR(black.a_chan[0], 128.0, 1e-6);
    EXPECT_NEAR(black.b_chan[0], 128.0, 1e-6);
    const auto white = rgb_to_lab(RgbImage(1, 1, 255));
    EXPECT_NEAR(white.l[0], 255.0, 1e-3);
    EXPECT_NEAR(white.a_chan[0], 128.0, 1e-2);
    EXPECT_NEAR(white.b_chan[0], 128.0, 1e-2);
}

TEST(Lab, RoundTripWithinTwoLevels) {
    const auto img = random_image<3>(100, 100, 42);  // 10^4 pixels
    const auto back = lab_to_rgb(rgb_to_lab(img));
    int worst = 0;
    for (std::size_t i = 0; i < img.data().size(); ++i)
        worst = std::max(worst, std::abs(int(img.data()[i]) - int(back.data()[i])));
    EXPECT_LE(worst, 2);
}

TEST(Lab, PlanesStayInByteRange) {
    const auto lab = rgb_to_lab(random_image<3>(50, 50, 3));
    for (std::size_t i = 0; i < lab.l.size(); ++i) {
        for (double v : {lab.l[i], lab.a_chan[i], lab.b_chan[i]}) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 255.0);
        }
    }
}

TEST(Resize, IdentityWhenSizeUnchanged) {
    const auto img = random_image<3>(17, 9, 5);
    EXPECT_EQ(resize_bilinear(img, 17, 9), img);
}

TEST(Resize, ConstantStaysConstant) {
    for (std::size_t w : {1u, 3u, 50u, 201u})
        for (std::size_t h : {1u, 7u, 200u}) {
            const auto out = resize_bilinear(GrayImage(13, 11, 93), w, h);
            ASSERT_EQ(out.width(), w);
            ASSERT_EQ(out.height(), h);
            for (auto v : out.data()) EXPECT_EQ(v, 93);
        }
}

TEST(Resize, TwoToThreeInterpolatesMidpoint) {
    const auto out = resize_bilinear(GrayImage(2, 1, std::vector<std::uint8_t>{0, 255}), 3, 1);
    EXPECT_EQ(out.at(0, 0), 0);
    EXPECT_NEAR(out.at(0, 1), 128, 1);
    EXPECT_EQ(out.at(0, 2), 255);
}

TEST(Resize, StaysWithinInputRange) {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        auto img = random_image<1>(20, 15, trial);
        for (auto& v : img.data()) v = static_cast<std::uint8_t>(40 + v % 100);
        const auto [lo, hi] = std::minmax_element(img.data().begin(), img.data().end());
        const auto out = resize_bilinear(img, 1 + rng() % 60, 1 + rng() % 60);
        for (auto v : out.data()) {
            EXPECT_GE(v, *lo);
            EXPECT_LE(v, *hi);
        }
    }
}

TEST(Resize, ZeroTargetRejected) { EXPECT_THROW(resize_bilinear(GrayImage(4, 4), 0, 4), ShapeError); }

TEST(Crop, CopiesWindowAndChecksBounds) {
    const auto img = random_image<3>(10, 8, 1);
    const auto c = crop(img, 2, 3, 4, 5);
    ASSERT_EQ(c.width(), 5u);
    ASSERT_EQ(c.height(), 4u);
    for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t col = 0; col < 5; ++col)
            for (std::size_t ch = 0; ch < 3; ++ch) EXPECT_EQ(c.at(r, col, ch), img.at(r + 2, col + 3, ch));
    EXPECT_THROW(crop(img, 5, 0, 4, 5), ShapeError);
}
