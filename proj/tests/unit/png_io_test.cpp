#include <gtest/gtest.h>

#include <opencv2/imgcodecs.hpp>

#include "dexray/errors.hpp"
#include "dexray/png_io.hpp"
#include "support/temp_dir.hpp"

using namespace dexray;

TEST(PngIo, RoundTripIsLossless) {
    testing_support::TempDir dir;
    RawImage img(7, 11);
    for (int r = 0; r < 7; ++r)
        for (int c = 0; c < 11; ++c)
            img(r, c) = Bgr{std::uint8_t(r * 30), std::uint8_t(c * 20), std::uint8_t((r * c) % 256)};
    const auto path = dir / "nested/a.png";
    io::write_png(path, img);
    EXPECT_EQ(io::read_png(path), img);
}

TEST(PngIo, ChannelOrderIsBgr) {
    testing_support::TempDir dir;
    io::write_png(dir / "b.png", RawImage(1, 1, Bgr{255, 0, 0}));
    const cv::Mat m = cv::imread((dir / "b.png").string(), cv::IMREAD_COLOR);
    EXPECT_EQ(m.at<cv::Vec3b>(0, 0), cv::Vec3b(255, 0, 0));
}

TEST(PngIo, MaskIsSingleChannelZeroOr255) {
    testing_support::TempDir dir;
    BinaryMask m(2, 3);
    m.set(1, 2, true);
    io::write_mask_png(dir / "m.png", m);
    const cv::Mat g = cv::imread((dir / "m.png").string(), cv::IMREAD_UNCHANGED);
    ASSERT_EQ(g.channels(), 1);
    EXPECT_EQ(g.at<std::uint8_t>(1, 2), 255);
    EXPECT_EQ(g.at<std::uint8_t>(0, 0), 0);
}

TEST(PngIo, MissingFileIsIoError) {
    testing_support::TempDir dir;
    EXPECT_THROW(io::read_png(dir / "absent.png"), IoError);
    testing_support::spit(dir / "junk.png", "not a png");
    EXPECT_THROW(io::read_png(dir / "junk.png"), IoError);
}
