#include "dexray/png_io.hpp"

#include <cstring>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "dexray/errors.hpp"

namespace dexray::io {

namespace {

const std::vector<int> kPngParams{cv::IMWRITE_PNG_COMPRESSION, 6};

void ensure_parent(const std::filesystem::path& path) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError(path.string(), ec.message());
}

void encode(const std::filesystem::path& path, const cv::Mat& mat) {
    ensure_parent(path);
    bool ok = false;
    try {
        ok = cv::imwrite(path.string(), mat, kPngParams);
    } catch (const cv::Exception& e) {
        throw IoError(path.string(), e.what());
    }
    if (!ok) throw IoError(path.string(), "failed to write PNG");
}

}  // namespace

RawImage read_png(const std::filesystem::path& path) {
    if (!std::filesystem::is_regular_file(path)) throw IoError(path.string(), "no such file");
    cv::Mat mat;
    try {
        mat = cv::imread(path.string(), cv::IMREAD_COLOR);
    } catch (const cv::Exception& e) {
        throw IoError(path.string(), e.what());
    }
    if (mat.empty() || mat.type() != CV_8UC3) throw IoError(path.string(), "not a decodable 8-bit colour image");

    RawImage image(mat.rows, mat.cols);
    for (int r = 0; r < mat.rows; ++r) {
        const auto* row = mat.ptr<cv::Vec3b>(r);
        for (int c = 0; c < mat.cols; ++c) image(r, c) = Bgr{row[c][0], row[c][1], row[c][2]};
    }
    return image;
}

void write_png(const std::filesystem::path& path, const RawImage& image) {
    cv::Mat mat(image.height(), image.width(), CV_8UC3);
    for (int r = 0; r < image.height(); ++r) {
        auto* row = mat.ptr<cv::Vec3b>(r);
        for (int c = 0; c < image.width(); ++c) {
            const Bgr& p = image(r, c);
            row[c] = cv::Vec3b(p.b, p.g, p.r);
        }
    }
    encode(path, mat);
}

void write_mask_png(const std::filesystem::path& path, const BinaryMask& mask) {
    cv::Mat mat(mask.height(), mask.width(), CV_8UC1);
    for (int r = 0; r < mask.height(); ++r) {
        auto* row = mat.ptr<std::uint8_t>(r);
        for (int c = 0; c < mask.width(); ++c) row[c] = mask(r, c) ? 255 : 0;
    }
    encode(path, mat);
}

}  // namespace dexray::io
