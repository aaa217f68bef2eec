#include "dexray/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <thread>

#include "dexray/errors.hpp"
#include "dexray/png_io.hpp"

namespace dexray::pipeline {

void PipelineConfig::validate() const {
    if (!hsv_bounds.valid()) throw std::invalid_argument("hsv bounds must satisfy lower <= upper with H <= 180");
    if (erode_size < 1 || close_size < 1) throw std::invalid_argument("structuring element sizes must be positive");
    if (resize_factor.num < 1 || resize_factor.den < 1) throw std::invalid_argument("resize factor must be positive");
    if (network_input && *network_input != 224 && *network_input != 299)
        throw std::invalid_argument("network input must be 224 or 299");
}

int MeanWindow::window_w() const { return static_cast<int>(std::ceil(w)); }
int MeanWindow::window_h() const { return static_cast<int>(std::ceil(h)); }

BinaryMask response_mask(const RawImage& image, const PipelineConfig& cfg) {
    const auto hsv = imaging::bgr_to_hsv(image);
    const auto mask = imaging::in_range(hsv, cfg.hsv_bounds);
    const auto eroded = imaging::erode(mask, imaging::StructuringElement(cfg.erode_size));
    return imaging::close(eroded, imaging::StructuringElement(cfg.close_size));
}

PassOneRecord analyze_image(const RawImage& image, const PipelineConfig& cfg) {
    const auto morphed = response_mask(image, cfg);
    PassOneRecord rec;
    if (morphed.empty()) return rec;
    rec.centroid = imaging::centroid(morphed);
    rec.brect = imaging::bounding_rect(morphed);
    rec.empty_mask = false;
    return rec;
}

MeanWindow compute_mean_window(std::span<const PassOneRecord> records) {
    long long sum_w = 0, sum_h = 0;
    std::size_t n = 0;
    for (const auto& r : records) {
        if (r.empty_mask) continue;
        sum_w += r.brect.w;
        sum_h += r.brect.h;
        ++n;
    }
    if (n == 0) throw NoContributors();
    return MeanWindow{static_cast<double>(sum_w) / n, static_cast<double>(sum_h) / n, n};
}

MeanWindow running_mean_window(std::span<const PassOneRecord> records) {
    MeanWindow mw;
    for (const auto& r : records) {
        if (r.empty_mask) continue;
        const double step = 1.0 / static_cast<double>(mw.count + 1);
        mw.w += step * (r.brect.w - mw.w);
        mw.h += step * (r.brect.h - mw.h);
        ++mw.count;
    }
    if (mw.count == 0) throw NoContributors();
    return mw;
}

namespace {

struct Placement {
    int top, bottom, left, right;
    int origin_x, origin_y;  // window origin in padded coordinates
    int w, h;
};

Placement place(const RawImage& image, const PassOneRecord& record, const MeanWindow& mw) {
    if (mw.count == 0 || !(mw.w > 0.0) || !(mw.h > 0.0)) throw std::invalid_argument("mean window is not valid");
    const int w = mw.window_w(), h = mw.window_h();
    const double cx = record.empty_mask ? (image.width() - 1) / 2.0 : record.centroid.cx;
    const double cy = record.empty_mask ? (image.height() - 1) / 2.0 : record.centroid.cy;
    return Placement{h / 2, h - h / 2, w / 2, w - w / 2, static_cast<int>(std::lround(cx)),
                     static_cast<int>(std::lround(cy)), w, h};
}

}  // namespace

Rect window_in_image(const RawImage& image, const PassOneRecord& record, const MeanWindow& mw) {
    const auto p = place(image, record, mw);
    return Rect{p.origin_x - p.left, p.origin_y - p.top, p.w, p.h};
}

RawImage extract_window(const RawImage& image, const PassOneRecord& record, const MeanWindow& mw,
                        const PipelineConfig& cfg) {
    const auto p = place(image, record, mw);
    const auto padded = imaging::pad(image, p.top, p.bottom, p.left, p.right);
    const auto window = imaging::crop(padded, Rect{p.origin_x, p.origin_y, p.w, p.h});
    return imaging::resize(window, cfg.resize_factor);
}

namespace {

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body) {
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> workers;
    const unsigned count = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    workers.reserve(count);
    for (unsigned t = 0; t < count; ++t) {
        workers.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) body(i);
        });
    }
}

}  // namespace

PreprocessReport preprocess_corpus(const dataset::DatasetManifest& manifest, const PipelineConfig& cfg,
                                   const std::filesystem::path& output_dir, unsigned threads) {
    cfg.validate();
    const auto started = std::chrono::steady_clock::now();
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());

    std::error_code ec;
    std::filesystem::create_directories(output_dir, ec);
    if (ec) throw IoError(output_dir.string(), ec.message());

    PreprocessReport report;
    report.config = cfg;
    const auto& records = manifest.records;
    report.images.resize(records.size());

    // Pass one: geometry.
    parallel_for(records.size(), threads, [&](std::size_t i) {
        auto& out = report.images[i];
        out.record.image_id = records[i].image_id;
        try {
            const auto image = io::read_png(manifest.resolve(records[i]));
            out.record = analyze_image(image, cfg);
            out.record.image_id = records[i].image_id;
        } catch (const Error& e) {
            out.error = e.what();
        }
    });

    std::vector<PassOneRecord> pass_one;
    pass_one.reserve(records.size());
    for (const auto& img : report.images)
        if (!img.error) pass_one.push_back(img.record);
    report.mean_window = compute_mean_window(pass_one);
    report.output_height =
        static_cast<int>(static_cast<long long>(report.mean_window.window_h()) * cfg.resize_factor.num /
                         cfg.resize_factor.den);
    report.output_width =
        static_cast<int>(static_cast<long long>(report.mean_window.window_w()) * cfg.resize_factor.num /
                         cfg.resize_factor.den);

    // Pass two: windows.
    parallel_for(records.size(), threads, [&](std::size_t i) {
        auto& out = report.images[i];
        if (out.error) return;
        try {
            const auto image = io::read_png(manifest.resolve(records[i]));
            const auto window = extract_window(image, out.record, report.mean_window, cfg);
            out.output = records[i].image_id + ".png";
            io::write_png(output_dir / out.output, window);
            if (cfg.network_input) {
                const int n = *cfg.network_input;
                out.network_output = std::filesystem::path("net" + std::to_string(n)) / out.output;
                io::write_png(output_dir / *out.network_output, imaging::shorter_side_crop(window, n));
            }
        } catch (const Error& e) {
            out.error = e.what();
        }
    });

    for (const auto& img : report.images) {
        if (img.error)
            report.failures.push_back(img.record.image_id);
        else if (img.record.empty_mask)
            report.empty_masks.push_back(img.record.image_id);
    }
    report.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return report;
}

nlohmann::json config_to_json(const PipelineConfig& cfg) {
    const auto& b = cfg.hsv_bounds;
    nlohmann::json j{{"hsv_lower", {b.lower.h, b.lower.s, b.lower.v}},
                     {"hsv_upper", {b.upper.h, b.upper.s, b.upper.v}},
                     {"erode_size", cfg.erode_size},
                     {"close_size", cfg.close_size},
                     {"resize", {cfg.resize_factor.num, cfg.resize_factor.den}}};
    j["network_input"] = cfg.network_input ? nlohmann::json(*cfg.network_input) : nlohmann::json(nullptr);
    return j;
}

nlohmann::json PreprocessReport::to_json() const {
    nlohmann::json j;
    j["config"] = config_to_json(config);
    j["colour_space"] = "BGR";
    j["mean_window"] = {{"w", mean_window.w}, {"h", mean_window.h}, {"count", mean_window.count}};
    j["output_size"] = {{"height", output_height}, {"width", output_width}};
    auto& rows = j["images"] = nlohmann::json::array();
    for (const auto& img : images) {
        nlohmann::json row{{"image_id", img.record.image_id}, {"empty_mask", img.record.empty_mask}};
        if (!img.error && !img.record.empty_mask) {
            row["centroid"] = {img.record.centroid.cx, img.record.centroid.cy};
            const auto& r = img.record.brect;
            row["brect"] = {{"x", r.x}, {"y", r.y}, {"w", r.w}, {"h", r.h}};
        } else {
            row["centroid"] = nullptr;
            row["brect"] = nullptr;
        }
        row["output"] = img.error ? nlohmann::json(nullptr) : nlohmann::json(img.output.generic_string());
        row["network_output"] =
            img.network_output ? nlohmann::json(img.network_output->generic_string()) : nlohmann::json(nullptr);
        row["error"] = img.error ? nlohmann::json(*img.error) : nlohmann::json(nullptr);
        rows.push_back(std::move(row));
    }
    j["empty_masks"] = empty_masks;
    j["failures"] = failures;
    j["elapsed_seconds"] = elapsed_seconds;
    return j;
}

}  // namespace dexray::pipeline
