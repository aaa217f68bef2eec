#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "dexray/dataset.hpp"
#include "dexray/image.hpp"
#include "dexray/imaging.hpp"

namespace dexray::pipeline {

using imaging::Centroid;
using imaging::Rect;

struct PipelineConfig {
    imaging::HsvBounds hsv_bounds = imaging::kMetallicBand;
    int erode_size = 3;
    int close_size = 10;
    imaging::Scale resize_factor{1, 2};
    std::optional<int> network_input;  // 224 or 299

    // Throws std::invalid_argument.
    void validate() const;

    friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

// Pass-one result for one image. centroid and brect are meaningful only when
// empty_mask is false.
struct PassOneRecord {
    std::string image_id;
    Centroid centroid;
    Rect brect;
    bool empty_mask = true;
};

// Mean bounding-rect size over the contributing (non-empty) records.
struct MeanWindow {
    double w = 0.0;
    double h = 0.0;
    std::size_t count = 0;

    int window_w() const;  // ceil(w)
    int window_h() const;  // ceil(h)
};

// close(erode(in_range(hsv(image)), J_erode), J_close), then its centroid and
// bounding rect.
PassOneRecord analyze_image(const RawImage& image, const PipelineConfig& cfg);

// Same mask stages, exposed for debugging exports.
BinaryMask response_mask(const RawImage& image, const PipelineConfig& cfg);

// Sum/count mean; order independent. Throws NoContributors.
MeanWindow compute_mean_window(std::span<const PassOneRecord> records);

// The incremental form mean += (x - mean) / (n + 1), visiting records in the
// given order. Agrees with compute_mean_window up to round-off.
MeanWindow running_mean_window(std::span<const PassOneRecord> records);

// Window of ceil(mw) size centred on the centroid (to within a pixel), cut
// from the image padded with white by floor/ceil halves of the window, then
// resized by cfg.resize_factor. Empty-mask records are centred on the image
// centre instead.
RawImage extract_window(const RawImage& image, const PassOneRecord& record, const MeanWindow& mw,
                        const PipelineConfig& cfg);

// The pre-resize crop rectangle in original image coordinates (may extend
// past the image edges, where the padding supplies white).
Rect window_in_image(const RawImage& image, const PassOneRecord& record, const MeanWindow& mw);

struct ImageOutcome {
    PassOneRecord record;
    std::filesystem::path output;
    std::optional<std::filesystem::path> network_output;
    std::optional<std::string> error;
};

struct PreprocessReport {
    PipelineConfig config;
    MeanWindow mean_window;
    int output_height = 0;
    int output_width = 0;
    std::vector<ImageOutcome> images;
    std::vector<std::string> empty_masks;
    std::vector<std::string> failures;
    double elapsed_seconds = 0.0;

    std::size_t succeeded() const { return images.size() - failures.size(); }

    nlohmann::json to_json() const;
};

// Two passes over the manifest. Pass one reads and analyses every image,
// pass two writes output_dir/<image_id>.png (and, with network_input set,
// output_dir/net<N>/<image_id>.png). Per-file I/O errors are collected in the
// report. Output is independent of thread count.
PreprocessReport preprocess_corpus(const dataset::DatasetManifest& manifest, const PipelineConfig& cfg,
                                   const std::filesystem::path& output_dir, unsigned threads = 0);

nlohmann::json config_to_json(const PipelineConfig& cfg);

}  // namespace dexray::pipeline
