#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dexray/dataset.hpp"
#include "dexray/image.hpp"
#include "dexray/imaging.hpp"

namespace dexray::syngen {

using imaging::Centroid;
using imaging::HsvBounds;
using imaging::Rect;

enum class ThreatShape { Ellipse, Rectangle, LPolyomino };

enum class Degenerate { None, Empty, Distorted };

// One synthetic false-colour scan. The threat is painted from
// threat_hue_band, which must sit inside the metallic band; clutter blobs
// and background stay outside it.
struct SceneSpec {
    int width = 192;
    int height = 144;
    ThreatShape threat_shape = ThreatShape::Rectangle;
    Rect threat_bbox{60, 40, 60, 40};
    HsvBounds threat_hue_band{{100, 150, 130}, {130, 255, 255}};
    int clutter_count = 0;
    HsvBounds clutter_hue_band{{8, 110, 110}, {40, 255, 255}};
    double noise_level = 0.0;
    Degenerate degenerate = Degenerate::None;

    // Throws InvalidSpec.
    void validate() const;
};

// Geometry of the painted threat pixels. Both fields are empty for an
// empty scene.
struct GroundTruth {
    std::optional<Rect> threat_bbox;
    std::optional<Centroid> threat_centroid;
    dataset::ClassLabel class_label = dataset::ClassLabel::AssaultRifle;
    std::string imagegroup_id;
};

struct Scene {
    RawImage image;
    GroundTruth truth;
};

// Pure in (spec, seed). The ground truth is measured from the painted
// pixels, so it is exact for every shape.
Scene generate_scene(const SceneSpec& spec, std::uint64_t seed);

// Threat colour band per class. The bands occupy disjoint cells of an
// 8x8x8 HSV histogram.
HsvBounds class_palette(dataset::ClassLabel label);

struct CorpusOptions {
    std::map<dataset::ClassLabel, int> class_counts;
    int views_per_group = 3;
    std::uint64_t seed = 0;
    int width = 192;
    int height = 144;
    int max_clutter = 3;
    double noise_level = 0.05;
};

// One planned image: which group and view it belongs to and the scene that
// renders it.
struct PlannedImage {
    dataset::ImageRecord record;
    SceneSpec spec;
    std::uint64_t scene_seed = 0;
};

// Layout of a corpus without rendering it. Groups hold views_per_group
// images each, the last group of a class may be smaller. Members of a group
// share class, shape and colour and differ by translation, scale and
// optional 90 degree rotation of the threat footprint.
std::vector<PlannedImage> plan_corpus(const CorpusOptions& options);

// Renders every planned image to out_dir/images/<image_id>.png and writes
// out_dir/manifest.csv. Throws IoError.
dataset::DatasetManifest generate_corpus(const CorpusOptions& options, const std::filesystem::path& out_dir);

}  // namespace dexray::syngen
