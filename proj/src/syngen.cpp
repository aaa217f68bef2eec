#include "dexray/syngen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "dexray/errors.hpp"
#include "dexray/png_io.hpp"
#include "dexray/random.hpp"

namespace dexray::syngen {

using imaging::kMetallicBand;

namespace {

enum class Paint : std::uint8_t { Background, Clutter, Threat };

Hsv band_centre(const HsvBounds& b) {
    return Hsv{static_cast<std::uint8_t>((b.lower.h + b.upper.h) / 2),
               static_cast<std::uint8_t>((b.lower.s + b.upper.s) / 2),
               static_cast<std::uint8_t>((b.lower.v + b.upper.v) / 2)};
}

bool reads_metallic(const Hsv& p) { return kMetallicBand.contains(imaging::bgr_to_hsv(imaging::hsv_to_bgr(p))); }

Hsv draw_from(Rng& rng, const HsvBounds& b) {
    return Hsv{static_cast<std::uint8_t>(rng.uniform_int(b.lower.h, b.upper.h)),
               static_cast<std::uint8_t>(rng.uniform_int(b.lower.s, b.upper.s)),
               static_cast<std::uint8_t>(rng.uniform_int(b.lower.v, b.upper.v))};
}

// Per-pixel value jitter of up to `spread` per channel, clamped into the band.
Hsv jitter(Rng& rng, Hsv base, const HsvBounds& b, int spread) {
    auto one = [&](int v, int lo, int hi) {
        return static_cast<std::uint8_t>(std::clamp(v + static_cast<int>(rng.uniform_int(-spread, spread)), lo, hi));
    };
    return Hsv{one(base.h, b.lower.h, b.upper.h), one(base.s, b.lower.s, b.upper.s),
               one(base.v, b.lower.v, b.upper.v)};
}

BinaryMask threat_footprint(const SceneSpec& spec) {
    BinaryMask fp(spec.height, spec.width);
    const Rect& b = spec.threat_bbox;
    for (int r = b.y; r <= b.bottom(); ++r) {
        for (int c = b.x; c <= b.right(); ++c) {
            bool on = true;
            switch (spec.threat_shape) {
                case ThreatShape::Rectangle:
                    break;
                case ThreatShape::Ellipse: {
                    // Ellipse 1.2x larger than the box, truncated by it, so the
                    // extreme rows and columns carry runs of several pixels.
                    const double cx = b.x + (b.w - 1) / 2.0, cy = b.y + (b.h - 1) / 2.0;
                    const double u = (c - cx) / (0.6 * b.w), v = (r - cy) / (0.6 * b.h);
                    on = u * u + v * v <= 1.0;
                    break;
                }
                case ThreatShape::LPolyomino: {
                    const int bar_w = std::min(b.w, std::max(3, b.w / 2));
                    const int bar_h = std::min(b.h, std::max(3, b.h / 2));
                    on = c < b.x + bar_w || r > b.bottom() - bar_h;
                    break;
                }
            }
            fp.set(r, c, on);
        }
    }
    if (spec.degenerate != Degenerate::Distorted) return fp;

    // Acquisition distortion: sinusoidal horizontal shear of the footprint.
    BinaryMask sheared(spec.height, spec.width);
    const double amp = std::max(2, b.w / 10);
    const double period = std::max(8, b.h / 2);
    for (int r = 0; r < spec.height; ++r) {
        const int shift = static_cast<int>(std::lround(amp * std::sin(2.0 * std::numbers::pi * (r - b.y) / period)));
        for (int c = 0; c < spec.width; ++c)
            if (fp(r, c) && sheared.contains(r, c + shift)) sheared.set(r, c + shift, true);
    }
    return sheared;
}

void paint_ellipse(Grid<Paint>& kind, HsvImage& canvas, int cx, int cy, int rx, int ry, Rng& rng, Hsv base,
                   const HsvBounds& band, int spread) {
    for (int r = std::max(0, cy - ry); r <= std::min(canvas.height() - 1, cy + ry); ++r) {
        for (int c = std::max(0, cx - rx); c <= std::min(canvas.width() - 1, cx + rx); ++c) {
            const double u = double(c - cx) / rx, v = double(r - cy) / ry;
            if (u * u + v * v > 1.0) continue;
            kind(r, c) = Paint::Clutter;
            canvas(r, c) = spread > 0 ? jitter(rng, base, band, spread) : base;
        }
    }
}

}  // namespace

void SceneSpec::validate() const {
    if (width < 1 || height < 1) throw InvalidSpec("scene dimensions must be at least 1x1");
    if (!(noise_level >= 0.0 && noise_level <= 1.0)) throw InvalidSpec("noise_level must lie in [0, 1]");
    if (clutter_count < 0) throw InvalidSpec("clutter_count must be non-negative");
    if (!threat_hue_band.valid() || !kMetallicBand.contains(threat_hue_band))
        throw InvalidSpec("threat band must be a valid sub-range of the metallic band");
    if (!clutter_hue_band.valid() || kMetallicBand.intersects(clutter_hue_band))
        throw InvalidSpec("clutter band must be valid and disjoint from the metallic band");
    if (!reads_metallic(band_centre(threat_hue_band)))
        throw InvalidSpec("threat band centre does not survive BGR quantization inside the metallic band");
    if (reads_metallic(band_centre(clutter_hue_band)))
        throw InvalidSpec("clutter band centre reads as metallic after BGR quantization");
    if (degenerate != Degenerate::Empty) {
        const Rect& b = threat_bbox;
        if (b.w < 1 || b.h < 1 || b.x < 0 || b.y < 0 || b.x + b.w > width || b.y + b.h > height)
            throw InvalidSpec("threat bbox outside the image");
    }
}

Scene generate_scene(const SceneSpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng rng(seed);
    const int noise_spread = static_cast<int>(std::lround(spec.noise_level * 40.0));

    HsvImage canvas(spec.height, spec.width, imaging::whitespace<Hsv>());
    Grid<Paint> kind(spec.height, spec.width, Paint::Background);

    // Background: near-white with sparse low-saturation speckle.
    if (spec.noise_level > 0.0) {
        for (int r = 0; r < spec.height; ++r)
            for (int c = 0; c < spec.width; ++c)
                if (rng.bernoulli(spec.noise_level))
                    canvas(r, c) = Hsv{static_cast<std::uint8_t>(rng.uniform_int(0, 180)),
                                       static_cast<std::uint8_t>(rng.uniform_int(0, 60)),
                                       static_cast<std::uint8_t>(rng.uniform_int(200, 255))};
    }

    const int max_radius = std::max(3, std::min(spec.width, spec.height) / 8);
    for (int k = 0; k < spec.clutter_count; ++k) {
        const int cx = static_cast<int>(rng.uniform_int(0, spec.width - 1));
        const int cy = static_cast<int>(rng.uniform_int(0, spec.height - 1));
        const int rx = static_cast<int>(rng.uniform_int(3, max_radius));
        const int ry = static_cast<int>(rng.uniform_int(3, max_radius));
        const Hsv base = draw_from(rng, spec.clutter_hue_band);
        paint_ellipse(kind, canvas, cx, cy, rx, ry, rng, base, spec.clutter_hue_band, noise_spread);
    }

    if (spec.degenerate == Degenerate::Distorted) {
        const int streaks = static_cast<int>(rng.uniform_int(2, 4));
        for (int k = 0; k < streaks; ++k) {
            const int row = static_cast<int>(rng.uniform_int(0, spec.height - 1));
            const int thickness = static_cast<int>(rng.uniform_int(1, 3));
            const Hsv colour = draw_from(rng, spec.clutter_hue_band);
            for (int r = row; r < std::min(spec.height, row + thickness); ++r)
                for (int c = 0; c < spec.width; ++c) {
                    kind(r, c) = Paint::Clutter;
                    canvas(r, c) = colour;
                }
        }
    }

    Scene scene{RawImage(spec.height, spec.width), GroundTruth{}};
    if (spec.degenerate != Degenerate::Empty) {
        const BinaryMask fp = threat_footprint(spec);
        const Hsv base = draw_from(rng, spec.threat_hue_band);
        for (int r = 0; r < spec.height; ++r)
            for (int c = 0; c < spec.width; ++c)
                if (fp(r, c)) {
                    kind(r, c) = Paint::Threat;
                    canvas(r, c) = noise_spread > 0 ? jitter(rng, base, spec.threat_hue_band, noise_spread) : base;
                }
        if (!fp.empty()) {
            scene.truth.threat_bbox = imaging::bounding_rect(fp);
            scene.truth.threat_centroid = imaging::centroid(fp);
        }
    }

    // Store as BGR; any pixel whose quantized colour lands on the wrong side
    // of the metallic band falls back to a verified colour of its kind.
    const Bgr threat_fallback = imaging::hsv_to_bgr(band_centre(spec.threat_hue_band));
    const Bgr clutter_fallback = imaging::hsv_to_bgr(band_centre(spec.clutter_hue_band));
    for (int r = 0; r < spec.height; ++r) {
        for (int c = 0; c < spec.width; ++c) {
            Bgr bgr = imaging::hsv_to_bgr(canvas(r, c));
            const bool metallic = kMetallicBand.contains(imaging::bgr_to_hsv(bgr));
            const bool want = kind(r, c) == Paint::Threat;
            if (metallic != want) {
                if (want)
                    bgr = threat_fallback;
                else
                    bgr = kind(r, c) == Paint::Clutter ? clutter_fallback : imaging::whitespace<Bgr>();
            }
            scene.image(r, c) = bgr;
        }
    }
    return scene;
}

HsvBounds class_palette(dataset::ClassLabel label) {
    switch (label) {
        case dataset::ClassLabel::AssaultRifle: return {{96, 230, 230}, {108, 255, 255}};
        case dataset::ClassLabel::Revolver: return {{118, 230, 230}, {131, 255, 255}};
        case dataset::ClassLabel::SelfLoadingPistol: return {{140, 230, 230}, {154, 255, 255}};
        case dataset::ClassLabel::Shotgun: return {{163, 230, 230}, {176, 255, 255}};
        case dataset::ClassLabel::SubMachineGun: return {{118, 134, 230}, {131, 154, 255}};
    }
    throw std::invalid_argument("unknown class label");
}

namespace {

std::string group_name(int class_id, int group) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "c%d-g%04d", class_id, group);
    return buf;
}

constexpr int kMargin = 10;

}  // namespace

std::vector<PlannedImage> plan_corpus(const CorpusOptions& options) {
    if (options.views_per_group < 1) throw InvalidSpec("views_per_group must be positive");
    const int usable_w = options.width - 2 * kMargin;
    const int usable_h = options.height - 2 * kMargin;
    if (usable_w < 16 || usable_h < 16) throw InvalidSpec("corpus image size too small");

    std::vector<PlannedImage> plan;
    for (const auto& [label, count] : options.class_counts) {
        if (count < 0) throw InvalidSpec("class counts must be non-negative");
        const int cid = dataset::class_id(label);
        const int groups = (count + options.views_per_group - 1) / options.views_per_group;
        for (int g = 0; g < groups; ++g) {
            const std::string gid = group_name(cid, g);
            Rng rng(derive_seed(options.seed, "syngen/group/" + gid));

            // Shapes cycle by group so every class sees the same mix of fill
            // fractions; the baseline's histogram then separates on colour.
            const auto shape = static_cast<ThreatShape>(g % 3);
            const int base_w = static_cast<int>(rng.uniform_int(usable_w / 3, usable_w / 2));
            const int base_h = static_cast<int>(rng.uniform_int(usable_h / 3, usable_h / 2));

            const int views = std::min(options.views_per_group, count - g * options.views_per_group);
            for (int v = 0; v < views; ++v) {
                const std::string id = gid + "-v" + std::to_string(v);
                const double s = rng.uniform_real(0.85, 1.15);
                int w = static_cast<int>(std::lround(base_w * s));
                int h = static_cast<int>(std::lround(base_h * s));
                if (v % 2 == 1 && rng.bernoulli(0.5)) std::swap(w, h);
                w = std::clamp(w, 12, usable_w);
                h = std::clamp(h, 12, usable_h);

                SceneSpec spec;
                spec.width = options.width;
                spec.height = options.height;
                spec.threat_shape = shape;
                spec.threat_bbox = Rect{static_cast<int>(rng.uniform_int(kMargin, options.width - kMargin - w)),
                                        static_cast<int>(rng.uniform_int(kMargin, options.height - kMargin - h)),
                                        w, h};
                spec.threat_hue_band = class_palette(label);
                spec.clutter_count = static_cast<int>(rng.uniform_int(0, std::max(0, options.max_clutter)));
                spec.noise_level = options.noise_level;

                PlannedImage item;
                item.record = dataset::ImageRecord{id, std::filesystem::path("images") / (id + ".png"), label, gid};
                item.spec = spec;
                item.scene_seed = derive_seed(options.seed, "syngen/scene/" + id);
                plan.push_back(std::move(item));
            }
        }
    }
    return plan;
}

dataset::DatasetManifest generate_corpus(const CorpusOptions& options, const std::filesystem::path& out_dir) {
    const auto plan = plan_corpus(options);

    std::error_code ec;
    std::filesystem::create_directories(out_dir / "images", ec);
    if (ec) throw IoError((out_dir / "images").string(), ec.message());

    dataset::DatasetManifest manifest;
    manifest.source = "syngen seed=" + std::to_string(options.seed) +
                      " views_per_group=" + std::to_string(options.views_per_group);
    manifest.base_dir = out_dir;
    for (const auto& item : plan) {
        auto scene = generate_scene(item.spec, item.scene_seed);
        io::write_png(out_dir / item.record.path, scene.image);
        manifest.records.push_back(item.record);
    }
    manifest.validate();
    dataset::write_manifest(out_dir / "manifest.csv", manifest);
    return manifest;
}

}  // namespace dexray::syngen
