#include <gtest/gtest.h>

#include <cmath>

#include "dexray/errors.hpp"
#include "dexray/pipeline.hpp"
#include "dexray/png_io.hpp"
#include "dexray/syngen.hpp"
#include "support/oracles.hpp"
#include "support/temp_dir.hpp"

using namespace dexray;
using namespace dexray::pipeline;

namespace {

PassOneRecord with_rect(int w, int h) {
    PassOneRecord r;
    r.brect = Rect{0, 0, w, h};
    r.centroid = Centroid{w / 2.0, h / 2.0};
    r.empty_mask = false;
    return r;
}

RawImage numbered(int h, int w) {
    RawImage img(h, w);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) img(r, c) = Bgr{std::uint8_t(r), std::uint8_t(c), 7};
    return img;
}

// Writes `count` clean syngen scenes (plus optional extras) and a manifest.
dataset::DatasetManifest small_corpus(const std::filesystem::path& dir, int count, bool with_empty = false) {
    dataset::DatasetManifest m;
    m.base_dir = dir;
    Rng rng(5);
    for (int i = 0; i < count + (with_empty ? 1 : 0); ++i) {
        syngen::SceneSpec s;
        s.threat_shape = static_cast<syngen::ThreatShape>(i % 3);
        s.threat_bbox = Rect{static_cast<int>(rng.uniform_int(12, 90)), static_cast<int>(rng.uniform_int(12, 60)),
                             static_cast<int>(rng.uniform_int(20, 60)), static_cast<int>(rng.uniform_int(20, 50))};
        s.clutter_count = 2;
        s.noise_level = 0.05;
        if (i == count) s.degenerate = syngen::Degenerate::Empty;
        const std::string id = "img" + std::to_string(i);
        io::write_png(dir / "in" / (id + ".png"), syngen::generate_scene(s, 100 + i).image);
        m.records.push_back({id, std::filesystem::path("in") / (id + ".png"), dataset::ClassLabel::Revolver,
                             "g" + std::to_string(i)});
    }
    return m;
}

}  // namespace

TEST(PipelineConfig, DefaultsAreTheReferenceConstants) {
    const PipelineConfig cfg;
    EXPECT_EQ(cfg.hsv_bounds, (imaging::HsvBounds{{90, 100, 100}, {180, 255, 255}}));
    EXPECT_EQ(cfg.erode_size, 3);
    EXPECT_EQ(cfg.close_size, 10);
    EXPECT_EQ(cfg.resize_factor.num, 1);
    EXPECT_EQ(cfg.resize_factor.den, 2);
    EXPECT_FALSE(cfg.network_input.has_value());
    PipelineConfig bad;
    bad.network_input = 256;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(AnalyzeImage, CleanRectangleShrinksByOnePixelPerSide) {
    syngen::SceneSpec s;
    s.threat_bbox = Rect{10, 10, 40, 20};
    const auto rec = analyze_image(syngen::generate_scene(s, 1).image, PipelineConfig{});
    ASSERT_FALSE(rec.empty_mask);
    EXPECT_EQ(rec.brect, (Rect{11, 11, 38, 18}));
    EXPECT_NEAR(rec.centroid.cx, 29.5, 1.0);
    EXPECT_NEAR(rec.centroid.cy, 19.5, 1.0);
}

TEST(AnalyzeImage, EmptySceneHasNoGeometry) {
    syngen::SceneSpec s;
    s.degenerate = syngen::Degenerate::Empty;
    s.clutter_count = 4;
    EXPECT_TRUE(analyze_image(syngen::generate_scene(s, 2).image, PipelineConfig{}).empty_mask);
}

TEST(AnalyzeImage, AllMetallicImageMatchesMorphologyOracle) {
    const RawImage img(40, 50, imaging::hsv_to_bgr(Hsv{120, 200, 200}));
    const auto rec = analyze_image(img, PipelineConfig{});
    const auto want = *oracle::extent(oracle::close(oracle::erode(BinaryMask(40, 50, true), 3), 10));
    EXPECT_EQ(rec.brect, (Rect{want.min_c, want.min_r, want.max_c - want.min_c + 1, want.max_r - want.min_r + 1}));
    // The zero border costs the closing 5 cells on the top/left and 4 on the
    // bottom/right with the (5,5) anchor of J_10.
    EXPECT_EQ(rec.brect, (Rect{5, 5, 41, 31}));
}

TEST(AnalyzeImage, ResponseMaskMatchesOracleComposition) {
    Rng rng(3);
    for (int i = 0; i < 20; ++i) {
        RawImage img(24, 24, Bgr{255, 255, 255});
        for (auto& p : img.pixels())
            if (rng.bernoulli(0.6)) p = imaging::hsv_to_bgr(Hsv{110, 220, 220});
        BinaryMask raw(24, 24);
        for (int r = 0; r < 24; ++r)
            for (int c = 0; c < 24; ++c) raw.set(r, c, img(r, c) != Bgr{255, 255, 255});
        EXPECT_EQ(response_mask(img, PipelineConfig{}), oracle::close(oracle::erode(raw, 3), 10));
    }
}

TEST(MeanWindow, ArithmeticMean) {
    const std::vector<PassOneRecord> recs{with_rect(10, 20), with_rect(30, 40), with_rect(20, 30)};
    const auto mw = compute_mean_window(recs);
    EXPECT_DOUBLE_EQ(mw.w, 20.0);
    EXPECT_DOUBLE_EQ(mw.h, 30.0);
    EXPECT_EQ(mw.count, 3u);
}

TEST(MeanWindow, SingleRecord) {
    const std::vector<PassOneRecord> recs{with_rect(7, 9)};
    const auto mw = compute_mean_window(recs);
    EXPECT_DOUBLE_EQ(mw.w, 7.0);
    EXPECT_DOUBLE_EQ(mw.h, 9.0);
}

TEST(MeanWindow, EmptyRecordsAreExcluded) {
    std::vector<PassOneRecord> recs{with_rect(10, 10), PassOneRecord{}, with_rect(20, 30)};
    const auto mw = compute_mean_window(recs);
    EXPECT_EQ(mw.count, 2u);
    EXPECT_DOUBLE_EQ(mw.w, 15.0);
    const std::vector<PassOneRecord> none{PassOneRecord{}, PassOneRecord{}};
    EXPECT_THROW(compute_mean_window(none), NoContributors);
    EXPECT_THROW(running_mean_window(none), NoContributors);
}

TEST(MeanWindow, RecurrenceAgreesWithSumOverCountInAnyOrder) {
    Rng rng(4);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<PassOneRecord> recs;
        for (int i = 0; i < 100; ++i)
            recs.push_back(with_rect(static_cast<int>(rng.uniform_int(1, 500)), static_cast<int>(rng.uniform_int(1, 500))));
        const auto direct = compute_mean_window(recs);
        for (int perm = 0; perm < 5; ++perm) {
            rng.shuffle(std::span<PassOneRecord>(recs));
            const auto running = running_mean_window(recs);
            EXPECT_NEAR(running.w, direct.w, 1e-9 * direct.w);
            EXPECT_NEAR(running.h, direct.h, 1e-9 * direct.h);
            const auto again = compute_mean_window(recs);
            EXPECT_EQ(again.w, direct.w);
            EXPECT_EQ(again.h, direct.h);
        }
    }
}

TEST(ExtractWindow, CentredWindowHandTrace) {
    // 100x100, centroid (49.5, 49.5) rounds to 50; window 40 wide, 20 high.
    const auto img = numbered(100, 100);
    PassOneRecord rec = with_rect(1, 1);
    rec.centroid = Centroid{49.5, 49.5};
    const MeanWindow mw{40.0, 20.0, 1};
    EXPECT_EQ(window_in_image(img, rec, mw), (Rect{30, 40, 40, 20}));
    const auto out = extract_window(img, rec, mw, PipelineConfig{});
    EXPECT_EQ(out.height(), 10);
    EXPECT_EQ(out.width(), 20);
    PipelineConfig full;
    full.resize_factor = {1, 1};
    EXPECT_EQ(extract_window(img, rec, mw, full), imaging::crop(img, Rect{30, 40, 40, 20}));
}

TEST(ExtractWindow, FullSizeWindowAroundCentreIsTheImage) {
    for (auto [h, w] : {std::pair{60, 80}, {61, 81}, {7, 5}}) {
        const auto img = numbered(h, w);
        PassOneRecord rec = with_rect(w, h);
        rec.centroid = Centroid{(w - 1) / 2.0, (h - 1) / 2.0};
        const MeanWindow mw{double(w), double(h), 1};
        const Rect win = window_in_image(img, rec, mw);
        EXPECT_LE(std::abs(win.x), 1);
        EXPECT_LE(std::abs(win.y), 1);
        PipelineConfig one;
        one.resize_factor = {1, 1};
        const auto out = extract_window(img, rec, mw, one);
        ASSERT_EQ(out.height(), h);
        ASSERT_EQ(out.width(), w);
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c) {
                const int sr = r + win.y, sc = c + win.x;
                if (img.contains(sr, sc))
                    ASSERT_EQ(out(r, c), img(sr, sc));
                else
                    ASSERT_EQ(out(r, c), (Bgr{255, 255, 255}));
            }
        EXPECT_EQ(extract_window(img, rec, mw, PipelineConfig{}), imaging::resize(out, imaging::Scale{1, 2}));
    }
}

TEST(ExtractWindow, FractionalMeanRoundsUp) {
    const auto img = numbered(50, 50);
    PassOneRecord rec = with_rect(1, 1);
    rec.centroid = Centroid{20.2, 30.7};
    const MeanWindow mw{12.1, 9.9, 3};
    const Rect win = window_in_image(img, rec, mw);
    EXPECT_EQ(win, (Rect{20 - 6, 31 - 5, 13, 10}));
    const auto out = extract_window(img, rec, mw, PipelineConfig{});
    EXPECT_EQ(out.height(), 5);
    EXPECT_EQ(out.width(), 6);
}

TEST(ExtractWindow, EmptyMaskUsesImageCentre) {
    const auto img = numbered(40, 60);
    const PassOneRecord empty;
    const MeanWindow mw{20.0, 10.0, 4};
    const Rect win = window_in_image(img, empty, mw);
    EXPECT_EQ(win.w, 20);
    EXPECT_EQ(win.h, 10);
    EXPECT_NEAR(win.x + (win.w - 1) / 2.0, 29.5, 1.0);
    EXPECT_NEAR(win.y + (win.h - 1) / 2.0, 19.5, 1.0);
    const auto out = extract_window(img, empty, mw, PipelineConfig{});
    EXPECT_EQ(out.height(), 5);
    EXPECT_EQ(out.width(), 10);
}

// Symmetric threats are centred in their box, so a window one pixel wider
// than the box on each side keeps all of them. An L's centroid sits towards
// its corner; any window twice the box size keeps it whole.
TEST(ExtractWindow, WindowKeepsEveryThreatPixelWhenLargeEnough) {
    Rng rng(6);
    for (int i = 0; i < 90; ++i) {
        syngen::SceneSpec s;
        s.threat_shape = static_cast<syngen::ThreatShape>(i % 3);
        s.threat_bbox = Rect{static_cast<int>(rng.uniform_int(12, 100)), static_cast<int>(rng.uniform_int(12, 70)),
                             static_cast<int>(rng.uniform_int(12, 60)), static_cast<int>(rng.uniform_int(12, 50))};
        const auto scene = syngen::generate_scene(s, rng.next());
        const auto rec = analyze_image(scene.image, PipelineConfig{});
        const auto& truth = *scene.truth.threat_bbox;
        const bool symmetric = s.threat_shape != syngen::ThreatShape::LPolyomino;
        const MeanWindow mw = symmetric ? MeanWindow{double(truth.w + 2), double(truth.h + 2), 1}
                                        : MeanWindow{double(2 * truth.w), double(2 * truth.h), 1};
        const Rect win = window_in_image(scene.image, rec, mw);
        const auto metal = imaging::in_range(imaging::bgr_to_hsv(scene.image), imaging::kMetallicBand);
        for (int r = 0; r < metal.height(); ++r)
            for (int c = 0; c < metal.width(); ++c)
                if (metal(r, c)) ASSERT_TRUE(win.contains(r, c)) << "scene " << i;
    }
}

TEST(PreprocessCorpus, UniformOutputsAndEmptyFallback) {
    testing_support::TempDir dir;
    const auto m = small_corpus(dir.path(), 6, true);
    PipelineConfig cfg;
    cfg.network_input = 224;
    const auto report = preprocess_corpus(m, cfg, dir / "out", 2);
    EXPECT_EQ(report.mean_window.count, 6u);
    EXPECT_TRUE(report.failures.empty());
    ASSERT_EQ(report.empty_masks.size(), 1u);
    EXPECT_EQ(report.empty_masks[0], "img6");
    EXPECT_EQ(report.output_height, report.mean_window.window_h() / 2);
    EXPECT_EQ(report.output_width, report.mean_window.window_w() / 2);
    for (const auto& r : m.records) {
        const auto out = io::read_png(dir / "out" / (r.image_id + ".png"));
        EXPECT_EQ(out.height(), report.output_height);
        EXPECT_EQ(out.width(), report.output_width);
        const auto net = io::read_png(dir / "out/net224" / (r.image_id + ".png"));
        EXPECT_EQ(net.height(), 224);
        EXPECT_EQ(net.width(), 224);
    }
}

TEST(PreprocessCorpus, DeterministicAcrossRunsAndThreadCounts) {
    testing_support::TempDir dir;
    const auto m = small_corpus(dir.path(), 8);
    auto a = preprocess_corpus(m, PipelineConfig{}, dir / "a", 1).to_json();
    auto b = preprocess_corpus(m, PipelineConfig{}, dir / "b", 4).to_json();
    a.erase("elapsed_seconds");
    b.erase("elapsed_seconds");
    EXPECT_EQ(a, b);
    for (const auto& r : m.records)
        EXPECT_EQ(testing_support::slurp(dir / "a" / (r.image_id + ".png")),
                  testing_support::slurp(dir / "b" / (r.image_id + ".png")));
}

TEST(PreprocessCorpus, UnreadableFileIsReportedNotFatal) {
    testing_support::TempDir dir;
    auto m = small_corpus(dir.path(), 3);
    testing_support::spit(dir / "in/img1.png", "garbage");
    const auto report = preprocess_corpus(m, PipelineConfig{}, dir / "out", 1);
    ASSERT_EQ(report.failures.size(), 1u);
    EXPECT_EQ(report.failures[0], "img1");
    EXPECT_EQ(report.succeeded(), 2u);
    EXPECT_TRUE(report.images[1].error.has_value());
    EXPECT_TRUE(std::filesystem::exists(dir / "out/img0.png"));
}

TEST(PreprocessCorpus, AllEmptyIsNoContributors) {
    testing_support::TempDir dir;
    syngen::SceneSpec s;
    s.degenerate = syngen::Degenerate::Empty;
    io::write_png(dir / "e.png", syngen::generate_scene(s, 1).image);
    dataset::DatasetManifest m;
    m.base_dir = dir.path();
    m.records.push_back({"e", "e.png", dataset::ClassLabel::Shotgun, "g"});
    EXPECT_THROW(preprocess_corpus(m, PipelineConfig{}, dir / "out", 1), NoContributors);
}
