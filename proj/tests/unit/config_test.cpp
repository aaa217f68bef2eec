#include <gtest/gtest.h>

#include "dexray/config.hpp"
#include "dexray/errors.hpp"
#include "support/temp_dir.hpp"

using namespace dexray;

TEST(Config, Defaults) {
    const RunConfig cfg;
    EXPECT_EQ(cfg.pipeline.hsv_bounds.lower, (Hsv{90, 100, 100}));
    EXPECT_EQ(cfg.pipeline.hsv_bounds.upper, (Hsv{180, 255, 255}));
    EXPECT_EQ(cfg.pipeline.erode_size, 3);
    EXPECT_EQ(cfg.pipeline.close_size, 10);
    EXPECT_EQ(cfg.pipeline.resize_factor.num, 1);
    EXPECT_EQ(cfg.pipeline.resize_factor.den, 2);
    EXPECT_FALSE(cfg.pipeline.network_input.has_value());
    EXPECT_DOUBLE_EQ(cfg.split_ratio, 0.7);
    EXPECT_EQ(cfg.patience, 50);
    EXPECT_EQ(cfg.upper_limit, 3000);
    EXPECT_EQ(cfg.timing_iterations, 500);
    EXPECT_NO_THROW(cfg.validate());
}

TEST(Config, TomlOverrides) {
    testing_support::TempDir dir;
    testing_support::spit(dir / "run.toml",
                          "seed = 9\nsplit_ratio = 0.5\n[pipeline]\nerode_size = 5\nnetwork_input = 299\n"
                          "[eval]\npatience = 7\n");
    const auto cfg = load_config(dir / "run.toml");
    EXPECT_EQ(cfg.seed, 9u);
    EXPECT_DOUBLE_EQ(cfg.split_ratio, 0.5);
    EXPECT_EQ(cfg.pipeline.erode_size, 5);
    EXPECT_EQ(cfg.pipeline.close_size, 10);
    EXPECT_EQ(cfg.pipeline.network_input, 299);
    EXPECT_EQ(cfg.patience, 7);
}

TEST(Config, JsonOverrides) {
    testing_support::TempDir dir;
    testing_support::spit(dir / "run.json",
                          R"({"pipeline": {"hsv_lower": [80, 90, 100], "network_input": null}, "threads": 3})");
    const auto cfg = load_config(dir / "run.json");
    EXPECT_EQ(cfg.pipeline.hsv_bounds.lower, (Hsv{80, 90, 100}));
    EXPECT_EQ(cfg.threads, 3u);
}

TEST(Config, Rejections) {
    testing_support::TempDir dir;
    testing_support::spit(dir / "a.toml", "colour = 1\n");
    EXPECT_THROW(load_config(dir / "a.toml"), ValidationError);
    testing_support::spit(dir / "b.toml", "[pipeline]\nerode = 3\n");
    EXPECT_THROW(load_config(dir / "b.toml"), ValidationError);
    testing_support::spit(dir / "c.toml", "split_ratio = 1.5\n");
    EXPECT_THROW(load_config(dir / "c.toml"), ValidationError);
    testing_support::spit(dir / "d.toml", "[pipeline]\nnetwork_input = 256\n");
    EXPECT_THROW(load_config(dir / "d.toml"), ValidationError);
    testing_support::spit(dir / "e.toml", "seed = = 1\n");
    EXPECT_THROW(load_config(dir / "e.toml"), ParseError);
    EXPECT_THROW(load_config(dir / "missing.toml"), IoError);
}

TEST(Config, TomlRoundTrip) {
    RunConfig cfg;
    cfg.seed = 42;
    cfg.split_ratio = 0.65;
    cfg.pipeline.close_size = 7;
    cfg.pipeline.network_input = 224;
    cfg.timing_iterations = 3;
    testing_support::TempDir dir;
    testing_support::spit(dir / "dump.toml", to_toml(cfg));
    EXPECT_EQ(load_config(dir / "dump.toml"), cfg);
    EXPECT_EQ(apply_config(to_json(cfg)), cfg);
}
