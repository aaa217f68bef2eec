#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "dexray/pipeline.hpp"

namespace dexray {

// Effective parameters of a run. Defaults are the reference constants:
// metallic HSV band, J_3 erosion, J_10 closing, half-size output, 70/30
// split, patience 50 within 3000 epochs, 500 timing iterations.
struct RunConfig {
    pipeline::PipelineConfig pipeline;
    double split_ratio = 0.7;
    std::uint64_t seed = 0;
    long long patience = 50;
    long long upper_limit = 3000;
    long long timing_iterations = 500;
    unsigned threads = 0;  // 0 = hardware concurrency

    void validate() const;

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

// Schema shared by the JSON and TOML forms:
//
//   seed = 1
//   split_ratio = 0.7
//   threads = 0
//   [pipeline]
//   hsv_lower = [90, 100, 100]
//   hsv_upper = [180, 255, 255]
//   erode_size = 3
//   close_size = 10
//   resize = [1, 2]
//   network_input = 0        # 0 (or null in JSON) for none, else 224 / 299
//   [eval]
//   patience = 50
//   upper_limit = 3000
//   timing_iterations = 500
//
// Keys may be omitted; unknown keys are rejected with ValidationError.
RunConfig apply_config(const nlohmann::json& doc, RunConfig base = {});

nlohmann::json to_json(const RunConfig& cfg);
std::string to_toml(const RunConfig& cfg);

// .json files are parsed as JSON, everything else as TOML. Throws IoError,
// ParseError or ValidationError.
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

}  // namespace dexray
