#include "dexray/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include "dexray/errors.hpp"

namespace dexray {

void RunConfig::validate() const {
    try {
        pipeline.validate();
    } catch (const std::invalid_argument& e) {
        throw ValidationError(std::string("pipeline: ") + e.what());
    }
    if (!(split_ratio > 0.0 && split_ratio < 1.0)) throw ValidationError("split_ratio must lie in (0, 1)");
    if (patience < 1) throw ValidationError("eval.patience must be positive");
    if (upper_limit < 1) throw ValidationError("eval.upper_limit must be positive");
    if (timing_iterations < 1) throw ValidationError("eval.timing_iterations must be positive");
}

namespace {

using nlohmann::json;

std::uint8_t channel(const json& v, int hi, const std::string& key) {
    if (!v.is_number_integer()) throw ValidationError(key + " entries must be integers");
    const auto x = v.get<long long>();
    if (x < 0 || x > hi) throw ValidationError(key + " entry " + std::to_string(x) + " out of range");
    return static_cast<std::uint8_t>(x);
}

Hsv triple(const json& v, const std::string& key) {
    if (!v.is_array() || v.size() != 3) throw ValidationError(key + " must be a 3-element array");
    return Hsv{channel(v[0], 180, key), channel(v[1], 255, key), channel(v[2], 255, key)};
}

long long integer(const json& v, const std::string& key) {
    if (!v.is_number_integer()) throw ValidationError(key + " must be an integer");
    return v.get<long long>();
}

double number(const json& v, const std::string& key) {
    if (!v.is_number()) throw ValidationError(key + " must be a number");
    return v.get<double>();
}

const json& object(const json& v, const std::string& key) {
    if (!v.is_object()) throw ValidationError(key + " must be a table");
    return v;
}

json toml_to_json(const toml::node& node) {
    if (const auto* t = node.as_table()) {
        json out = json::object();
        for (const auto& [k, v] : *t) out[std::string(k.str())] = toml_to_json(v);
        return out;
    }
    if (const auto* a = node.as_array()) {
        json out = json::array();
        for (const auto& v : *a) out.push_back(toml_to_json(v));
        return out;
    }
    if (const auto* i = node.as_integer()) return i->get();
    if (const auto* f = node.as_floating_point()) return f->get();
    if (const auto* b = node.as_boolean()) return b->get();
    if (const auto* s = node.as_string()) return s->get();
    throw ValidationError("unsupported TOML value type");
}

std::string shortest(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    std::string s(buf, res.ptr);
    if (s.find_first_of(".eE") == std::string::npos) s += ".0";
    return s;
}

}  // namespace

RunConfig apply_config(const json& doc, RunConfig cfg) {
    object(doc, "config");
    for (const auto& [key, value] : doc.items()) {
        if (key == "seed") {
            const auto s = integer(value, key);
            if (s < 0) throw ValidationError("seed must be non-negative");
            cfg.seed = static_cast<std::uint64_t>(s);
        } else if (key == "split_ratio") {
            cfg.split_ratio = number(value, key);
        } else if (key == "threads") {
            const auto t = integer(value, key);
            if (t < 0) throw ValidationError("threads must be non-negative");
            cfg.threads = static_cast<unsigned>(t);
        } else if (key == "pipeline") {
            for (const auto& [k, v] : object(value, key).items()) {
                const std::string path = "pipeline." + k;
                if (k == "hsv_lower") {
                    cfg.pipeline.hsv_bounds.lower = triple(v, path);
                } else if (k == "hsv_upper") {
                    cfg.pipeline.hsv_bounds.upper = triple(v, path);
                } else if (k == "erode_size") {
                    cfg.pipeline.erode_size = static_cast<int>(integer(v, path));
                } else if (k == "close_size") {
                    cfg.pipeline.close_size = static_cast<int>(integer(v, path));
                } else if (k == "resize") {
                    if (!v.is_array() || v.size() != 2) throw ValidationError(path + " must be [num, den]");
                    cfg.pipeline.resize_factor = {static_cast<int>(integer(v[0], path)),
                                                  static_cast<int>(integer(v[1], path))};
                } else if (k == "network_input") {
                    if (v.is_null() || (v.is_number_integer() && v.get<long long>() == 0))
                        cfg.pipeline.network_input.reset();
                    else
                        cfg.pipeline.network_input = static_cast<int>(integer(v, path));
                } else {
                    throw ValidationError("unknown config key '" + path + "'");
                }
            }
        } else if (key == "eval") {
            for (const auto& [k, v] : object(value, key).items()) {
                const std::string path = "eval." + k;
                if (k == "patience")
                    cfg.patience = integer(v, path);
                else if (k == "upper_limit")
                    cfg.upper_limit = integer(v, path);
                else if (k == "timing_iterations")
                    cfg.timing_iterations = integer(v, path);
                else
                    throw ValidationError("unknown config key '" + path + "'");
            }
        } else {
            throw ValidationError("unknown config key '" + key + "'");
        }
    }
    cfg.validate();
    return cfg;
}

json to_json(const RunConfig& cfg) {
    json pipe = pipeline::config_to_json(cfg.pipeline);
    return json{{"seed", cfg.seed},
                {"split_ratio", cfg.split_ratio},
                {"threads", cfg.threads},
                {"pipeline", pipe},
                {"eval",
                 {{"patience", cfg.patience},
                  {"upper_limit", cfg.upper_limit},
                  {"timing_iterations", cfg.timing_iterations}}}};
}

std::string to_toml(const RunConfig& cfg) {
    const auto& p = cfg.pipeline;
    const auto& b = p.hsv_bounds;
    std::ostringstream out;
    out << "seed = " << cfg.seed << '\n'
        << "split_ratio = " << shortest(cfg.split_ratio) << '\n'
        << "threads = " << cfg.threads << "\n\n"
        << "[pipeline]\n"
        << "hsv_lower = [" << int(b.lower.h) << ", " << int(b.lower.s) << ", " << int(b.lower.v) << "]\n"
        << "hsv_upper = [" << int(b.upper.h) << ", " << int(b.upper.s) << ", " << int(b.upper.v) << "]\n"
        << "erode_size = " << p.erode_size << '\n'
        << "close_size = " << p.close_size << '\n'
        << "resize = [" << p.resize_factor.num << ", " << p.resize_factor.den << "]\n"
        << "network_input = " << p.network_input.value_or(0) << "\n\n"
        << "[eval]\n"
        << "patience = " << cfg.patience << '\n'
        << "upper_limit = " << cfg.upper_limit << '\n'
        << "timing_iterations = " << cfg.timing_iterations << '\n';
    return out.str();
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path.string(), "cannot open config");
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();

    json doc;
    if (path.extension() == ".json") {
        try {
            doc = json::parse(text);
        } catch (const json::parse_error& e) {
            throw ParseError(0, std::string("config JSON: ") + e.what());
        }
    } else {
        try {
            doc = toml_to_json(toml::parse(text, path.string()));
        } catch (const toml::parse_error& e) {
            throw ParseError(e.source().begin.line, std::string("config TOML: ") + std::string(e.description()));
        }
    }
    return apply_config(doc, base);
}

}  // namespace dexray
