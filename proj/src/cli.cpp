#include "dexray/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <unordered_map>

#include <CLI11.hpp>

#include "detail/csv.hpp"
#include "dexray/classify.hpp"
#include "dexray/config.hpp"
#include "dexray/dataset.hpp"
#include "dexray/errors.hpp"
#include "dexray/eval.hpp"
#include "dexray/pipeline.hpp"
#include "dexray/png_io.hpp"
#include "dexray/syngen.hpp"

namespace dexray::cli {

namespace fs = std::filesystem;

namespace {

enum class Level { Error = 0, Warn = 1, Info = 2, Debug = 3 };

// DEXRAY_LOG_LEVEL = error | warn | info | debug (default info).
Level log_level() {
    const char* env = std::getenv("DEXRAY_LOG_LEVEL");
    if (!env) return Level::Info;
    const std::string v(env);
    if (v == "error") return Level::Error;
    if (v == "warn") return Level::Warn;
    if (v == "debug") return Level::Debug;
    return Level::Info;
}

struct Log {
    std::ostream& out;
    std::ostream& err;
    Level level = log_level();

    void info(const std::string& msg) const {
        if (level >= Level::Info) out << msg << '\n';
    }
    void debug(const std::string& msg) const {
        if (level >= Level::Debug) err << "debug: " << msg << '\n';
    }
    void warn(const std::string& msg) const {
        if (level >= Level::Warn) err << "warning: " << msg << '\n';
    }
    void error(const std::string& msg) const { err << "error: " << msg << '\n'; }
};

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError(path.string(), "cannot write");
    f << text;
    if (!f) throw IoError(path.string(), "write failed");
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

fs::path image_path(const dataset::DatasetManifest& manifest, const dataset::ImageRecord& rec,
                    const std::optional<fs::path>& images_dir) {
    return images_dir ? *images_dir / (rec.image_id + ".png") : manifest.resolve(rec);
}

std::vector<double> read_loss_log(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path.string(), "cannot open loss log");
    std::vector<double> losses;
    std::string line;
    std::size_t n = 0;
    while (detail::next_line(in, line)) {
        ++n;
        if (line.empty()) continue;
        const auto v = detail::parse_double(line);
        if (!v) throw ParseError(n, "loss '" + line + "' is not a number");
        losses.push_back(*v);
    }
    return losses;
}

struct Options {
    std::string config_path;
    std::string dump_config;
    std::uint64_t seed = 0;
    unsigned threads = 0;

    // gen
    std::vector<int> classes{6, 6, 6, 6, 6};
    int views = 3;
    int width = 192;
    int height = 144;
    double noise = 0.05;
    int max_clutter = 3;
    std::string out;

    // split
    std::string manifest;
    double ratio = 0.7;
    std::string report;
    std::string verify;

    // preprocess
    int network_input = 0;
    bool export_masks = false;

    // eval / bench
    std::string split;
    std::string predictions;
    bool fit_baseline = false;
    std::string images;
    std::string text;
    std::string predictions_out;
    std::string losses;
    long long iterations = 500;
    double stub_ms = -1.0;
};

RunConfig effective_config(const Options& o, const CLI::App& app) {
    RunConfig cfg;
    if (!o.config_path.empty()) cfg = load_config(o.config_path, cfg);
    if (app.count("--seed")) cfg.seed = o.seed;
    if (app.count("--threads")) cfg.threads = o.threads;
    return cfg;
}

bool given(const CLI::App* sub, const std::string& name) { return sub->count(name) > 0; }

int cmd_gen(const Options& o, const RunConfig& cfg, const Log& log) {
    if (o.classes.size() != static_cast<std::size_t>(dataset::kNumClasses))
        throw ValidationError("--classes needs exactly 5 counts, one per class id");
    syngen::CorpusOptions opts;
    for (int c = 0; c < dataset::kNumClasses; ++c) opts.class_counts[static_cast<dataset::ClassLabel>(c)] = o.classes[c];
    opts.views_per_group = o.views;
    opts.seed = cfg.seed;
    opts.width = o.width;
    opts.height = o.height;
    opts.noise_level = o.noise;
    opts.max_clutter = o.max_clutter;

    const auto manifest = syngen::generate_corpus(opts, o.out);
    std::set<std::string> groups;
    for (const auto& r : manifest.records) groups.insert(r.imagegroup_id);
    log.info("generated " + std::to_string(manifest.records.size()) + " images in " + std::to_string(groups.size()) +
             " imagegroups -> " + (fs::path(o.out) / "manifest.csv").string());
    return kOk;
}

int cmd_split(const Options& o, const CLI::App* sub, const RunConfig& base, const Log& log) {
    RunConfig cfg = base;
    if (given(sub, "--ratio")) cfg.split_ratio = o.ratio;
    cfg.validate();

    const auto manifest = dataset::load_manifest(o.manifest);
    const fs::path manifest_dir = fs::path(o.manifest).parent_path();

    if (!o.verify.empty()) {
        const auto assignment = dataset::load_assignment(o.verify, manifest);
        const auto report = dataset::split_report(assignment, manifest);
        log.info(report.to_text());
        if (!o.report.empty()) write_json(o.report, report.to_json());
        if (!report.bisected_groups.empty()) {
            for (const auto& g : report.bisected_groups) log.error("imagegroup '" + g + "' is bisected");
            return kFailure;
        }
        log.info("verified: no imagegroup is bisected");
        return kOk;
    }

    const auto result = dataset::stratified_group_split(manifest, cfg.split_ratio, cfg.seed);
    for (const auto& d : result.degenerate) {
        log.warn("class " + std::to_string(dataset::class_id(d.label)) + " has a single imagegroup ('" +
                 d.imagegroup_id + "'); placed in train");
    }
    const fs::path out = o.out.empty() ? manifest_dir / "split.csv" : fs::path(o.out);
    const fs::path report_path = o.report.empty() ? fs::path(out).replace_extension(".json") : fs::path(o.report);
    dataset::write_assignment(out, result.assignment, manifest);

    const auto report = dataset::split_report(result.assignment, manifest);
    auto j = report.to_json();
    auto& degenerate = j["degenerate_classes"] = nlohmann::json::array();
    for (const auto& d : result.degenerate)
        degenerate.push_back({{"class_id", dataset::class_id(d.label)}, {"imagegroup_id", d.imagegroup_id},
                              {"images", d.images}});
    write_json(report_path, j);
    log.info(report.to_text());
    log.info("split written to " + out.string());
    return kOk;
}

int cmd_preprocess(const Options& o, const CLI::App* sub, const RunConfig& base, const Log& log) {
    RunConfig cfg = base;
    if (given(sub, "--network-input")) {
        if (o.network_input == 0)
            cfg.pipeline.network_input.reset();
        else
            cfg.pipeline.network_input = o.network_input;
    }
    cfg.validate();

    const auto manifest = dataset::load_manifest(o.manifest);
    const fs::path out = o.out;
    const auto report = pipeline::preprocess_corpus(manifest, cfg.pipeline, out, cfg.threads);

    if (o.export_masks) {
        for (const auto& rec : manifest.records) {
            try {
                const auto mask = pipeline::response_mask(io::read_png(manifest.resolve(rec)), cfg.pipeline);
                io::write_mask_png(out / "masks" / (rec.image_id + ".png"), mask);
            } catch (const Error& e) {
                log.warn(e.what());
            }
        }
    }

    write_json(out / "preprocess_report.json", report.to_json());
    for (const auto& id : report.empty_masks) log.warn("no metallic response in '" + id + "'; used image-centre window");
    for (const auto& img : report.images)
        if (img.error) log.warn(img.record.image_id + ": " + *img.error);

    log.info("mean window " + std::to_string(report.mean_window.w) + " x " + std::to_string(report.mean_window.h) +
             " over " + std::to_string(report.mean_window.count) + " images; outputs " +
             std::to_string(report.output_height) + "x" + std::to_string(report.output_width) + "; " +
             std::to_string(report.succeeded()) + "/" + std::to_string(report.images.size()) + " written");
    return report.succeeded() == 0 ? kFailure : kOk;
}

struct SplitImages {
    std::vector<classify::LabelledImage> train;
    std::vector<std::string> test_ids;
    std::vector<RawImage> test_images;
};

SplitImages load_split_images(const dataset::DatasetManifest& manifest, const dataset::SplitAssignment& split,
                              const std::optional<fs::path>& images_dir, bool want_train) {
    SplitImages s;
    for (const auto& rec : manifest.records) {
        const bool train = split.in_train(rec.image_id);
        if (train && !want_train) continue;
        auto image = io::read_png(image_path(manifest, rec, images_dir));
        if (train) {
            s.train.push_back({std::move(image), rec.label});
        } else {
            s.test_ids.push_back(rec.image_id);
            s.test_images.push_back(std::move(image));
        }
    }
    return s;
}

int cmd_eval(const Options& o, const RunConfig& cfg, const Log& log) {
    if (o.fit_baseline == !o.predictions.empty())
        throw ValidationError("eval needs exactly one of --predictions or --fit-baseline");

    const auto manifest = dataset::load_manifest(o.manifest);
    std::optional<dataset::SplitAssignment> split;
    if (!o.split.empty()) split = dataset::load_assignment(o.split, manifest);
    const std::optional<fs::path> images_dir = o.images.empty() ? std::nullopt : std::optional<fs::path>(o.images);

    std::unordered_map<std::string, dataset::ClassLabel> truths;
    for (const auto& r : manifest.records) truths.emplace(r.image_id, r.label);

    std::vector<classify::Prediction> predictions;
    std::string model;
    if (o.fit_baseline) {
        if (!split) throw ValidationError("--fit-baseline needs --split");
        auto data = load_split_images(manifest, *split, images_dir, true);
        const auto classifier = classify::fit_baseline(data.train);
        model = classifier.name();
        for (std::size_t i = 0; i < data.test_images.size(); ++i)
            predictions.push_back(classifier.predict(data.test_ids[i], data.test_images[i]));
        if (!o.predictions_out.empty()) classify::write_predictions(o.predictions_out, predictions);
    } else {
        predictions = classify::load_predictions(o.predictions, manifest);
        model = fs::path(o.predictions).stem().string();
        if (split) {
            std::erase_if(predictions, [&](const auto& p) { return split->in_train(p.image_id); });
            std::size_t covered = 0;
            for (const auto& p : predictions) covered += split->test.contains(p.image_id) ? 1 : 0;
            if (covered < split->test.size())
                log.warn(std::to_string(split->test.size() - covered) + " test images have no prediction");
        }
    }
    if (predictions.empty()) throw ValidationError("nothing to evaluate");

    const auto cm = eval::confusion_matrix(predictions, truths);
    const auto report = eval::evaluation_report(cm, std::nullopt, model);
    auto j = report.to_json();

    if (!o.losses.empty()) {
        eval::EarlyStopState state;
        state.k = cfg.patience;
        state.upper_limit = cfg.upper_limit;
        std::optional<long long> stop_epoch;
        for (double loss : read_loss_log(o.losses)) {
            const auto step = eval::early_stop_step(state, loss);
            state = step.state;
            if (step.decision == eval::Decision::Stop) {
                stop_epoch = state.epoch;
                break;
            }
        }
        j["early_stopping"] = {{"patience", state.k},
                               {"upper_limit", state.upper_limit},
                               {"epochs_seen", state.epoch},
                               {"stop_epoch", stop_epoch ? nlohmann::json(*stop_epoch) : nlohmann::json(nullptr)},
                               {"best_epoch", state.best_epoch},
                               {"best_loss", state.epoch > 0 ? nlohmann::json(state.best_loss) : nlohmann::json(nullptr)}};
    }

    if (!o.out.empty()) write_json(o.out, j);
    if (!o.text.empty()) write_text(o.text, report.to_text());
    log.info(report.to_text());
    return kOk;
}

int cmd_bench(const Options& o, const CLI::App* sub, const RunConfig& cfg, const Log& log) {
    const long long iterations = given(sub, "--iterations") ? o.iterations : cfg.timing_iterations;
    const auto manifest = dataset::load_manifest(o.manifest);
    const std::optional<fs::path> images_dir = o.images.empty() ? std::nullopt : std::optional<fs::path>(o.images);

    dataset::SplitAssignment split;
    if (!o.split.empty()) {
        split = dataset::load_assignment(o.split, manifest);
    } else {
        for (const auto& r : manifest.records) split.test.insert(r.image_id);
    }

    const bool stub = o.stub_ms >= 0.0;
    auto data = load_split_images(manifest, split, images_dir, !stub);
    if (data.test_images.empty()) throw ValidationError("no test images to time");

    std::unique_ptr<classify::Classifier> classifier;
    if (stub) {
        classifier = std::make_unique<classify::BusyWaitClassifier>(
            std::chrono::nanoseconds(static_cast<long long>(o.stub_ms * 1e6)));
    } else {
        classifier = std::make_unique<classify::NearestCentroidClassifier>(classify::fit_baseline(data.train));
    }

    // Images are decoded and sized before the clock starts.
    const auto timing = eval::measure_inference(*classifier, data.test_images, iterations);
    auto j = timing.to_json();
    j["classifier"] = classifier->name();
    j["note"] = "run on a single dedicated worker; machine idleness is not enforced";
    if (!o.out.empty()) write_json(o.out, j);
    log.info(classifier->name() + ": " + std::to_string(timing.mean_per_image) + " ms/image over " +
             std::to_string(timing.iterations) + " x " + std::to_string(timing.samples_per_iteration) + " images (" +
             std::to_string(timing.total_elapsed) + " s)");
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"dexray: dual-energy X-ray threat windowing, group-aware splitting and evaluation", "dexray"};
    app.require_subcommand(0, 1);
    app.add_option("--config", o.config_path, "TOML or JSON run configuration");
    app.add_option("--seed", o.seed, "root seed for every random stream");
    app.add_option("--threads", o.threads, "worker threads for preprocessing (0 = all cores)");
    app.add_option("--dump-config", o.dump_config, "write the effective configuration as TOML");

    auto* gen = app.add_subcommand("gen", "generate a synthetic corpus and its manifest");
    gen->fallthrough();
    gen->add_option("--classes", o.classes, "images per class id 0..4, comma separated")->delimiter(',');
    gen->add_option("--views", o.views, "views per imagegroup")->check(CLI::PositiveNumber);
    gen->add_option("--width", o.width, "scene width")->check(CLI::Range(36, 4096));
    gen->add_option("--height", o.height, "scene height")->check(CLI::Range(36, 4096));
    gen->add_option("--noise", o.noise, "per-pixel noise level")->check(CLI::Range(0.0, 1.0));
    gen->add_option("--max-clutter", o.max_clutter, "maximum organic clutter blobs per scene")->check(CLI::NonNegativeNumber);
    gen->add_option("--out", o.out, "output directory")->required();

    auto* split = app.add_subcommand("split", "group-respecting stratified train/test split");
    split->fallthrough();
    split->add_option("--manifest", o.manifest, "manifest CSV")->required()->check(CLI::ExistingFile);
    split->add_option("--ratio", o.ratio, "target train fraction");
    split->add_option("--out", o.out, "split CSV (default: split.csv next to the manifest)");
    split->add_option("--report", o.report, "split report JSON");
    split->add_option("--verify", o.verify, "check an existing split CSV instead of creating one")->check(CLI::ExistingFile);

    auto* pre = app.add_subcommand("preprocess", "maximal-information windowing of every manifest image");
    pre->fallthrough();
    pre->add_option("--manifest", o.manifest, "manifest CSV")->required()->check(CLI::ExistingFile);
    pre->add_option("--out", o.out, "output directory")->required();
    pre->add_option("--network-input", o.network_input, "also write shorter-side crops (224 or 299; 0 = none)")
        ->check(CLI::IsMember({0, 224, 299}));
    pre->add_flag("--export-masks", o.export_masks, "write response masks to <out>/masks");

    auto* ev = app.add_subcommand("eval", "one-vs-all metrics from predictions or the baseline classifier");
    ev->fallthrough();
    ev->add_option("--manifest", o.manifest, "manifest CSV")->required()->check(CLI::ExistingFile);
    ev->add_option("--split", o.split, "split CSV; only test images are scored")->check(CLI::ExistingFile);
    ev->add_option("--predictions", o.predictions, "predictions CSV")->check(CLI::ExistingFile);
    ev->add_flag("--fit-baseline", o.fit_baseline, "fit the nearest-centroid baseline on train, score test");
    ev->add_option("--images", o.images, "directory of <image_id>.png inputs (default: manifest paths)");
    ev->add_option("--out", o.out, "report JSON");
    ev->add_option("--text", o.text, "report table as text");
    ev->add_option("--predictions-out", o.predictions_out, "write baseline predictions CSV");
    ev->add_option("--losses", o.losses, "epoch loss log to replay through the early-stop monitor")
        ->check(CLI::ExistingFile);

    auto* bench = app.add_subcommand("bench", "average inference time per image");
    bench->fallthrough();
    bench->add_option("--manifest", o.manifest, "manifest CSV")->required()->check(CLI::ExistingFile);
    bench->add_option("--split", o.split, "split CSV; test images are timed")->check(CLI::ExistingFile);
    bench->add_option("--images", o.images, "directory of <image_id>.png inputs (default: manifest paths)");
    bench->add_option("--iterations", o.iterations, "passes over the test set")->check(CLI::PositiveNumber);
    bench->add_option("--stub-ms", o.stub_ms, "time a busy-wait stub costing this many ms per image")
        ->check(CLI::NonNegativeNumber);
    bench->add_option("--out", o.out, "timing report JSON");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kUsage;
    }

    if (app.get_subcommands().empty() && o.dump_config.empty()) {
        err << "A subcommand is required\nRun with --help for more information.\n";
        return kUsage;
    }

    const Log log{out, err};
    try {
        const RunConfig cfg = effective_config(o, app);
        if (!o.dump_config.empty()) write_text(o.dump_config, to_toml(cfg));
        log.debug("effective config: " + to_json(cfg).dump());

        if (gen->parsed()) return cmd_gen(o, cfg, log);
        if (split->parsed()) return cmd_split(o, split, cfg, log);
        if (pre->parsed()) return cmd_preprocess(o, pre, cfg, log);
        if (ev->parsed()) return cmd_eval(o, cfg, log);
        if (bench->parsed()) return cmd_bench(o, bench, cfg, log);
        if (!o.dump_config.empty()) return kOk;
    } catch (const std::exception& e) {
        log.error(e.what());
        return kFailure;
    }
    return kUsage;
}

}  // namespace dexray::cli
