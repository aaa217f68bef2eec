#include <gtest/gtest.h>

#include <sstream>

#include <json.hpp>

#include "dexray/cli.hpp"
#include "dexray/dataset.hpp"
#include "dexray/png_io.hpp"
#include "support/reference_results.hpp"
#include "support/temp_dir.hpp"

namespace fs = std::filesystem;
using testing_support::slurp;
using testing_support::spit;
using testing_support::TempDir;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run dexray_run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = dexray::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::size_t count_png(const fs::path& dir) {
    std::size_t n = 0;
    for (const auto& e : fs::directory_iterator(dir)) n += e.path().extension() == ".png";
    return n;
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

}  // namespace

TEST(Cli, GenWritesCorpusAndIsRepeatable) {
    TempDir a, b;
    const auto r = dexray_run({"--seed", "5", "gen", "--classes", "6,6,6,6,6", "--out", a.path().string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(count_png(a.path()) + (fs::exists(a / "images") ? count_png(a / "images") : 0), 30u);
    const auto manifest = dexray::dataset::load_manifest(a / "manifest.csv");
    EXPECT_EQ(manifest.records.size(), 30u);
    for (const auto& rec : manifest.records) EXPECT_TRUE(fs::exists(manifest.resolve(rec)));

    ASSERT_EQ(dexray_run({"--seed", "5", "gen", "--classes", "6,6,6,6,6", "--out", b.path().string()}).code, 0);
    EXPECT_EQ(slurp(a / "manifest.csv"), slurp(b / "manifest.csv"));
    for (const auto& rec : manifest.records)
        EXPECT_EQ(slurp(manifest.resolve(rec)), slurp(b.path() / rec.path)) << rec.image_id;
}

TEST(Cli, UsageErrors) {
    EXPECT_EQ(dexray_run({"gen", "--classes", "6,6,6,6,6"}).code, 2);
    EXPECT_EQ(dexray_run({"frobnicate"}).code, 2);
    EXPECT_EQ(dexray_run({}).code, 2);
    EXPECT_EQ(dexray_run({"gen", "--classes", "x", "--out", "/tmp/none"}).code, 2);
    TempDir d;
    EXPECT_EQ(dexray_run({"gen", "--classes", "6,6,6", "--out", d.path().string()}).code, 1);
    EXPECT_EQ(dexray_run({"--help"}).code, 0);
}

TEST(Cli, SplitDefaultsAndVerify) {
    TempDir d;
    const auto corpus = d / "corpus";
    ASSERT_EQ(dexray_run({"gen", "--classes", "30,30,30,30,30", "--views", "3", "--width", "64", "--height", "48",
                          "--out", corpus.string()})
                  .code,
              0);
    const auto manifest = (corpus / "manifest.csv").string();
    auto r = dexray_run({"split", "--manifest", manifest});
    ASSERT_EQ(r.code, 0) << r.err;
    ASSERT_TRUE(fs::exists(corpus / "split.csv"));
    auto report = read_json(corpus / "split.json");
    EXPECT_EQ(report.at("bisected_groups").size(), 0u);
    const double train = report.at("train_images").get<double>();
    EXPECT_NEAR(train / 150.0, 0.7, 0.05);

    r = dexray_run({"split", "--manifest", manifest, "--ratio", "0.5", "--out", (d / "half.csv").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NEAR(read_json(d / "half.json").at("train_images").get<double>() / 150.0, 0.5, 0.05);

    EXPECT_EQ(dexray_run({"split", "--manifest", manifest, "--verify", (corpus / "split.csv").string()}).code, 0);

    // Move one view of a training group to test by hand.
    auto text = slurp(corpus / "split.csv");
    const auto pos = text.find(",train\n");
    ASSERT_NE(pos, std::string::npos);
    const auto start = text.rfind('\n', pos) + 1;
    const std::string moved_id = text.substr(start, pos - start);
    text.replace(pos, 7, ",test\n");
    spit(d / "edited.csv", text);
    r = dexray_run({"split", "--manifest", manifest, "--verify", (d / "edited.csv").string()});
    EXPECT_EQ(r.code, 1);
    const auto m = dexray::dataset::load_manifest(corpus / "manifest.csv");
    std::string group;
    for (const auto& rec : m.records)
        if (rec.image_id == moved_id) group = rec.imagegroup_id;
    EXPECT_NE(r.err.find("imagegroup '" + group + "' is bisected"), std::string::npos) << r.err;
}

TEST(Cli, PreprocessAndBaseline) {
    TempDir d;
    const auto corpus = d / "corpus";
    ASSERT_EQ(dexray_run({"--seed", "3", "gen", "--classes", "12,12,12,12,12", "--views", "3", "--out",
                          corpus.string()})
                  .code,
              0);
    const auto manifest = (corpus / "manifest.csv").string();
    ASSERT_EQ(dexray_run({"--seed", "3", "split", "--manifest", manifest}).code, 0);

    auto r = dexray_run({"preprocess", "--manifest", manifest, "--out", (d / "pre").string(), "--network-input",
                         "224", "--export-masks"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rep = read_json(d / "pre" / "preprocess_report.json");
    EXPECT_EQ(rep.at("failures").size(), 0u);
    EXPECT_EQ(count_png(d / "pre"), 60u);
    EXPECT_EQ(count_png(d / "pre" / "net224"), 60u);
    EXPECT_EQ(count_png(d / "pre" / "masks"), 60u);
    const auto net = dexray::io::read_png(d / "pre" / "net224" / "c0-g0000-v0.png");
    EXPECT_EQ(net.width(), 224);
    EXPECT_EQ(net.height(), 224);

    r = dexray_run({"eval", "--manifest", manifest, "--split", (corpus / "split.csv").string(), "--fit-baseline",
                    "--images", (d / "pre").string(), "--out", (d / "eval.json").string(), "--text",
                    (d / "eval.txt").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_DOUBLE_EQ(read_json(d / "eval.json").at("overall_accuracy").get<double>(), 100.0);
    EXPECT_NE(slurp(d / "eval.txt").find("Test-set accuracy (%): 100.00"), std::string::npos);

    r = dexray_run({"bench", "--manifest", manifest, "--split", (corpus / "split.csv").string(), "--images",
                    (d / "pre").string(), "--iterations", "2", "--out", (d / "bench.json").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto bench = read_json(d / "bench.json");
    EXPECT_EQ(bench.at("iterations").get<long long>(), 2);
    EXPECT_EQ(bench.at("classifier").get<std::string>(), "baseline");
}

TEST(Cli, PreprocessToleratesUnreadableImage) {
    TempDir d;
    const auto corpus = d / "corpus";
    ASSERT_EQ(dexray_run({"gen", "--classes", "3,3,3,3,3", "--out", corpus.string()}).code, 0);
    const auto m = dexray::dataset::load_manifest(corpus / "manifest.csv");
    spit(m.resolve(m.records[0]), "not a png");
    const auto r = dexray_run({"preprocess", "--manifest", (corpus / "manifest.csv").string(), "--out",
                               (d / "pre").string()});
    EXPECT_EQ(r.code, 0) << r.err;
    const auto rep = read_json(d / "pre" / "preprocess_report.json");
    ASSERT_EQ(rep.at("failures").size(), 1u);
    EXPECT_EQ(rep.at("failures")[0].get<std::string>(), m.records[0].image_id);
    EXPECT_NE(r.err.find(m.records[0].image_id), std::string::npos);
}

TEST(Cli, EvalFromPredictions) {
    TempDir d;
    const auto& model = reference::kModels[2];
    std::string manifest = "image_id,path,class_id,imagegroup_id\n", preds = "image_id,predicted_class\n";
    int n = 0;
    for (int t = 0; t < 5; ++t)
        for (int p = 0; p < 5; ++p)
            for (long long i = 0; i < model.confusion[t][p]; ++i, ++n) {
                const std::string id = "img" + std::to_string(n);
                manifest += id + "," + id + ".png," + std::to_string(t) + ",g" + std::to_string(n) + "\n";
                preds += id + "," + std::to_string(p) + "\n";
            }
    spit(d / "manifest.csv", manifest);
    spit(d / "ResNet50.csv", preds);
    const auto r = dexray_run({"eval", "--manifest", (d / "manifest.csv").string(), "--predictions",
                               (d / "ResNet50.csv").string(), "--out", (d / "r.json").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("Test-set accuracy (%): 91.04"), std::string::npos) << r.out;
    const auto j = read_json(d / "r.json");
    EXPECT_EQ(j.at("model").get<std::string>(), "ResNet50");
    EXPECT_EQ(j.at("per_class")[0].at("tp").get<long long>(), model.rows[0].tp);

    spit(d / "bad.csv", "image_id,predicted_class\nimg0,0\nnobody,1\n");
    const auto bad = dexray_run({"eval", "--manifest", (d / "manifest.csv").string(), "--predictions",
                                 (d / "bad.csv").string()});
    EXPECT_EQ(bad.code, 1);
    EXPECT_NE(bad.err.find("nobody"), std::string::npos);
    EXPECT_EQ(dexray_run({"eval", "--manifest", (d / "manifest.csv").string()}).code, 1);
}

TEST(Cli, EvalReplaysLossLog) {
    TempDir d;
    spit(d / "manifest.csv", "image_id,path,class_id,imagegroup_id\na,a.png,0,g\n");
    spit(d / "p.csv", "image_id,predicted_class\na,0\n");
    spit(d / "losses.txt", "1.0\n0.9\n0.95\n0.92\n0.91\n");
    spit(d / "run.toml", "[eval]\npatience = 2\n");
    const auto r = dexray_run({"--config", (d / "run.toml").string(), "eval", "--manifest",
                               (d / "manifest.csv").string(), "--predictions", (d / "p.csv").string(), "--losses",
                               (d / "losses.txt").string(), "--out", (d / "r.json").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto es = read_json(d / "r.json").at("early_stopping");
    EXPECT_EQ(es.at("stop_epoch").get<long long>(), 4);
    EXPECT_EQ(es.at("best_epoch").get<long long>(), 2);
}

TEST(Cli, DumpConfigRoundTrips) {
    TempDir d;
    spit(d / "in.toml", "seed = 17\n[pipeline]\nclose_size = 8\n");
    auto r = dexray_run({"--config", (d / "in.toml").string(), "--dump-config", (d / "out.toml").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    r = dexray_run({"--config", (d / "out.toml").string(), "--dump-config", (d / "again.toml").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(slurp(d / "out.toml"), slurp(d / "again.toml"));
    EXPECT_NE(slurp(d / "out.toml").find("close_size = 8"), std::string::npos);
    EXPECT_NE(slurp(d / "out.toml").find("seed = 17"), std::string::npos);
}

TEST(Cli, BenchStub) {
    TempDir d;
    const auto corpus = d / "corpus";
    ASSERT_EQ(dexray_run({"gen", "--classes", "1,1,1,1,1", "--views", "1", "--out", corpus.string()}).code, 0);
    const auto r = dexray_run({"bench", "--manifest", (corpus / "manifest.csv").string(), "--stub-ms", "1",
                               "--iterations", "2", "--out", (d / "b.json").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = read_json(d / "b.json");
    EXPECT_EQ(j.at("samples_per_iteration").get<long long>(), 5);
    EXPECT_DOUBLE_EQ(j.at("mean_per_image_ms").get<double>(), 1000.0 * j.at("total_elapsed_s").get<double>() / 10.0);
    EXPECT_GE(j.at("mean_per_image_ms").get<double>(), 1.0);
}
