#include "dexray/classify.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <unordered_set>

#include "detail/csv.hpp"
#include "dexray/errors.hpp"
#include "dexray/imaging.hpp"

namespace dexray::classify {

ClassLabel argmax(const Scores& scores) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i)
        if (scores[i] > scores[best]) best = i;
    return static_cast<ClassLabel>(best);
}

std::optional<std::string> check_scores(const Scores& scores, ClassLabel predicted) {
    double sum = 0.0;
    for (double s : scores) {
        if (!std::isfinite(s)) return "non-finite score";
        if (s < 0.0) return "negative score";
        sum += s;
    }
    if (std::fabs(sum - 1.0) > 1e-6) return "scores sum to " + std::to_string(sum) + ", expected 1";
    if (scores[dataset::class_id(predicted)] < scores[dataset::class_id(argmax(scores))])
        return "predicted class " + std::to_string(dataset::class_id(predicted)) + " is not the score argmax";
    return std::nullopt;
}

Prediction Classifier::predict(std::string_view image_id, const RawImage& image) const {
    if (const auto side = input_size(); side && (image.height() != *side || image.width() != *side)) {
        throw SizeMismatch(name() + " expects " + std::to_string(*side) + "x" + std::to_string(*side) + " input, got " +
                           std::to_string(image.height()) + "x" + std::to_string(image.width()));
    }
    auto p = classify(image);
    p.image_id = image_id;
    return p;
}

Histogram hsv_histogram(const RawImage& image) {
    Histogram hist{};
    const auto hsv = imaging::bgr_to_hsv(image);
    for (const auto& p : hsv.pixels()) {
        const int h = p.h * 8 / 181, s = p.s / 32, v = p.v / 32;
        hist[static_cast<std::size_t>(h * 64 + s * 8 + v)] += 1.0;
    }
    const double n = static_cast<double>(hsv.size());
    for (auto& b : hist) b /= n;
    return hist;
}

NearestCentroidClassifier::NearestCentroidClassifier(std::string name, std::optional<int> input_size,
                                                     std::array<Histogram, dataset::kNumClasses> centroids)
    : name_(std::move(name)), input_size_(input_size), centroids_(centroids) {}

Scores NearestCentroidClassifier::distances(const RawImage& image) const {
    const auto hist = hsv_histogram(image);
    Scores d{};
    for (std::size_t c = 0; c < centroids_.size(); ++c) {
        double sum = 0.0;
        for (std::size_t i = 0; i < hist.size(); ++i) {
            const double diff = hist[i] - centroids_[c][i];
            sum += diff * diff;
        }
        d[c] = sum;
    }
    return d;
}

Prediction NearestCentroidClassifier::classify(const RawImage& image) const {
    const auto d = distances(image);
    std::size_t best = 0;
    for (std::size_t c = 1; c < d.size(); ++c)
        if (d[c] < d[best]) best = c;
    return Prediction{{}, static_cast<ClassLabel>(best), std::nullopt};
}

NearestCentroidClassifier fit_baseline(std::span<const LabelledImage> train, std::string name,
                                       std::optional<int> input_size) {
    std::array<Histogram, dataset::kNumClasses> sums{};
    std::array<std::size_t, dataset::kNumClasses> counts{};
    for (const auto& ex : train) {
        if (input_size && (ex.image.height() != *input_size || ex.image.width() != *input_size))
            throw SizeMismatch("training image does not match the classifier input size");
        const auto hist = hsv_histogram(ex.image);
        auto& sum = sums[dataset::class_id(ex.label)];
        for (std::size_t i = 0; i < hist.size(); ++i) sum[i] += hist[i];
        ++counts[dataset::class_id(ex.label)];
    }
    std::string missing;
    for (int c = 0; c < dataset::kNumClasses; ++c) {
        if (counts[c] == 0) {
            missing += missing.empty() ? "" : ", ";
            missing += std::to_string(c);
            continue;
        }
        for (auto& b : sums[c]) b /= static_cast<double>(counts[c]);
    }
    if (!missing.empty()) throw MissingClass("no training examples for class id(s) " + missing);
    return NearestCentroidClassifier(std::move(name), input_size, sums);
}

Prediction BusyWaitClassifier::classify(const RawImage&) const {
    const auto until = std::chrono::steady_clock::now() + cost_;
    while (std::chrono::steady_clock::now() < until) {
    }
    return Prediction{};
}

std::vector<Prediction> load_predictions(const std::filesystem::path& path, const dataset::DatasetManifest& manifest) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path.string(), "cannot open predictions file");

    std::string line;
    if (!detail::next_line(in, line)) throw ParseError(1, "empty predictions file");
    bool with_scores;
    if (line == kPredictionsHeaderWithScores)
        with_scores = true;
    else if (line == kPredictionsHeader)
        with_scores = false;
    else
        throw ParseError(1, "unexpected header '" + line + "'");
    const std::size_t width = with_scores ? 7 : 2;

    std::unordered_set<std::string> ids;
    for (const auto& r : manifest.records) ids.insert(r.image_id);

    std::vector<Prediction> out;
    std::unordered_set<std::string> seen;
    std::size_t line_no = 1;
    while (detail::next_line(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = detail::split_fields(line);
        if (fields.size() != width)
            throw ParseError(line_no, "expected " + std::to_string(width) + " fields, got " + std::to_string(fields.size()));
        const auto cls = detail::parse_int(fields[1]);
        if (!cls || !dataset::class_from_id(static_cast<int>(*cls)))
            throw ParseError(line_no, "invalid predicted_class '" + fields[1] + "'");
        if (!ids.contains(fields[0])) throw UnknownImage(line_no, fields[0]);
        if (!seen.insert(fields[0]).second) throw ParseError(line_no, "duplicate prediction for '" + fields[0] + "'");

        Prediction p{fields[0], static_cast<ClassLabel>(*cls), std::nullopt};
        if (with_scores) {
            Scores s{};
            for (std::size_t k = 0; k < s.size(); ++k) {
                const auto v = detail::parse_double(fields[2 + k]);
                if (!v) throw ParseError(line_no, "score s" + std::to_string(k) + " is not a number");
                s[k] = *v;
            }
            if (auto problem = check_scores(s, p.predicted)) throw ScoreInvariantViolation(line_no, *problem);
            p.scores = s;
        }
        out.push_back(std::move(p));
    }
    return out;
}

void write_predictions(const std::filesystem::path& path, std::span<const Prediction> predictions) {
    const bool with_scores =
        !predictions.empty() &&
        std::all_of(predictions.begin(), predictions.end(), [](const auto& p) { return p.scores.has_value(); });
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(path.string(), "cannot write predictions file");
    out << (with_scores ? kPredictionsHeaderWithScores : kPredictionsHeader) << '\n';
    for (const auto& p : predictions) {
        out << p.image_id << ',' << dataset::class_id(p.predicted);
        if (with_scores) {
            for (double s : *p.scores) {
                char buf[32];
                auto res = std::to_chars(buf, buf + sizeof buf, s);
                out << ',' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
            }
        }
        out << '\n';
    }
    if (!out) throw IoError(path.string(), "write failed");
}

}  // namespace dexray::classify
