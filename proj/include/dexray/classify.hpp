#pragma once

#include <array>
#include <chrono>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dexray/dataset.hpp"
#include "dexray/image.hpp"

namespace dexray::classify {

using dataset::ClassLabel;
using Scores = std::array<double, dataset::kNumClasses>;

struct Prediction {
    std::string image_id;
    ClassLabel predicted = ClassLabel::AssaultRifle;
    std::optional<Scores> scores;

    friend bool operator==(const Prediction&, const Prediction&) = default;
};

// Index of the largest score, lowest class id on ties.
ClassLabel argmax(const Scores& scores);

// Empty when the scores are non-negative, sum to 1 within 1e-6 and put
// `predicted` at a maximum; otherwise a description of the violation.
std::optional<std::string> check_scores(const Scores& scores, ClassLabel predicted);

// Model behind the evaluation seam. input_size() of nullopt accepts any
// image size; otherwise images must be side x side.
class Classifier {
public:
    virtual ~Classifier() = default;

    virtual std::string name() const = 0;
    virtual std::optional<int> input_size() const = 0;

    // Throws SizeMismatch when the image does not match input_size().
    Prediction predict(std::string_view image_id, const RawImage& image) const;

protected:
    virtual Prediction classify(const RawImage& image) const = 0;
};

// Normalised 8x8x8 HSV histogram. Bin of a pixel: h*8/181, s/32, v/32, laid
// out as h*64 + s*8 + v.
inline constexpr int kHistogramBins = 512;
using Histogram = std::array<double, kHistogramBins>;

Histogram hsv_histogram(const RawImage& image);

struct LabelledImage {
    RawImage image;
    ClassLabel label;
};

// Nearest class centroid of HSV histograms under L2 distance.
class NearestCentroidClassifier final : public Classifier {
public:
    NearestCentroidClassifier(std::string name, std::optional<int> input_size,
                              std::array<Histogram, dataset::kNumClasses> centroids);

    std::string name() const override { return name_; }
    std::optional<int> input_size() const override { return input_size_; }

    const Histogram& centroid(ClassLabel label) const { return centroids_[dataset::class_id(label)]; }

    // Squared L2 distance from the image's histogram to each class centroid.
    Scores distances(const RawImage& image) const;

protected:
    Prediction classify(const RawImage& image) const override;

private:
    std::string name_;
    std::optional<int> input_size_;
    std::array<Histogram, dataset::kNumClasses> centroids_;
};

// Per-class mean histogram. Throws MissingClass naming every absent class.
NearestCentroidClassifier fit_baseline(std::span<const LabelledImage> train, std::string name = "baseline",
                                       std::optional<int> input_size = std::nullopt);

// Timing stand-in: spins for a fixed duration and predicts class 0.
class BusyWaitClassifier final : public Classifier {
public:
    explicit BusyWaitClassifier(std::chrono::nanoseconds cost, std::string name = "busy-wait")
        : cost_(cost), name_(std::move(name)) {}

    std::string name() const override { return name_; }
    std::optional<int> input_size() const override { return std::nullopt; }

protected:
    Prediction classify(const RawImage& image) const override;

private:
    std::chrono::nanoseconds cost_;
    std::string name_;
};

inline constexpr std::string_view kPredictionsHeader = "image_id,predicted_class";
inline constexpr std::string_view kPredictionsHeaderWithScores = "image_id,predicted_class,s0,s1,s2,s3,s4";

// Throws IoError, ParseError, UnknownImage or ScoreInvariantViolation; line
// numbers are 1-based and include the header.
std::vector<Prediction> load_predictions(const std::filesystem::path& path, const dataset::DatasetManifest& manifest);

// Writes the scores block only when every prediction carries scores.
void write_predictions(const std::filesystem::path& path, std::span<const Prediction> predictions);

}  // namespace dexray::classify
