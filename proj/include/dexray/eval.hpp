#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "dexray/classify.hpp"
#include "dexray/dataset.hpp"

namespace dexray::eval {

using dataset::ClassLabel;

// k x k counts, cell(t, p) = samples of true class t predicted as p.
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(int k = dataset::kNumClasses);

    int k() const { return k_; }
    long long cell(int truth, int predicted) const { return cells_.at(index(truth, predicted)); }
    void add(int truth, int predicted, long long n = 1);

    long long total() const;
    long long trace() const;
    long long row_sum(int truth) const;
    long long column_sum(int predicted) const;

    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

private:
    std::size_t index(int t, int p) const;

    int k_;
    std::vector<long long> cells_;
};

// Throws MissingTruth for a prediction without a truth entry.
ConfusionMatrix confusion_matrix(std::span<const classify::Prediction> predictions,
                                 const std::unordered_map<std::string, ClassLabel>& truths);

struct OneVsAll {
    long long tp = 0;
    long long tn = 0;
    long long fp = 0;
    long long fn = 0;

    long long total() const { return tp + tn + fp + fn; }

    friend bool operator==(const OneVsAll&, const OneVsAll&) = default;
};

OneVsAll one_vs_all(const ConfusionMatrix& cm, ClassLabel label);
OneVsAll one_vs_all(const ConfusionMatrix& cm, int class_index);

// A percentage held as the exact rational 100 * num / den, so display
// rounding is exact.
class Percentage {
public:
    Percentage(long long num, long long den);

    double value() const { return 100.0 * static_cast<double>(num_) / static_cast<double>(den_); }

    // Two decimals, half-up on the exact rational.
    std::string fixed2() const;

    long long numerator() const { return num_; }
    long long denominator() const { return den_; }

private:
    long long num_;
    long long den_;
};

struct PerClassMetrics {
    ClassLabel label;
    OneVsAll counts;
    Percentage sensitivity;
    Percentage specificity;
    Percentage accuracy;
    Percentage ber;
};

// sens = tp/(tp+fn), spec = tn/(tn+fp), acc = (tp+tn)/total,
// ber = 100 - (sens + spec)/2. Throws DegenerateDenominator when either
// one-vs-all side is empty.
PerClassMetrics per_class_metrics(const OneVsAll& counts, ClassLabel label = ClassLabel::AssaultRifle);

// 100 * trace / total. Throws std::invalid_argument on an empty matrix.
Percentage overall_accuracy(const ConfusionMatrix& cm);

struct TimingReport {
    long long iterations = 0;
    long long samples_per_iteration = 0;
    double total_elapsed = 0.0;   // seconds
    double mean_per_image = 0.0;  // milliseconds

    // mean_per_image = 1000 * total / (iterations * samples).
    static TimingReport from_total(long long iterations, long long samples, double total_seconds);

    nlohmann::json to_json() const;
};

// Runs predict over the whole test set `iterations` times under one wall
// clock. Images must already be at the classifier's input size.
TimingReport measure_inference(const classify::Classifier& classifier, std::span<const RawImage> testset,
                               long long iterations = 500);

enum class Decision { Continue, Stop };

struct EarlyStopState {
    double best_loss = std::numeric_limits<double>::infinity();
    long long best_epoch = 0;   // 1-based; 0 before the first epoch
    long long stale_count = 0;  // consecutive epochs without strict improvement
    long long epoch = 0;        // epochs observed so far
    long long k = 50;
    long long upper_limit = 3000;
};

struct EarlyStopStep {
    EarlyStopState state;
    Decision decision;
};

// Strict improvement (loss < best_loss) resets the stale count; anything else
// increments it. Stops once stale_count reaches k or the epoch count reaches
// upper_limit. Throws NonFiniteLoss.
EarlyStopStep early_stop_step(const EarlyStopState& state, double epoch_loss);

struct ClassRow {
    ClassLabel label;
    OneVsAll counts;
    std::optional<PerClassMetrics> metrics;  // empty when a side is degenerate
};

struct EvaluationReport {
    std::string model;
    ConfusionMatrix confusion;
    std::vector<ClassRow> rows;
    Percentage overall{0, 1};
    std::optional<TimingReport> timing;

    nlohmann::json to_json() const;
    std::string to_text() const;

    static EvaluationReport from_json(const nlohmann::json& j);
};

EvaluationReport evaluation_report(const ConfusionMatrix& cm, std::optional<TimingReport> timing = std::nullopt,
                                   std::string model = {});

}  // namespace dexray::eval
