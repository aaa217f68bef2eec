#include "dexray/eval.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "dexray/errors.hpp"

namespace dexray::eval {

ConfusionMatrix::ConfusionMatrix(int k) : k_(k) {
    if (k < 1) throw std::invalid_argument("confusion matrix needs at least one class");
    cells_.assign(static_cast<std::size_t>(k) * static_cast<std::size_t>(k), 0);
}

std::size_t ConfusionMatrix::index(int t, int p) const {
    if (t < 0 || t >= k_ || p < 0 || p >= k_) throw std::out_of_range("class index outside confusion matrix");
    return static_cast<std::size_t>(t) * static_cast<std::size_t>(k_) + static_cast<std::size_t>(p);
}

void ConfusionMatrix::add(int truth, int predicted, long long n) {
    if (n < 0) throw std::invalid_argument("negative count");
    cells_.at(index(truth, predicted)) += n;
}

long long ConfusionMatrix::total() const {
    long long s = 0;
    for (auto c : cells_) s += c;
    return s;
}

long long ConfusionMatrix::trace() const {
    long long s = 0;
    for (int i = 0; i < k_; ++i) s += cell(i, i);
    return s;
}

long long ConfusionMatrix::row_sum(int truth) const {
    long long s = 0;
    for (int p = 0; p < k_; ++p) s += cell(truth, p);
    return s;
}

long long ConfusionMatrix::column_sum(int predicted) const {
    long long s = 0;
    for (int t = 0; t < k_; ++t) s += cell(t, predicted);
    return s;
}

ConfusionMatrix confusion_matrix(std::span<const classify::Prediction> predictions,
                                 const std::unordered_map<std::string, ClassLabel>& truths) {
    ConfusionMatrix cm;
    for (const auto& p : predictions) {
        const auto it = truths.find(p.image_id);
        if (it == truths.end()) throw MissingTruth(p.image_id);
        cm.add(dataset::class_id(it->second), dataset::class_id(p.predicted));
    }
    return cm;
}

OneVsAll one_vs_all(const ConfusionMatrix& cm, int c) {
    OneVsAll o;
    o.tp = cm.cell(c, c);
    o.fn = cm.row_sum(c) - o.tp;
    o.fp = cm.column_sum(c) - o.tp;
    o.tn = cm.total() - o.tp - o.fn - o.fp;
    return o;
}

OneVsAll one_vs_all(const ConfusionMatrix& cm, ClassLabel label) { return one_vs_all(cm, dataset::class_id(label)); }

Percentage::Percentage(long long num, long long den) : num_(num), den_(den) {
    if (den <= 0) throw std::invalid_argument("percentage denominator must be positive");
    if (num < 0) throw std::invalid_argument("percentage numerator must be non-negative");
}

std::string Percentage::fixed2() const {
    // hundredths = floor(10000 * num / den + 1/2)
    using wide = unsigned __int128;
    const wide hundredths = (wide(20000) * static_cast<wide>(num_) + static_cast<wide>(den_)) / (wide(2) * den_);
    const auto whole = static_cast<unsigned long long>(hundredths / 100);
    const auto frac = static_cast<unsigned>(hundredths % 100);
    std::ostringstream out;
    out << whole << '.' << std::setw(2) << std::setfill('0') << frac;
    return out.str();
}

PerClassMetrics per_class_metrics(const OneVsAll& c, ClassLabel label) {
    if (c.tp < 0 || c.tn < 0 || c.fp < 0 || c.fn < 0) throw std::invalid_argument("negative count");
    const long long pos = c.tp + c.fn;
    const long long neg = c.tn + c.fp;
    if (pos == 0) throw DegenerateDenominator("class has no positive samples (tp + fn = 0)");
    if (neg == 0) throw DegenerateDenominator("class has no negative samples (tn + fp = 0)");
    // ber / 100 = 1 - (tp/pos + tn/neg) / 2 = (2*pos*neg - tp*neg - tn*pos) / (2*pos*neg)
    const long long ber_den = 2 * pos * neg;
    return PerClassMetrics{label,
                           c,
                           Percentage(c.tp, pos),
                           Percentage(c.tn, neg),
                           Percentage(c.tp + c.tn, c.total()),
                           Percentage(ber_den - c.tp * neg - c.tn * pos, ber_den)};
}

Percentage overall_accuracy(const ConfusionMatrix& cm) {
    if (cm.total() <= 0) throw std::invalid_argument("confusion matrix is empty");
    return Percentage(cm.trace(), cm.total());
}

TimingReport TimingReport::from_total(long long iterations, long long samples, double total_seconds) {
    if (iterations < 1 || samples < 1) throw std::invalid_argument("timing needs at least one iteration and sample");
    TimingReport r;
    r.iterations = iterations;
    r.samples_per_iteration = samples;
    r.total_elapsed = total_seconds;
    r.mean_per_image = 1000.0 * total_seconds / (static_cast<double>(iterations) * static_cast<double>(samples));
    return r;
}

nlohmann::json TimingReport::to_json() const {
    return {{"iterations", iterations},
            {"samples_per_iteration", samples_per_iteration},
            {"total_elapsed_s", total_elapsed},
            {"mean_per_image_ms", mean_per_image}};
}

TimingReport measure_inference(const classify::Classifier& classifier, std::span<const RawImage> testset,
                               long long iterations) {
    if (testset.empty()) throw std::invalid_argument("test set is empty");
    if (iterations < 1) throw std::invalid_argument("iterations must be positive");
    using clock = std::chrono::steady_clock;
    const auto start = clock::now();
    for (long long it = 0; it < iterations; ++it)
        for (const auto& image : testset) (void)classifier.predict({}, image);
    const double total = std::chrono::duration<double>(clock::now() - start).count();
    return TimingReport::from_total(iterations, static_cast<long long>(testset.size()), total);
}

EarlyStopStep early_stop_step(const EarlyStopState& state, double epoch_loss) {
    if (!std::isfinite(epoch_loss)) throw NonFiniteLoss();
    EarlyStopState next = state;
    ++next.epoch;
    if (epoch_loss < next.best_loss) {
        next.best_loss = epoch_loss;
        next.best_epoch = next.epoch;
        next.stale_count = 0;
    } else {
        ++next.stale_count;
    }
    const bool stop = next.stale_count >= next.k || next.epoch >= next.upper_limit;
    return EarlyStopStep{next, stop ? Decision::Stop : Decision::Continue};
}

EvaluationReport evaluation_report(const ConfusionMatrix& cm, std::optional<TimingReport> timing, std::string model) {
    EvaluationReport report{std::move(model), cm, {}, overall_accuracy(cm), timing};
    for (int c = 0; c < cm.k(); ++c) {
        const auto label = static_cast<ClassLabel>(c);
        ClassRow row{label, one_vs_all(cm, c), std::nullopt};
        try {
            row.metrics = per_class_metrics(row.counts, label);
        } catch (const DegenerateDenominator&) {
        }
        report.rows.push_back(std::move(row));
    }
    return report;
}

nlohmann::json EvaluationReport::to_json() const {
    nlohmann::json j;
    j["model"] = model;
    auto& cells = j["confusion_matrix"] = nlohmann::json::array();
    for (int t = 0; t < confusion.k(); ++t) {
        auto row = nlohmann::json::array();
        for (int p = 0; p < confusion.k(); ++p) row.push_back(confusion.cell(t, p));
        cells.push_back(std::move(row));
    }
    auto& classes = j["per_class"] = nlohmann::json::array();
    for (const auto& r : rows) {
        nlohmann::json row{{"class_id", dataset::class_id(r.label)},
                           {"class_name", dataset::class_name(r.label)},
                           {"tp", r.counts.tp},
                           {"tn", r.counts.tn},
                           {"fp", r.counts.fp},
                           {"fn", r.counts.fn}};
        for (const char* key : {"sensitivity", "specificity", "accuracy", "ber"}) row[key] = nullptr;
        if (r.metrics) {
            row["sensitivity"] = r.metrics->sensitivity.value();
            row["specificity"] = r.metrics->specificity.value();
            row["accuracy"] = r.metrics->accuracy.value();
            row["ber"] = r.metrics->ber.value();
        }
        classes.push_back(std::move(row));
    }
    j["total_samples"] = confusion.total();
    j["overall_accuracy"] = overall.value();
    j["timing"] = timing ? timing->to_json() : nlohmann::json(nullptr);
    return j;
}

std::string EvaluationReport::to_text() const {
    std::ostringstream out;
    if (!model.empty()) out << "Model: " << model << '\n';
    out << std::left << std::setw(6) << "Class" << std::right;
    for (const char* h : {"TP", "TN", "FP", "FN"}) out << std::setw(7) << h;
    for (const char* h : {"Sens (%)", "Spec (%)", "Acc (%)", "BER(%)"}) out << std::setw(10) << h;
    out << '\n';
    for (const auto& r : rows) {
        out << std::left << std::setw(6) << dataset::class_id(r.label) << std::right << std::setw(7) << r.counts.tp
            << std::setw(7) << r.counts.tn << std::setw(7) << r.counts.fp << std::setw(7) << r.counts.fn;
        if (r.metrics) {
            for (const auto* p : {&r.metrics->sensitivity, &r.metrics->specificity, &r.metrics->accuracy,
                                  &r.metrics->ber})
                out << std::setw(10) << p->fixed2();
        } else {
            for (int i = 0; i < 4; ++i) out << std::setw(10) << "n/a";
        }
        out << '\n';
    }
    out << "Test-set accuracy (%): " << overall.fixed2() << " (" << confusion.trace() << "/" << confusion.total()
        << ")\n";
    if (timing) {
        out << "Average inference time per image (ms): " << std::fixed << std::setprecision(3)
            << timing->mean_per_image << " over " << timing->iterations << " iterations\n";
    }
    return out.str();
}

EvaluationReport EvaluationReport::from_json(const nlohmann::json& j) {
    const auto& cells = j.at("confusion_matrix");
    ConfusionMatrix cm(static_cast<int>(cells.size()));
    for (int t = 0; t < cm.k(); ++t)
        for (int p = 0; p < cm.k(); ++p) cm.add(t, p, cells.at(t).at(p).get<long long>());
    std::optional<TimingReport> timing;
    if (const auto& tj = j.at("timing"); !tj.is_null()) {
        TimingReport t;
        t.iterations = tj.at("iterations").get<long long>();
        t.samples_per_iteration = tj.at("samples_per_iteration").get<long long>();
        t.total_elapsed = tj.at("total_elapsed_s").get<double>();
        t.mean_per_image = tj.at("mean_per_image_ms").get<double>();
        timing = t;
    }
    return evaluation_report(cm, timing, j.value("model", std::string{}));
}

}  // namespace dexray::eval
