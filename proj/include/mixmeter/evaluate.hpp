#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mixmeter/forest.hpp"

namespace mixmeter {

/// Stratified train/eval split: classes in first-appearance order, each
/// class's indices shuffled with a seeded generator, round(fraction * n_c)
/// of them into train. Returns (train, eval) index lists.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(
    const std::vector<std::string>& labels, double train_fraction, std::uint64_t seed);

/// Stratified k folds: per class, shuffled indices dealt round-robin to
/// folds 0..k-1. Fold sizes differ by at most one per class. Throws if
/// k < 2 or k > n.
std::vector<std::vector<std::size_t>> stratified_folds(
    const std::vector<std::string>& labels, std::size_t k, std::uint64_t seed);

/// Rows = actual class, columns = predicted class.
struct ConfusionMatrix {
    std::vector<std::string> classes;
    std::vector<std::vector<std::size_t>> counts;

    std::size_t total() const;
    std::size_t trace() const;
};

ConfusionMatrix make_confusion(const std::vector<int>& actual,
                               const std::vector<int>& predicted,
                               const std::vector<std::string>& classes);

struct ClassMetrics {
    std::string name;
    double precision = 0.0;  // diag / column sum, 0 when the column is empty
    double recall = 0.0;     // diag / row sum, 0 when the class is absent
    double f1 = 0.0;         // harmonic mean, 0 when precision + recall == 0
    std::size_t support = 0;
};

struct ClassReport {
    std::vector<ClassMetrics> per_class;
    double accuracy = 0.0;
    // Averages over classes: unweighted, support-weighted, and pooled.
    double macro_precision = 0.0, macro_recall = 0.0, macro_f1 = 0.0;
    double weighted_precision = 0.0, weighted_recall = 0.0, weighted_f1 = 0.0;
    double micro_precision = 0.0, micro_recall = 0.0, micro_f1 = 0.0;
};

ClassReport make_report(const ConfusionMatrix& cm);

/// Human-readable table / labeled grid / machine-readable key=value lines.
std::string format_report(const ClassReport& report);
std::string format_confusion(const ConfusionMatrix& cm);
std::string report_key_values(const ClassReport& report, const ConfusionMatrix& cm);

/// Rows ready for training and evaluation. In per-window datasets several
/// rows share a song id; splits then work on songs and predictions are
/// majority votes over a song's rows (ties to the lowest class index).
struct EvalData {
    std::vector<std::vector<double>> X;
    std::vector<std::string> row_ids;
    std::vector<std::string> row_labels;
};

struct TrainOptions {
    ForestConfig forest;
    bool use_pca = false;
    std::size_t pca_components = 16;
};

struct EvalOptions {
    TrainOptions train;
    std::uint64_t split_seed = 49;
    double train_fraction = 0.9;
    std::size_t folds = 5;  // protocol kCrossVal only
};

struct FoldResult {
    ConfusionMatrix confusion;
    ClassReport report;
};

struct EvalResult {
    std::vector<FoldResult> folds;   // one entry for a plain split
    ConfusionMatrix pooled;          // all eval predictions together
    ClassReport pooled_report;
    double mean_accuracy = 0.0;      // mean of per-fold accuracies
};

/// Train on the 90% side, score the rest.
EvalResult evaluate_split(const EvalData& data, const EvalOptions& options);

/// k-fold cross-validation; each fold is scored by a forest trained on the
/// remaining folds.
EvalResult evaluate_cv(const EvalData& data, const EvalOptions& options);

/// Fits a model on all rows (PCA first when enabled).
ForestModel train_model(const EvalData& data, const TrainOptions& options,
                        Aggregation aggregation, std::uint64_t feature_schema);

/// Per-unit predictions of a model on rows grouped by id: one (id, class)
/// per distinct id in first-appearance order.
std::vector<std::pair<std::string, int>> predict_units(
    const ForestModel& model, const EvalData& data);

struct UnitPrediction {
    std::string id;
    int predicted = 0;              // majority vote over the unit's rows
    std::vector<double> mean_proba; // mean soft vote, one value per class
};

std::vector<UnitPrediction> predict_units_detailed(const ForestModel& model,
                                                   const EvalData& data);

}  // namespace mixmeter
