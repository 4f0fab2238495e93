#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "medpipe/dataset.hpp"
#include "medpipe/pipeline.hpp"

namespace medpipe {

// Binary confusion counts; region_size > 0 switches the rate denominators to
// the pixel-normalized variant (tumor size).
struct BinaryCounts {
    long tp = 0;
    long tn = 0;
    long fp = 0;
    long fn = 0;
    long region_size = 0;  // 0 = sample-normalized

    long total() const { return tp + tn + fp + fn; }
};

// Multi-class confusion matrix (row = truth, col = predicted) with per-class
// one-vs-rest reductions.
struct ConfusionCounts {
    std::vector<std::vector<long>> counts;

    explicit ConfusionCounts(int classes = 0)
        : counts(classes, std::vector<long>(classes, 0)) {}

    int classes() const { return static_cast<int>(counts.size()); }
    void add(int truth, int predicted) { ++counts[truth][predicted]; }
    long total() const;
    BinaryCounts binary_for(int cls) const;
};

struct PaperRates {
    double fp_rate = 0.0;
    double fn_rate = 0.0;
    double error_rate = 0.0;
    double correct_rate = 0.0;
    bool clamped = false;
};

// FP and FN rates over the region size when present, otherwise over the
// total sample count; correct rate is 1 - (FP + FN), everything clamped to
// [0, 1] with `clamped` raised when that fires.
PaperRates paper_rates(const BinaryCounts& counts);

double accuracy(const ConfusionCounts& confusion);

struct ClassPR {
    double precision = 0.0;  // 0/0 counts as 0
    double recall = 0.0;
};
ClassPR precision_recall(const ConfusionCounts& confusion, int cls);

// Euclidean k-NN with majority vote; vote ties prefer the smaller summed
// distance, then the lower class id.
int knn_predict(const Matrix& train_x, const std::vector<int>& train_y,
                std::span<const double> x, int k);

enum class EvalMethod { proposed, knn };

struct FoldMetrics {
    double accuracy = 0.0;
    ConfusionCounts confusion;
};

struct CrossValResult {
    std::vector<FoldMetrics> folds;
    double mean_accuracy = 0.0;
    double std_accuracy = 0.0;
    ConfusionCounts pooled;
};

// Stratified k-fold evaluation. The whole stage stack (scaling, selection,
// reduction, classifier) is refit on each training split, so no information
// from a held-out fold reaches its model.
CrossValResult cross_validate(const LabeledDataset& ds, const PipelineConfig& cfg, int k,
                              std::uint64_t seed, EvalMethod method = EvalMethod::proposed,
                              int knn_k = 5);

struct ComparisonRow {
    std::string method;
    double fp_rate = 0.0;
    double fn_rate = 0.0;
    double correct_rate = 0.0;
    double accuracy_with_fs = 0.0;
    double accuracy_without_fs = 0.0;
};

// Evaluates the configured pipeline and the k-NN baseline, each with and
// without the feature-selection stage.
std::vector<ComparisonRow> compare_methods(const LabeledDataset& ds, const PipelineConfig& cfg,
                                           int k, std::uint64_t seed);

std::string format_comparison_table(const std::vector<ComparisonRow>& rows);
std::string format_comparison_csv(const std::vector<ComparisonRow>& rows);
std::string format_cross_validation(const CrossValResult& result);

}  // namespace medpipe
