#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "medpipe/dataset.hpp"
#include "medpipe/svm.hpp"

namespace medpipe {

struct SelectionReport {
    std::vector<std::size_t> kept;   // duplicate-free feature indices
    std::vector<double> scores;      // per-feature t statistic or RFE criterion
    std::vector<double> p_values;    // t-test path only
    struct Step {
        std::size_t feature = 0;
        double value = 0.0;  // validation error (forward) / criterion (RFE)
    };
    std::vector<Step> history;
    bool empty_pool = false;
};

// Pooled-variance two-sample t statistic and two-tailed p per feature,
// between the two given classes. `kept` lists all features ordered by
// ascending p (ties by index).
SelectionReport ttest_rank(const LabeledDataset& ds, int class_a, int class_b);

// Validation-error callback over a candidate feature subset; must return a
// value in [0, 1] and be safe to call repeatedly.
using SubsetEvaluator = std::function<double(const std::vector<std::size_t>&)>;

// Greedy forward wrapper over the t-test-gated candidate pool. A feature
// enters the pool when its p-value beats `p_cutoff` for at least one class
// pair. Additions stop once no candidate improves the error by more than
// `tol`; ties pick the lower feature index.
SelectionReport forward_select(const LabeledDataset& ds, const SubsetEvaluator& evaluator,
                               double p_cutoff, double tol = 1e-6);

struct RfeOptions {
    double C = 10.0;
    double tol = 1e-3;
    std::uint64_t seed = 0;
    std::uint64_t max_pair_updates = 1'000'000;
    // Recompute the dual-objective variation per candidate instead of the
    // w_i^2 criterion. One extra training per surviving feature per step.
    bool exact_bound = false;
};

// SVM-RFE: repeatedly trains a linear machine (one per class, one-vs-rest,
// criteria summed) and removes the feature with the smallest ranking
// criterion until `target_count` remain. Equal criteria eliminate the higher
// index first. History records the elimination order.
SelectionReport svm_rfe(const LabeledDataset& ds, const RfeOptions& opt,
                        std::size_t target_count);

// Min-max scales every column to [0, 1] (constant columns to 0) and returns
// the fitted ranges for replay at prediction time.
std::pair<LabeledDataset, ColumnScaling> normalize_columns(const LabeledDataset& ds);

// Human-readable table / machine CSV (step,feature,score,p,error).
std::string selection_report_text(const SelectionReport& report,
                                  const std::vector<std::string>& feature_names);
std::string selection_report_csv(const SelectionReport& report);

}  // namespace medpipe
