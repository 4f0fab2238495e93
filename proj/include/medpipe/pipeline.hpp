#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "medpipe/dataset.hpp"
#include "medpipe/features.hpp"
#include "medpipe/reduce.hpp"
#include "medpipe/selection.hpp"
#include "medpipe/svm.hpp"

namespace medpipe {

enum class SelectionMode { none, forward, rfe };
enum class ReductionMode { none, pca, lda, pca_lda };

// Everything a train/evaluate run needs, loadable from a line-based
// "key = value" config file. Keys: pipeline, kernel, C, levels, d,
// variance_fraction, p_cutoff, rfe_target, rfe_exact, k, seed.
struct PipelineConfig {
    SelectionMode selection = SelectionMode::none;
    ReductionMode reduction = ReductionMode::none;
    KernelSpec kernel = KernelSpec::linear();
    double C = 10.0;
    double tol = 1e-3;
    std::vector<int> glcm_levels = {8};
    std::size_t lda_dims = 0;  // 0 = min(2, classes - 1)
    double variance_fraction = 0.9999;
    double p_cutoff = 0.1;
    std::size_t rfe_target = 6;
    bool rfe_exact = false;
    int folds = 5;
    std::uint64_t seed = 0;
};

PipelineConfig parse_config_text(const std::string& text, const std::string& origin = "config");
PipelineConfig parse_config_file(const std::string& path);
std::string pipeline_to_string(const PipelineConfig& cfg);

// Fitted stage stack. Stages apply in fixed order:
// scaling -> selection -> PCA -> LDA -> SVM.
struct PipelineModel {
    ColumnScaling scaling;
    bool has_selection = false;
    std::vector<std::size_t> selected;  // ascending column indices
    std::optional<PcaModel> pca;
    std::optional<LdaModel> lda;
    SvmMulticlassModel svm;
    std::vector<std::string> label_names;

    std::size_t input_dim() const { return scaling.dim(); }
};

// Fits the configured stages on the given dataset only (callers hold out
// their validation data beforehand). Optionally returns the selection report.
PipelineModel fit_pipeline(const LabeledDataset& ds, const PipelineConfig& cfg,
                           SelectionReport* selection_report = nullptr);

// Scaling/selection/reduction only; the returned model has no classifier and
// supports pipeline_project but not pipeline_predict.
PipelineModel fit_preprocessing(const LabeledDataset& ds, const PipelineConfig& cfg,
                                SelectionReport* selection_report = nullptr);

// Applies the persisted scaling/projections, then argmax over the one-vs-rest
// decision values.
int pipeline_predict(const PipelineModel& model, std::span<const double> raw,
                     std::vector<double>* decisions = nullptr);

// Featurize the stages a raw row passes through, minus the SVM.
std::vector<double> pipeline_project(const PipelineModel& model, std::span<const double> raw);
Matrix pipeline_project_matrix(const PipelineModel& model, const Matrix& x);

// Text summary: stages, selected features, eigenvalue spectra, SV counts.
std::string pipeline_report(const PipelineModel& model, const PipelineConfig& cfg,
                            const std::vector<std::string>& feature_names,
                            const SelectionReport* selection_report);

// Stratified fold ids (0..k-1) with fold sizes within 1 of each other and
// class proportions preserved within one sample per fold.
std::vector<int> stratified_fold_assignment(const std::vector<int>& labels, int k,
                                            std::uint64_t seed);

// Per-manifest-row feature extraction (auto-segmenting when the row has no
// mask). `jobs` > 1 extracts rows concurrently; output order stays by row.
LabeledDataset extract_features(const Manifest& manifest, const ExtractionConfig& cfg,
                                int jobs = 1);

}  // namespace medpipe
