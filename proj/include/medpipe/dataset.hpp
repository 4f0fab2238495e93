#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "medpipe/linalg.hpp"

namespace medpipe {

// Rows = samples, columns = named features, labels are dense class ids.
struct LabeledDataset {
    Matrix x;
    std::vector<int> labels;  // empty for unlabeled prediction inputs
    std::vector<std::string> feature_names;
    std::vector<std::string> label_names;  // id -> display string, may be empty

    int class_count() const;
    std::size_t samples() const { return x.rows(); }
    std::size_t features() const { return x.cols(); }

    // Copies the given columns, preserving their relative order.
    LabeledDataset select_columns(const std::vector<std::size_t>& cols) const;
    LabeledDataset select_rows(const std::vector<std::size_t>& rows) const;
};

// Per-column (min, max) pairs fitted on training data and replayed verbatim
// at prediction time. Constant columns scale to 0; out-of-range inputs
// extrapolate rather than clamp.
struct ColumnScaling {
    std::vector<std::pair<double, double>> ranges;

    double apply(std::size_t col, double v) const {
        const auto [lo, hi] = ranges[col];
        return hi > lo ? (v - lo) / (hi - lo) : 0.0;
    }
    Matrix apply(const Matrix& m) const;
    std::size_t dim() const { return ranges.size(); }
};

// Fixed-width real formatting used by every text output (9 significant
// digits), so reruns are byte-identical.
std::string format_real(double v);

// Feature CSV: header of feature names with a trailing "label" column when
// labels are present. Reading rejects NaN/inf tokens and ragged rows with
// the offending line number; a trailing "label" header is optional.
void write_feature_csv(const std::string& path, const LabeledDataset& ds);
LabeledDataset read_feature_csv(const std::string& path);

// Manifest: one "image,mask,label" row per sample; the mask field may be
// empty. Relative paths resolve against the manifest's directory, and every
// referenced file must exist at load time.
struct ManifestRow {
    std::string image_path;
    std::string mask_path;  // empty = auto-segment
    std::string label;
    int label_id = -1;
};

struct Manifest {
    std::vector<ManifestRow> rows;
    std::vector<std::string> label_names;  // sorted lexicographically
};

Manifest load_manifest(const std::string& path);

}  // namespace medpipe
