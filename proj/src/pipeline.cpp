#include "medpipe/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "medpipe/errors.hpp"
#include "medpipe/rng.hpp"

namespace medpipe {

namespace {

std::string trimmed(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    for (char ch : s) {
        if (ch == sep) {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    parts.push_back(cur);
    return parts;
}

void parse_pipeline_value(PipelineConfig& cfg, const std::string& value,
                          const std::string& origin) {
    std::string v = value;
    if (v == "svm-only") v = "svm";
    const std::vector<std::string> tokens = split(v, '+');
    cfg.selection = SelectionMode::none;
    cfg.reduction = ReductionMode::none;
    bool saw_pca = false, saw_lda = false, saw_svm = false;
    int stage = 0;  // enforce selection < pca < lda < svm ordering
    for (const std::string& raw : tokens) {
        const std::string t = trimmed(raw);
        int this_stage;
        if (t == "forward" || t == "rfe") this_stage = 1;
        else if (t == "pca") this_stage = 2;
        else if (t == "lda") this_stage = 3;
        else if (t == "svm") this_stage = 4;
        else throw ConfigError(origin + ": unknown pipeline stage '" + t + "'");
        if (this_stage <= stage)
            throw ConfigError(origin + ": pipeline stages out of order near '" + t + "'");
        stage = this_stage;
        if (t == "forward") cfg.selection = SelectionMode::forward;
        if (t == "rfe") cfg.selection = SelectionMode::rfe;
        if (t == "pca") saw_pca = true;
        if (t == "lda") saw_lda = true;
        if (t == "svm") saw_svm = true;
    }
    if (!saw_svm) throw ConfigError(origin + ": pipeline must end with svm");
    if (saw_pca && saw_lda) cfg.reduction = ReductionMode::pca_lda;
    else if (saw_pca) cfg.reduction = ReductionMode::pca;
    else if (saw_lda) cfg.reduction = ReductionMode::lda;
}

}  // namespace

PipelineConfig parse_config_text(const std::string& text, const std::string& origin) {
    PipelineConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trimmed(line);
        if (t.empty() || t[0] == '#') continue;
        const std::size_t eq = t.find('=');
        const std::string where = origin + ":" + std::to_string(line_no);
        if (eq == std::string::npos)
            throw ConfigError(where + ": expected 'key = value', got '" + t + "'");
        const std::string key = trimmed(t.substr(0, eq));
        const std::string value = trimmed(t.substr(eq + 1));
        if (value.empty()) throw ConfigError(where + ": empty value for key '" + key + "'");
        try {
            if (key == "pipeline") {
                parse_pipeline_value(cfg, value, where);
            } else if (key == "kernel") {
                cfg.kernel = kernel_from_string(value);
            } else if (key == "C") {
                cfg.C = std::stod(value);
                if (!(cfg.C > 0.0)) throw ConfigError(where + ": C must be positive");
            } else if (key == "levels") {
                cfg.glcm_levels.clear();
                for (const std::string& piece : split(value, ',')) {
                    const int l = std::stoi(trimmed(piece));
                    if (l < 2 || l > 256)
                        throw ConfigError(where + ": levels entries must be in [2, 256]");
                    cfg.glcm_levels.push_back(l);
                }
            } else if (key == "d") {
                const long d = std::stol(value);
                if (d < 0) throw ConfigError(where + ": d must be >= 0");
                cfg.lda_dims = static_cast<std::size_t>(d);
            } else if (key == "variance_fraction") {
                cfg.variance_fraction = std::stod(value);
                if (!(cfg.variance_fraction > 0.0) || cfg.variance_fraction > 1.0)
                    throw ConfigError(where + ": variance_fraction must be in (0, 1]");
            } else if (key == "p_cutoff") {
                cfg.p_cutoff = std::stod(value);
                if (!(cfg.p_cutoff > 0.0) || cfg.p_cutoff > 1.0)
                    throw ConfigError(where + ": p_cutoff must be in (0, 1]");
            } else if (key == "rfe_target") {
                const long n = std::stol(value);
                if (n < 1) throw ConfigError(where + ": rfe_target must be >= 1");
                cfg.rfe_target = static_cast<std::size_t>(n);
            } else if (key == "rfe_exact") {
                if (value != "0" && value != "1")
                    throw ConfigError(where + ": rfe_exact must be 0 or 1");
                cfg.rfe_exact = value == "1";
            } else if (key == "k") {
                cfg.folds = std::stoi(value);
                if (cfg.folds < 2) throw ConfigError(where + ": k must be >= 2");
            } else if (key == "seed") {
                cfg.seed = std::stoull(value);
            } else {
                throw ConfigError(where + ": unknown config key '" + key + "'");
            }
        } catch (const std::logic_error&) {
            throw ConfigError(where + ": cannot parse value '" + value + "' for key '" + key +
                              "'");
        }
    }
    return cfg;
}

PipelineConfig parse_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path + ": cannot open file");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_config_text(text, path);
}

std::string pipeline_to_string(const PipelineConfig& cfg) {
    std::string s;
    if (cfg.selection == SelectionMode::forward) s += "forward+";
    if (cfg.selection == SelectionMode::rfe) s += "rfe+";
    if (cfg.reduction == ReductionMode::pca || cfg.reduction == ReductionMode::pca_lda)
        s += "pca+";
    if (cfg.reduction == ReductionMode::lda || cfg.reduction == ReductionMode::pca_lda)
        s += "lda+";
    return s + "svm";
}

std::vector<int> stratified_fold_assignment(const std::vector<int>& labels, int k,
                                            std::uint64_t seed) {
    if (k < 2) throw InvalidArgument("stratified folds: k must be >= 2");
    int c = 0;
    for (int l : labels) c = std::max(c, l + 1);
    std::vector<std::vector<std::size_t>> by_class(c);
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

    Rng rng(seed);
    std::vector<int> fold(labels.size(), 0);
    int cursor = 0;  // keeps overall fold sizes within 1 across classes
    for (auto& members : by_class) {
        rng.shuffle(members);
        for (std::size_t i = 0; i < members.size(); ++i) {
            fold[members[i]] = cursor;
            cursor = (cursor + 1) % k;
        }
    }
    return fold;
}

namespace {

// Validation error of the configured SVM over a feature subset, estimated by
// stratified k-fold on the training data. An empty subset degrades to the
// majority-class predictor.
class WrapperEvaluator {
public:
    WrapperEvaluator(const LabeledDataset& ds, const PipelineConfig& cfg) : ds_(ds), cfg_(cfg) {
        std::size_t min_class = ds.samples();
        std::vector<std::size_t> counts(ds.class_count(), 0);
        for (int l : ds.labels) ++counts[l];
        for (std::size_t n : counts) min_class = std::min(min_class, n);
        const int k = std::max(2, std::min<int>(cfg.folds, static_cast<int>(min_class)));
        fold_ = stratified_fold_assignment(ds.labels, k, cfg.seed);
        folds_ = k;
    }

    double operator()(const std::vector<std::size_t>& subset) const {
        std::size_t wrong = 0;
        for (int f = 0; f < folds_; ++f) {
            std::vector<std::size_t> train, val;
            for (std::size_t i = 0; i < ds_.samples(); ++i)
                (fold_[i] == f ? val : train).push_back(i);
            if (val.empty()) continue;
            if (subset.empty()) {
                std::vector<std::size_t> counts(ds_.class_count(), 0);
                for (std::size_t i : train) ++counts[ds_.labels[i]];
                const int majority = static_cast<int>(
                    std::max_element(counts.begin(), counts.end()) - counts.begin());
                for (std::size_t i : val)
                    if (ds_.labels[i] != majority) ++wrong;
                continue;
            }
            const LabeledDataset train_ds = ds_.select_rows(train).select_columns(subset);
            SmoOptions smo;
            smo.C = cfg_.C;
            smo.tol = cfg_.tol;
            smo.seed = cfg_.seed;
            const SvmMulticlassModel m =
                train_multiclass(train_ds.x, train_ds.labels, cfg_.kernel, smo);
            for (std::size_t i : val) {
                std::vector<double> row;
                for (std::size_t c : subset) row.push_back(ds_.x(i, c));
                if (predict_class(m, row) != ds_.labels[i]) ++wrong;
            }
        }
        return static_cast<double>(wrong) / static_cast<double>(ds_.samples());
    }

private:
    const LabeledDataset& ds_;
    const PipelineConfig& cfg_;
    std::vector<int> fold_;
    int folds_ = 0;
};

}  // namespace

PipelineModel fit_preprocessing(const LabeledDataset& ds, const PipelineConfig& cfg,
                                SelectionReport* selection_report) {
    if (ds.labels.size() != ds.samples())
        throw InvalidArgument("fit_pipeline: dataset must be labeled");
    const int c = ds.class_count();
    if (c < 2) throw InvalidArgument("fit_pipeline: need at least 2 classes");

    PipelineModel model;
    model.label_names = ds.label_names;
    if (model.label_names.empty())
        for (int k = 0; k < c; ++k) model.label_names.push_back(std::to_string(k));

    auto [scaled, scaling] = normalize_columns(ds);
    model.scaling = std::move(scaling);

    LabeledDataset working = std::move(scaled);
    if (cfg.selection != SelectionMode::none) {
        SelectionReport report;
        if (cfg.selection == SelectionMode::forward) {
            const WrapperEvaluator evaluator(working, cfg);
            report = forward_select(working, std::cref(evaluator), cfg.p_cutoff);
        } else {
            RfeOptions opt;
            opt.C = cfg.C;
            opt.tol = cfg.tol;
            opt.seed = cfg.seed;
            opt.exact_bound = cfg.rfe_exact;
            report = svm_rfe(working, opt, std::min(cfg.rfe_target, working.features()));
        }
        if (report.kept.empty())
            throw ConfigError(
                "fit_pipeline: selection kept no features; relax p_cutoff or drop the "
                "selection stage");
        model.has_selection = true;
        model.selected = report.kept;
        std::sort(model.selected.begin(), model.selected.end());
        if (selection_report) *selection_report = report;
        working = working.select_columns(model.selected);
    }

    const Matrix* final_x = &working.x;
    Matrix reduced;
    if (cfg.reduction == ReductionMode::pca || cfg.reduction == ReductionMode::pca_lda) {
        model.pca = pca_fit_fraction(working.x, cfg.variance_fraction);
        reduced = pca_transform(*model.pca, working.x);
        final_x = &reduced;
    }
    if (cfg.reduction == ReductionMode::lda || cfg.reduction == ReductionMode::pca_lda) {
        std::size_t d = cfg.lda_dims;
        if (d == 0) d = std::min<std::size_t>(2, static_cast<std::size_t>(c - 1));
        model.lda = lda_fit(*final_x, working.labels, d);
    }
    return model;
}

PipelineModel fit_pipeline(const LabeledDataset& ds, const PipelineConfig& cfg,
                           SelectionReport* selection_report) {
    PipelineModel model = fit_preprocessing(ds, cfg, selection_report);
    const Matrix projected = pipeline_project_matrix(model, ds.x);

    SmoOptions smo;
    smo.C = cfg.C;
    smo.tol = cfg.tol;
    smo.seed = cfg.seed;
    model.svm = train_multiclass(projected, ds.labels, cfg.kernel, smo);
    model.svm.class_labels = model.label_names;
    return model;
}

std::vector<double> pipeline_project(const PipelineModel& model, std::span<const double> raw) {
    if (raw.size() != model.input_dim())
        throw InvalidArgument("pipeline: expected " + std::to_string(model.input_dim()) +
                              " features, got " + std::to_string(raw.size()));
    std::vector<double> v(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) v[i] = model.scaling.apply(i, raw[i]);
    if (model.has_selection) {
        std::vector<double> sel;
        sel.reserve(model.selected.size());
        for (std::size_t c : model.selected) sel.push_back(v[c]);
        v = std::move(sel);
    }
    if (model.pca) v = pca_transform_row(*model.pca, v);
    if (model.lda) v = lda_transform_row(*model.lda, v);
    return v;
}

Matrix pipeline_project_matrix(const PipelineModel& model, const Matrix& x) {
    Matrix out;
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const std::vector<double> v = pipeline_project(model, x.row(r));
        if (r == 0) out = Matrix(x.rows(), v.size());
        for (std::size_t c = 0; c < v.size(); ++c) out(r, c) = v[c];
    }
    return out;
}

int pipeline_predict(const PipelineModel& model, std::span<const double> raw,
                     std::vector<double>* decisions) {
    const std::vector<double> v = pipeline_project(model, raw);
    return predict_class(model.svm, v, decisions);
}

std::string pipeline_report(const PipelineModel& model, const PipelineConfig& cfg,
                            const std::vector<std::string>& feature_names,
                            const SelectionReport* selection_report) {
    std::ostringstream os;
    os << "pipeline: " << pipeline_to_string(cfg) << '\n';
    os << "kernel: " << kernel_to_string(cfg.kernel) << "  C: " << format_real(cfg.C) << '\n';
    os << "input features: " << model.input_dim() << '\n';
    if (model.has_selection) {
        os << "selected " << model.selected.size() << " feature(s):\n";
        for (std::size_t f : model.selected) {
            os << "  [" << f << "] "
               << (f < feature_names.size() ? feature_names[f] : "f" + std::to_string(f))
               << '\n';
        }
    }
    if (model.pca) {
        os << "pca components: " << model.pca->out_dim() << "\n  eigenvalues:";
        for (double v : model.pca->eigenvalues) os << ' ' << format_real(v);
        os << '\n';
    }
    if (model.lda) {
        os << "lda dimensions: " << model.lda->out_dim() << "\n  eigenvalues:";
        for (double v : model.lda->eigenvalues) os << ' ' << format_real(v);
        os << '\n';
    }
    os << "svm machines: " << model.svm.machines.size() << "\n  support vectors per class:";
    for (const auto& m : model.svm.machines) os << ' ' << m.alphas.size();
    os << '\n';
    if (selection_report && model.has_selection)
        os << selection_report_text(*selection_report, feature_names);
    return os.str();
}

LabeledDataset extract_features(const Manifest& manifest, const ExtractionConfig& cfg,
                                int jobs) {
    const std::size_t n = manifest.rows.size();
    std::vector<FeatureVector> results(n);
    std::vector<std::string> failures(n);
    std::atomic<std::size_t> next{0};

    const auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) break;
            const ManifestRow& row = manifest.rows[i];
            try {
                const GrayImage img = minmax_normalize(load_pgm(row.image_path));
                const RegionMask mask = row.mask_path.empty()
                                            ? auto_segment(img, cfg.blur_sigma)
                                            : load_mask_pgm(row.mask_path);
                results[i] = extract_all(img, mask, cfg);
            } catch (const std::exception& e) {
                failures[i] = e.what();
            }
        }
    };

    const int thread_count = std::max(1, jobs);
    if (thread_count == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < thread_count; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    std::string error_summary;
    for (std::size_t i = 0; i < n; ++i) {
        if (!failures[i].empty())
            error_summary += manifest.rows[i].image_path + ": " + failures[i] + "\n";
    }
    if (!error_summary.empty())
        throw IoError("feature extraction failed for some rows:\n" + error_summary);

    LabeledDataset ds;
    ds.label_names = manifest.label_names;
    ds.feature_names = results.empty() ? std::vector<std::string>{} : results[0].names;
    ds.x = Matrix(n, ds.feature_names.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (results[i].names != ds.feature_names)
            throw Error("extract_features: inconsistent feature layout across rows");
        for (std::size_t c = 0; c < results[i].values.size(); ++c)
            ds.x(i, c) = results[i].values[c];
        ds.labels.push_back(manifest.rows[i].label_id);
    }
    return ds;
}

}  // namespace medpipe
