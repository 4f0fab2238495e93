#include "medpipe/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "medpipe/errors.hpp"
#include "medpipe/stats.hpp"

namespace medpipe {

namespace {

std::vector<double> class_column(const LabeledDataset& ds, std::size_t col, int cls) {
    std::vector<double> v;
    for (std::size_t r = 0; r < ds.samples(); ++r)
        if (ds.labels[r] == cls) v.push_back(ds.x(r, col));
    return v;
}

}  // namespace

SelectionReport ttest_rank(const LabeledDataset& ds, int class_a, int class_b) {
    if (ds.labels.size() != ds.samples())
        throw InvalidArgument("ttest_rank: dataset must be labeled");
    std::size_t na = 0, nb = 0;
    for (int l : ds.labels) {
        if (l == class_a) ++na;
        if (l == class_b) ++nb;
    }
    if (na < 2 || nb < 2)
        throw InvalidArgument("ttest_rank: both classes need at least 2 samples");

    SelectionReport report;
    report.scores.resize(ds.features());
    report.p_values.resize(ds.features());
    for (std::size_t f = 0; f < ds.features(); ++f) {
        const std::vector<double> a = class_column(ds, f, class_a);
        const std::vector<double> b = class_column(ds, f, class_b);
        const TTestResult r = pooled_ttest(a, b);
        report.scores[f] = r.t;
        report.p_values[f] = r.p;
    }
    report.kept.resize(ds.features());
    std::iota(report.kept.begin(), report.kept.end(), std::size_t{0});
    std::stable_sort(report.kept.begin(), report.kept.end(),
                     [&](std::size_t i, std::size_t j) {
                         if (report.p_values[i] != report.p_values[j])
                             return report.p_values[i] < report.p_values[j];
                         return i < j;
                     });
    return report;
}

SelectionReport forward_select(const LabeledDataset& ds, const SubsetEvaluator& evaluator,
                               double p_cutoff, double tol) {
    const int c = ds.class_count();
    if (c < 2) throw InvalidArgument("forward_select: need at least 2 classes");

    // Candidate pool: p < cutoff for any class pair.
    std::vector<double> best_p(ds.features(), 1.0);
    std::vector<double> best_t(ds.features(), 0.0);
    for (int a = 0; a < c; ++a) {
        for (int b = a + 1; b < c; ++b) {
            const SelectionReport pair = ttest_rank(ds, a, b);
            for (std::size_t f = 0; f < ds.features(); ++f) {
                if (pair.p_values[f] < best_p[f]) {
                    best_p[f] = pair.p_values[f];
                    best_t[f] = pair.scores[f];
                }
            }
        }
    }
    std::vector<std::size_t> pool;
    for (std::size_t f = 0; f < ds.features(); ++f)
        if (best_p[f] < p_cutoff) pool.push_back(f);

    SelectionReport report;
    report.scores = best_t;
    report.p_values = best_p;
    if (pool.empty()) {
        report.empty_pool = true;
        return report;
    }

    std::vector<bool> taken(ds.features(), false);
    std::vector<std::size_t> subset;
    double current = evaluator({});
    while (true) {
        std::size_t best_f = ds.features();
        double best_err = std::numeric_limits<double>::infinity();
        for (std::size_t f : pool) {
            if (taken[f]) continue;
            subset.push_back(f);
            const double err = evaluator(subset);
            subset.pop_back();
            if (err < best_err) {
                best_err = err;
                best_f = f;
            }
        }
        if (best_f == ds.features() || !(current - best_err > tol)) break;
        taken[best_f] = true;
        subset.push_back(best_f);
        report.kept.push_back(best_f);
        report.history.push_back({best_f, best_err});
        current = best_err;
    }
    return report;
}

namespace {

double model_dual_objective(const SvmBinaryModel& m) {
    double sum_a = 0.0;
    double quad = 0.0;
    for (std::size_t i = 0; i < m.alphas.size(); ++i) {
        sum_a += m.alphas[i];
        for (std::size_t j = 0; j < m.alphas.size(); ++j) {
            quad += m.alphas[i] * m.alphas[j] * m.sv_labels[i] * m.sv_labels[j] *
                    kernel_eval(m.kernel, m.support_vectors.row(i), m.support_vectors.row(j));
        }
    }
    return sum_a - 0.5 * quad;
}

// One linear machine per class (or a single machine for two classes),
// trained on the given feature subset.
std::vector<SvmBinaryModel> rfe_machines(const LabeledDataset& ds,
                                         const std::vector<std::size_t>& cols,
                                         const RfeOptions& opt) {
    const LabeledDataset view = ds.select_columns(cols);
    SmoOptions smo;
    smo.C = opt.C;
    smo.tol = opt.tol;
    smo.seed = opt.seed;
    smo.max_pair_updates = opt.max_pair_updates;
    const int c = ds.class_count();
    std::vector<SvmBinaryModel> machines;
    if (c == 2) {
        std::vector<int> y(ds.labels.size());
        for (std::size_t i = 0; i < y.size(); ++i) y[i] = ds.labels[i] == 1 ? 1 : -1;
        machines.push_back(train_binary(view.x, y, KernelSpec::linear(), smo));
    } else {
        for (int k = 0; k < c; ++k) {
            std::vector<int> y(ds.labels.size());
            for (std::size_t i = 0; i < y.size(); ++i) y[i] = ds.labels[i] == k ? 1 : -1;
            machines.push_back(train_binary(view.x, y, KernelSpec::linear(), smo));
        }
    }
    return machines;
}

std::vector<double> rfe_criteria(const LabeledDataset& ds,
                                 const std::vector<std::size_t>& cols,
                                 const RfeOptions& opt) {
    std::vector<double> crit(cols.size(), 0.0);
    if (opt.exact_bound) {
        const auto machines = rfe_machines(ds, cols, opt);
        double full = 0.0;
        for (const auto& m : machines) full += model_dual_objective(m);
        for (std::size_t j = 0; j < cols.size(); ++j) {
            std::vector<std::size_t> without = cols;
            without.erase(without.begin() + static_cast<std::ptrdiff_t>(j));
            const auto reduced = rfe_machines(ds, without, opt);
            double obj = 0.0;
            for (const auto& m : reduced) obj += model_dual_objective(m);
            crit[j] = std::abs(full - obj);
        }
        return crit;
    }
    for (const auto& m : rfe_machines(ds, cols, opt)) {
        const std::vector<double> w = linear_weights(m);
        for (std::size_t j = 0; j < cols.size(); ++j) crit[j] += w[j] * w[j];
    }
    return crit;
}

}  // namespace

SelectionReport svm_rfe(const LabeledDataset& ds, const RfeOptions& opt,
                        std::size_t target_count) {
    if (target_count < 1 || target_count > ds.features())
        throw InvalidArgument("svm_rfe: target_count must be in [1, feature count]");
    if (ds.class_count() < 2) throw InvalidArgument("svm_rfe: need at least 2 classes");

    SelectionReport report;
    report.scores.assign(ds.features(), 0.0);
    std::vector<std::size_t> surviving(ds.features());
    std::iota(surviving.begin(), surviving.end(), std::size_t{0});

    std::size_t step = 0;
    while (surviving.size() > target_count) {
        ++step;
        std::vector<double> crit;
        try {
            crit = rfe_criteria(ds, surviving, opt);
        } catch (const ConvergenceError& e) {
            throw ConvergenceError("svm_rfe: step " + std::to_string(step) + ": " + e.what(),
                                   e.max_violation);
        }
        // Smallest criterion loses; among equals the higher index goes first.
        std::size_t drop = 0;
        for (std::size_t j = 1; j < surviving.size(); ++j) {
            if (crit[j] < crit[drop] || (crit[j] == crit[drop] && surviving[j] > surviving[drop]))
                drop = j;
        }
        for (std::size_t j = 0; j < surviving.size(); ++j) report.scores[surviving[j]] = crit[j];
        report.history.push_back({surviving[drop], crit[drop]});
        surviving.erase(surviving.begin() + static_cast<std::ptrdiff_t>(drop));
    }
    report.kept = surviving;
    return report;
}

std::pair<LabeledDataset, ColumnScaling> normalize_columns(const LabeledDataset& ds) {
    ColumnScaling scaling;
    scaling.ranges.resize(ds.features());
    for (std::size_t c = 0; c < ds.features(); ++c) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (std::size_t r = 0; r < ds.samples(); ++r) {
            lo = std::min(lo, ds.x(r, c));
            hi = std::max(hi, ds.x(r, c));
        }
        if (ds.samples() == 0) lo = hi = 0.0;
        scaling.ranges[c] = {lo, hi};
    }
    LabeledDataset out = ds;
    out.x = scaling.apply(ds.x);
    return {std::move(out), std::move(scaling)};
}

std::string selection_report_text(const SelectionReport& report,
                                  const std::vector<std::string>& feature_names) {
    std::ostringstream os;
    const auto name_of = [&](std::size_t f) {
        return f < feature_names.size() ? feature_names[f] : ("f" + std::to_string(f));
    };
    os << "kept features (" << report.kept.size() << "):\n";
    for (std::size_t f : report.kept) {
        os << "  [" << f << "] " << name_of(f);
        if (f < report.scores.size()) os << "  score=" << format_real(report.scores[f]);
        if (f < report.p_values.size()) os << "  p=" << format_real(report.p_values[f]);
        os << '\n';
    }
    if (report.empty_pool) os << "  (empty candidate pool: no feature passed the p cutoff)\n";
    if (!report.history.empty()) {
        os << "history:\n";
        for (std::size_t i = 0; i < report.history.size(); ++i)
            os << "  step " << i + 1 << ": feature " << report.history[i].feature << " ("
               << name_of(report.history[i].feature)
               << ")  value=" << format_real(report.history[i].value) << '\n';
    }
    return os.str();
}

std::string selection_report_csv(const SelectionReport& report) {
    std::ostringstream os;
    os << "step,feature,score,p,error\n";
    for (std::size_t i = 0; i < report.history.size(); ++i) {
        const auto& h = report.history[i];
        os << i + 1 << ',' << h.feature << ',';
        if (h.feature < report.scores.size()) os << format_real(report.scores[h.feature]);
        os << ',';
        if (h.feature < report.p_values.size()) os << format_real(report.p_values[h.feature]);
        os << ',' << format_real(h.value) << '\n';
    }
    return os.str();
}

}  // namespace medpipe
