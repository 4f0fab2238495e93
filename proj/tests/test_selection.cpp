#include <doctest.h>

#include <cmath>
#include <limits>

#include "medpipe/errors.hpp"
#include "medpipe/rng.hpp"
#include "medpipe/selection.hpp"
#include "medpipe/stats.hpp"
#include "oracles.hpp"

using namespace medpipe;

namespace {

LabeledDataset make_dataset(const std::vector<std::vector<double>>& rows,
                            const std::vector<int>& labels) {
    LabeledDataset ds;
    ds.x = Matrix(rows.size(), rows.empty() ? 0 : rows[0].size());
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c) ds.x(r, c) = rows[r][c];
    ds.labels = labels;
    for (std::size_t c = 0; c < ds.x.cols(); ++c)
        ds.feature_names.push_back("f" + std::to_string(c));
    return ds;
}

}  // namespace

TEST_CASE("pooled t-test on the textbook fixture") {
    const std::vector<double> a{1.0, 2.0, 3.0};
    const std::vector<double> b{4.0, 5.0, 6.0};
    const TTestResult r = pooled_ttest(a, b);
    CHECK(r.t == doctest::Approx(-3.0 / std::sqrt(2.0 / 3.0)).epsilon(1e-12));
    CHECK(r.t == doctest::Approx(-3.6742346141747673).epsilon(1e-12));
    CHECK(r.p == doctest::Approx(0.021311641128756727).epsilon(1e-9));
    // independent quadrature oracle over the t density, df = 4
    CHECK(r.p == doctest::Approx(oracle::t_pvalue_quadrature(r.t, 4.0)).epsilon(1e-8));
}

TEST_CASE("t p-values agree with quadrature across df and t") {
    for (double df : {1.0, 2.0, 5.0, 17.0, 60.0}) {
        for (double t : {0.0, 0.3, 1.0, 2.5, 4.0}) {
            CHECK(two_tailed_t_pvalue(t, df) ==
                  doctest::Approx(oracle::t_pvalue_quadrature(t, df)).epsilon(1e-7));
        }
    }
}

TEST_CASE("t-test degenerate rules") {
    const std::vector<double> same{2.0, 2.0, 2.0};
    const TTestResult equal = pooled_ttest(same, same);
    CHECK(equal.t == 0.0);
    CHECK(equal.p == 1.0);

    const std::vector<double> zeros{0.0, 0.0};
    const std::vector<double> ones{1.0, 1.0};
    const TTestResult sep = pooled_ttest(zeros, ones);
    CHECK(sep.p == 0.0);
    CHECK(std::isinf(sep.t));

    const std::vector<double> tiny{1.0};
    CHECK_THROWS_AS(pooled_ttest(tiny, ones), InvalidArgument);
}

TEST_CASE("t statistic is antisymmetric and scale invariant") {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> a(6), b(8);
        for (double& v : a) v = rng.normal();
        for (double& v : b) v = rng.normal(0.4, 1.3);
        const TTestResult ab = pooled_ttest(a, b);
        const TTestResult ba = pooled_ttest(b, a);
        CHECK(ab.t == doctest::Approx(-ba.t).epsilon(1e-12));
        CHECK(ab.p == doctest::Approx(ba.p).epsilon(1e-12));

        const double scale = rng.uniform(0.1, 10.0);
        const double shift = rng.uniform(-5.0, 5.0);
        std::vector<double> a2 = a, b2 = b;
        for (double& v : a2) v = scale * v + shift;
        for (double& v : b2) v = scale * v + shift;
        const TTestResult scaled = pooled_ttest(a2, b2);
        CHECK(scaled.t == doctest::Approx(ab.t).epsilon(1e-9));
        CHECK(scaled.p == doctest::Approx(ab.p).epsilon(1e-9));
    }
}

TEST_CASE("ttest_rank orders features by ascending p") {
    // feature 0: identical across classes; feature 1: strong separator
    const LabeledDataset ds = make_dataset(
        {{1.0, 0.0}, {1.0, 0.1}, {1.0, 5.0}, {1.0, 5.2}}, {0, 0, 1, 1});
    const SelectionReport r = ttest_rank(ds, 0, 1);
    CHECK(r.kept.front() == 1);
    CHECK(r.p_values[0] == 1.0);
    CHECK(r.scores[0] == 0.0);
    CHECK(r.p_values[1] < 0.05);

    LabeledDataset small = ds;
    small.labels = {0, 0, 0, 1};
    CHECK_THROWS_AS(ttest_rank(small, 0, 1), InvalidArgument);
}

TEST_CASE("forward selection keeps the single perfect feature") {
    // feature 0 perfectly separates; evaluator scores by whether 0 is in
    const LabeledDataset ds = make_dataset(
        {{0.0, 0.3}, {0.1, 0.4}, {1.0, 0.35}, {0.9, 0.45}}, {0, 0, 1, 1});
    const auto evaluator = [](const std::vector<std::size_t>& subset) {
        for (std::size_t f : subset)
            if (f == 0) return 0.0;
        return 0.5;
    };
    const SelectionReport r = forward_select(ds, evaluator, 0.5);
    REQUIRE(r.kept.size() == 1);
    CHECK(r.kept[0] == 0);
    CHECK(r.history.size() == 1);
    CHECK(r.history[0].value == 0.0);
}

TEST_CASE("forward selection returns empty when nothing passes the gate") {
    // regenerate columns until every feature fails the cutoff, then expect
    // an empty pool and no selections, across seeds
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Rng rng(seed);
        const std::size_t n = 30, f = 12;
        LabeledDataset ds;
        ds.x = Matrix(n, f);
        ds.labels.resize(n);
        for (std::size_t i = 0; i < n; ++i) ds.labels[i] = i % 2;
        for (std::size_t c = 0; c < f; ++c) {
            while (true) {
                std::vector<double> col(n);
                for (double& v : col) v = rng.normal();
                for (std::size_t i = 0; i < n; ++i) ds.x(i, c) = col[i];
                std::vector<double> a, b;
                for (std::size_t i = 0; i < n; ++i)
                    (ds.labels[i] == 0 ? a : b).push_back(col[i]);
                if (pooled_ttest(a, b).p >= 0.1) break;
            }
        }
        int calls = 0;
        const SelectionReport r = forward_select(
            ds, [&calls](const std::vector<std::size_t>&) { ++calls; return 0.5; }, 0.1);
        CHECK(r.kept.empty());
        CHECK(r.empty_pool);
        CHECK(calls == 0);
    }
}

TEST_CASE("forward selection keeps one of two duplicate columns") {
    const LabeledDataset ds = make_dataset(
        {{0.0, 0.0}, {0.1, 0.1}, {1.0, 1.0}, {0.9, 0.9}}, {0, 0, 1, 1});
    const auto evaluator = [](const std::vector<std::size_t>& subset) {
        return subset.empty() ? 0.5 : 0.1;  // any nonempty subset scores the same
    };
    const SelectionReport r = forward_select(ds, evaluator, 0.9);
    REQUIRE(r.kept.size() == 1);
    CHECK(r.kept[0] == 0);  // tie-break by lower index
}

TEST_CASE("forward selection error history is non-increasing") {
    Rng rng(9);
    const std::size_t n = 40;
    LabeledDataset ds;
    ds.x = Matrix(n, 6);
    ds.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        ds.labels[i] = static_cast<int>(i % 2);
        for (std::size_t c = 0; c < 6; ++c)
            ds.x(i, c) = rng.normal(ds.labels[i] * 0.5 * (c % 3), 1.0);
    }
    // noisy evaluator driven by subset composition, still deterministic
    const auto evaluator = [&ds](const std::vector<std::size_t>& subset) {
        double err = 0.6;
        for (std::size_t f : subset) err -= 0.05 * ((f % 3) + 1);
        return std::max(err, 0.0);
    };
    const SelectionReport r = forward_select(ds, evaluator, 1.0);
    for (std::size_t i = 1; i < r.history.size(); ++i)
        CHECK(r.history[i].value <= r.history[i - 1].value);
}

TEST_CASE("svm_rfe keeps the label-determining feature") {
    int hits = 0;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        Rng rng(seed);
        const std::size_t n = 40;
        LabeledDataset ds;
        ds.x = Matrix(n, 2);
        ds.labels.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const int label = static_cast<int>(i % 2);
            ds.labels[i] = label;
            ds.x(i, 0) = label == 1 ? rng.uniform(0.6, 1.0) : rng.uniform(0.0, 0.4);
            ds.x(i, 1) = rng.uniform();  // iid noise
        }
        const SelectionReport r = svm_rfe(ds, {}, 1);
        REQUIRE(r.kept.size() == 1);
        if (r.kept[0] == 0) ++hits;
    }
    CHECK(hits == 50);
}

TEST_CASE("svm_rfe with target equal to feature count does no training") {
    // a zero pair-update budget makes any SVM training throw, so finishing
    // proves no machine was trained
    LabeledDataset ds =
        make_dataset({{0.0, 1.0}, {0.5, 0.2}, {1.0, 0.1}, {0.8, 0.9}}, {0, 0, 1, 1});
    RfeOptions untrainable;
    untrainable.tol = 1e-9;
    untrainable.max_pair_updates = 0;
    const SelectionReport r = svm_rfe(ds, untrainable, 2);
    CHECK(r.kept == std::vector<std::size_t>{0, 1});
    CHECK(r.history.empty());
    // with one elimination required the same options must throw
    CHECK_THROWS_AS(svm_rfe(ds, untrainable, 1), ConvergenceError);
}

TEST_CASE("svm_rfe tie-break eliminates the higher duplicate first") {
    Rng rng(3);
    const std::size_t n = 30;
    LabeledDataset ds;
    ds.x = Matrix(n, 2);
    ds.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int label = static_cast<int>(i % 2);
        ds.labels[i] = label;
        const double v = label == 1 ? rng.uniform(0.6, 1.0) : rng.uniform(0.0, 0.4);
        ds.x(i, 0) = v;
        ds.x(i, 1) = v;  // exact duplicate column
    }
    const SelectionReport r = svm_rfe(ds, {}, 1);
    REQUIRE(r.kept.size() == 1);
    CHECK(r.kept[0] == 0);
    CHECK(r.history[0].feature == 1);
}

TEST_CASE("svm_rfe exact-bound mode also keeps the informative feature") {
    Rng rng(13);
    const std::size_t n = 30;
    LabeledDataset ds;
    ds.x = Matrix(n, 3);
    ds.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int label = static_cast<int>(i % 2);
        ds.labels[i] = label;
        ds.x(i, 0) = label == 1 ? rng.uniform(0.7, 1.0) : rng.uniform(0.0, 0.3);
        ds.x(i, 1) = rng.uniform();
        ds.x(i, 2) = rng.uniform();
    }
    RfeOptions opt;
    opt.exact_bound = true;
    const SelectionReport r = svm_rfe(ds, opt, 1);
    REQUIRE(r.kept.size() == 1);
    CHECK(r.kept[0] == 0);
}

TEST_CASE("hard-margin planted feature survives past all noise features") {
    int ok = 0;
    const int trials = 100;
    for (int trial = 0; trial < trials; ++trial) {
        Rng rng(1000 + trial);
        const std::size_t n = 36, f = 8;
        LabeledDataset ds;
        ds.x = Matrix(n, f);
        ds.labels.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const int label = static_cast<int>(i % 2);
            ds.labels[i] = label;
            ds.x(i, 0) = label == 1 ? rng.uniform(0.75, 1.0) : rng.uniform(0.0, 0.25);
            for (std::size_t c = 1; c < f; ++c) ds.x(i, c) = rng.uniform();
        }
        const SelectionReport r = svm_rfe(ds, {}, 1);
        if (r.kept.size() == 1 && r.kept[0] == 0) ++ok;
    }
    CHECK(ok >= 95);
}

TEST_CASE("svm_rfe validates target range") {
    const LabeledDataset ds = make_dataset({{0.0, 1.0}, {1.0, 0.0}}, {0, 1});
    CHECK_THROWS_AS(svm_rfe(ds, {}, 0), InvalidArgument);
    CHECK_THROWS_AS(svm_rfe(ds, {}, 3), InvalidArgument);
}

TEST_CASE("normalize_columns scales, records ranges and extrapolates") {
    const LabeledDataset ds =
        make_dataset({{2.0, 7.0}, {4.0, 7.0}, {6.0, 7.0}}, {0, 0, 1});
    const auto [scaled, scaling] = normalize_columns(ds);
    CHECK(scaled.x(0, 0) == 0.0);
    CHECK(scaled.x(1, 0) == doctest::Approx(0.5));
    CHECK(scaled.x(2, 0) == 1.0);
    // constant column maps to zero with range (c, c)
    CHECK(scaled.x(0, 1) == 0.0);
    CHECK(scaling.ranges[1].first == 7.0);
    CHECK(scaling.ranges[1].second == 7.0);
    // extrapolation is allowed
    CHECK(scaling.apply(0, 8.0) == doctest::Approx(1.5));
}

TEST_CASE("selection report serialization") {
    SelectionReport r;
    r.kept = {1};
    r.scores = {0.0, 2.5};
    r.p_values = {1.0, 0.01};
    r.history = {{1, 0.125}};
    const std::string csv = selection_report_csv(r);
    CHECK(csv == "step,feature,score,p,error\n1,1,2.5,0.01,0.125\n");
    const std::string text = selection_report_text(r, {"alpha", "beta"});
    CHECK(text.find("beta") != std::string::npos);
}
