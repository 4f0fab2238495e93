#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "medpipe/dataset.hpp"
#include "medpipe/errors.hpp"
#include "medpipe/eval.hpp"
#include "medpipe/model_io.hpp"
#include "medpipe/pipeline.hpp"
#include "medpipe/synth.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitIo = 2;
constexpr int kExitConfig = 3;
constexpr int kExitNumeric = 4;
constexpr int kExitModel = 5;

medpipe::PipelineConfig load_config(const std::string& path) {
    if (path.empty()) return {};
    return medpipe::parse_config_file(path);
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw medpipe::IoError(path + ": cannot open file for writing");
    out << text;
    if (!out) throw medpipe::IoError(path + ": write failed");
}

int cmd_extract(const std::string& manifest_path, const std::string& config_path,
                const std::string& out_path, int jobs) {
    const medpipe::PipelineConfig cfg = load_config(config_path);
    medpipe::ExtractionConfig extraction;
    extraction.glcm_levels = cfg.glcm_levels;
    const medpipe::Manifest manifest = medpipe::load_manifest(manifest_path);
    if (manifest.rows.empty())
        throw medpipe::IoError(manifest_path + ": manifest has no rows");
    const medpipe::LabeledDataset ds =
        medpipe::extract_features(manifest, extraction, jobs);
    medpipe::write_feature_csv(out_path, ds);
    std::cout << "wrote " << ds.samples() << " rows x " << ds.features()
              << " features to " << out_path << "\n";
    return kExitOk;
}

int cmd_train(const std::string& features_path, const std::string& config_path,
              const std::string& out_path, std::optional<std::uint64_t> seed) {
    medpipe::PipelineConfig cfg = load_config(config_path);
    if (seed) cfg.seed = *seed;
    const medpipe::LabeledDataset ds = medpipe::read_feature_csv(features_path);
    if (ds.labels.empty())
        throw medpipe::ConfigError(features_path + ": training needs a label column");
    medpipe::SelectionReport report;
    const medpipe::PipelineModel model = medpipe::fit_pipeline(ds, cfg, &report);
    medpipe::save_model(out_path, model);
    if (model.has_selection)
        write_text(out_path + ".selection.csv", medpipe::selection_report_csv(report));
    std::cout << medpipe::pipeline_report(model, cfg, ds.feature_names,
                                          model.has_selection ? &report : nullptr);
    std::cout << "model written to " << out_path << "\n";
    return kExitOk;
}

int cmd_predict(const std::string& model_path, const std::string& input_path,
                const std::string& config_path, const std::string& out_path, int jobs) {
    const medpipe::PipelineModel model = medpipe::load_model(model_path);

    medpipe::LabeledDataset ds;
    std::vector<std::string> row_ids;
    const bool is_csv = input_path.size() >= 4 &&
                        input_path.compare(input_path.size() - 4, 4, ".csv") == 0;
    if (is_csv) {
        ds = medpipe::read_feature_csv(input_path);
        for (std::size_t i = 0; i < ds.samples(); ++i) row_ids.push_back(std::to_string(i));
    } else {
        const medpipe::PipelineConfig cfg = load_config(config_path);
        medpipe::ExtractionConfig extraction;
        extraction.glcm_levels = cfg.glcm_levels;
        const medpipe::Manifest manifest = medpipe::load_manifest(input_path);
        ds = medpipe::extract_features(manifest, extraction, jobs);
        for (const auto& row : manifest.rows) row_ids.push_back(row.image_path);
    }

    std::string text = "id,predicted";
    for (const std::string& label : model.label_names) text += ",dv_" + label;
    text += "\n";
    for (std::size_t r = 0; r < ds.samples(); ++r) {
        std::vector<double> decisions;
        const int cls = medpipe::pipeline_predict(model, ds.x.row(r), &decisions);
        text += row_ids[r];
        text += ',';
        text += cls < static_cast<int>(model.label_names.size())
                    ? model.label_names[cls]
                    : std::to_string(cls);
        for (double d : decisions) {
            text += ',';
            text += medpipe::format_real(d);
        }
        text += '\n';
    }
    write_text(out_path, text);
    return kExitOk;
}

int cmd_evaluate(const std::string& features_path, const std::string& config_path,
                 std::optional<int> k, std::optional<std::uint64_t> seed,
                 const std::string& out_path) {
    medpipe::PipelineConfig cfg = load_config(config_path);
    if (k) cfg.folds = *k;
    if (seed) cfg.seed = *seed;
    const medpipe::LabeledDataset ds = medpipe::read_feature_csv(features_path);
    if (ds.labels.empty())
        throw medpipe::ConfigError(features_path + ": evaluation needs a label column");

    const medpipe::CrossValResult cv =
        medpipe::cross_validate(ds, cfg, cfg.folds, cfg.seed);
    const std::vector<medpipe::ComparisonRow> rows =
        medpipe::compare_methods(ds, cfg, cfg.folds, cfg.seed);
    std::string text = "pipeline: " + medpipe::pipeline_to_string(cfg) + "\n";
    text += medpipe::format_cross_validation(cv);
    text += "\n";
    text += medpipe::format_comparison_table(rows);
    text += "\ncsv:\n";
    text += medpipe::format_comparison_csv(rows);
    write_text(out_path, text);
    return kExitOk;
}

int cmd_synth(const std::string& out_dir, int classes, int per_class, int width, int height,
              double separation, std::uint64_t seed) {
    medpipe::SynthConfig cfg;
    cfg.classes = classes;
    cfg.per_class = per_class;
    cfg.width = width;
    cfg.height = height;
    cfg.separation = separation;
    cfg.seed = seed;
    const std::string manifest = medpipe::generate_synthetic_dataset(out_dir, cfg);
    std::cout << "manifest written to " << manifest << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"grayscale image classification pipeline: feature extraction, "
                 "selection, PCA/LDA reduction and SVM training"};
    app.require_subcommand(1);

    std::string manifest_path, features_path, model_path, input_path;
    std::string config_path, out_path, out_dir;
    int jobs = 1;
    std::optional<int> k_opt;
    std::optional<std::uint64_t> seed_opt;

    auto* extract = app.add_subcommand("extract", "extract features from a manifest of images");
    extract->add_option("manifest", manifest_path, "manifest file (image,mask,label rows)")
        ->required();
    extract->add_option("--config", config_path, "pipeline config file");
    extract->add_option("--out", out_path, "output feature csv")->required();
    extract->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);

    auto* train = app.add_subcommand("train", "fit the configured pipeline on a feature csv");
    train->add_option("features", features_path, "labeled feature csv")->required();
    train->add_option("--config", config_path, "pipeline config file");
    train->add_option("--out", out_path, "output model file")->required();
    train->add_option("--seed", seed_opt, "override config seed");

    auto* predict = app.add_subcommand("predict", "predict labels with a trained model");
    predict->add_option("model", model_path, "model file")->required();
    predict->add_option("input", input_path, "feature csv or manifest")->required();
    predict->add_option("--config", config_path, "config (extraction params for manifests)");
    predict->add_option("--out", out_path, "output predictions csv");
    predict->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);

    auto* evaluate = app.add_subcommand(
        "evaluate", "cross-validate the configured pipeline and compare against KNN");
    evaluate->add_option("features", features_path, "labeled feature csv")->required();
    evaluate->add_option("--config", config_path, "pipeline config file");
    evaluate->add_option("--k", k_opt, "fold count");
    evaluate->add_option("--seed", seed_opt, "override config seed");
    evaluate->add_option("--out", out_path, "write the report here instead of stdout");

    int classes = 3, per_class = 40, width = 64, height = 64;
    double separation = 0.6;
    std::uint64_t synth_seed = 0;
    auto* synth = app.add_subcommand("synth", "generate a synthetic labeled image set");
    synth->add_option("--out", out_dir, "output directory")->required();
    synth->add_option("--classes", classes, "class count");
    synth->add_option("--per-class", per_class, "images per class");
    synth->add_option("--width", width, "image width");
    synth->add_option("--height", height, "image height");
    synth->add_option("--separation", separation, "class separation in [0, 1]");
    synth->add_option("--seed", synth_seed, "rng seed");

    try {
        app.parse(argc, argv);
        if (extract->parsed())
            return cmd_extract(manifest_path, config_path, out_path, jobs);
        if (train->parsed()) return cmd_train(features_path, config_path, out_path, seed_opt);
        if (predict->parsed())
            return cmd_predict(model_path, input_path, config_path, out_path, jobs);
        if (evaluate->parsed())
            return cmd_evaluate(features_path, config_path, k_opt, seed_opt, out_path);
        if (synth->parsed())
            return cmd_synth(out_dir, classes, per_class, width, height, separation,
                             synth_seed);
        return kExitConfig;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    } catch (const medpipe::ModelFormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitModel;
    } catch (const medpipe::ConvergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const medpipe::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const medpipe::InvalidArgument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const medpipe::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
