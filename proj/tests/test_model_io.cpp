#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "medpipe/errors.hpp"
#include "medpipe/eval.hpp"
#include "medpipe/model_io.hpp"
#include "medpipe/rng.hpp"

using namespace medpipe;

namespace {

std::string temp_file(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
}

LabeledDataset training_fixture(Rng& rng, int per_class) {
    LabeledDataset ds;
    const int n = per_class * 3;
    ds.x = Matrix(n, 6);
    ds.labels.resize(n);
    ds.label_names = {"alpha", "beta", "gamma"};
    for (int k = 0; k < 3; ++k) {
        for (int i = 0; i < per_class; ++i) {
            const int r = k * per_class + i;
            ds.labels[r] = k;
            ds.x(r, 0) = rng.normal(2.0 * k, 0.3);
            ds.x(r, 1) = rng.normal(k == 1 ? 2.0 : 0.0, 0.3);
            for (int c = 2; c < 6; ++c) ds.x(r, c) = rng.uniform();
        }
    }
    for (int c = 0; c < 6; ++c) ds.feature_names.push_back("f" + std::to_string(c));
    return ds;
}

}  // namespace

TEST_CASE("model save/load round-trips byte-identically and predicts identically") {
    Rng rng(2);
    const LabeledDataset ds = training_fixture(rng, 12);
    PipelineConfig cfg;
    cfg.reduction = ReductionMode::pca_lda;
    cfg.selection = SelectionMode::rfe;
    cfg.rfe_target = 4;
    cfg.lda_dims = 2;
    const PipelineModel model = fit_pipeline(ds, cfg);

    const std::string p1 = temp_file("medpipe_model_a.tpm");
    const std::string p2 = temp_file("medpipe_model_b.tpm");
    save_model(p1, model);
    const PipelineModel loaded = load_model(p1);
    save_model(p2, loaded);
    CHECK(slurp(p1) == slurp(p2));

    for (std::size_t r = 0; r < ds.x.rows(); ++r) {
        std::vector<double> d1, d2;
        const int c1 = pipeline_predict(model, ds.x.row(r), &d1);
        const int c2 = pipeline_predict(loaded, ds.x.row(r), &d2);
        CHECK(c1 == c2);
        CHECK(d1 == d2);
    }
    CHECK(loaded.label_names == ds.label_names);
}

TEST_CASE("svm-only model stores just scaling and svm stages") {
    Rng rng(4);
    const LabeledDataset ds = training_fixture(rng, 8);
    PipelineConfig cfg;  // defaults: no selection, no reduction
    const PipelineModel model = fit_pipeline(ds, cfg);
    CHECK_FALSE(model.has_selection);
    CHECK_FALSE(model.pca.has_value());
    CHECK_FALSE(model.lda.has_value());

    const std::string path = temp_file("medpipe_model_svm_only.tpm");
    save_model(path, model);
    const PipelineModel loaded = load_model(path);
    CHECK_FALSE(loaded.has_selection);
    CHECK_FALSE(loaded.pca.has_value());
    CHECK_FALSE(loaded.lda.has_value());
    CHECK(loaded.svm.machines.size() == 3);
}

TEST_CASE("model loader rejects corruption") {
    Rng rng(6);
    const LabeledDataset ds = training_fixture(rng, 8);
    const PipelineModel model = fit_pipeline(ds, {});
    const std::string path = temp_file("medpipe_model_corrupt.tpm");
    save_model(path, model);
    const std::string good = slurp(path);

    const auto write = [&](const std::string& bytes) {
        std::ofstream out(path, std::ios::binary);
        out << bytes;
    };

    // truncation
    write(good.substr(0, good.size() - 7));
    CHECK_THROWS_AS(load_model(path), ModelFormatError);

    // bit flip in the middle -> checksum mismatch
    std::string flipped = good;
    flipped[good.size() / 2] = static_cast<char>(flipped[good.size() / 2] ^ 0x40);
    write(flipped);
    CHECK_THROWS_WITH_AS(load_model(path), doctest::Contains("checksum"), ModelFormatError);

    // bad magic
    std::string magic = good;
    magic[0] = 'X';
    write(magic);
    CHECK_THROWS_WITH_AS(load_model(path), doctest::Contains("magic"), ModelFormatError);

    CHECK_THROWS_AS(load_model(temp_file("medpipe_no_such_model.tpm")), IoError);
}

TEST_CASE("crc32 matches the standard test vector") {
    // IEEE CRC-32 of "123456789"
    CHECK(crc32_ieee("123456789", 9) == 0xCBF43926u);
}

TEST_CASE("model loader rejects unknown stage ids") {
    // minimal hand-built container: version 1, one stage with id 9
    std::string body;
    const auto u32 = [&body](std::uint32_t v) {
        for (int i = 0; i < 4; ++i) body.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    };
    const auto u64 = [&body](std::uint64_t v) {
        for (int i = 0; i < 8; ++i) body.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    };
    u32(1);  // version
    u32(2);  // stage count
    u32(1);  // scaling stage
    u64(4);
    u32(0);  // zero columns
    u32(9);  // unknown stage id
    u64(0);  // empty payload

    std::string bytes = "TPM1" + body;
    const std::uint32_t crc = crc32_ieee(body.data(), body.size());
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<char>((crc >> (8 * i)) & 0xFF));

    const std::string path = temp_file("medpipe_unknown_stage.tpm");
    std::ofstream(path, std::ios::binary) << bytes;
    CHECK_THROWS_WITH_AS(load_model(path), doctest::Contains("unknown stage id"),
                         ModelFormatError);
}
