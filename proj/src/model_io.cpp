#include "medpipe/model_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include "medpipe/errors.hpp"

namespace medpipe {

std::uint32_t crc32_ieee(const void* data, std::size_t len) {
    static const auto table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    std::uint32_t crc = 0xFFFFFFFFu;
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) crc = table[(crc ^ p[i]) & 0xFFu] ^ (crc >> 8);
    return crc ^ 0xFFFFFFFFu;
}

namespace {

constexpr char kMagic[4] = {'T', 'P', 'M', '1'};
constexpr std::uint32_t kVersion = 1;
enum StageId : std::uint32_t {
    kStageScaling = 1,
    kStageSelection = 2,
    kStagePca = 3,
    kStageLda = 4,
    kStageSvm = 5,
};

struct Writer {
    std::string bytes;

    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        bytes.append(s);
    }
    void matrix(const Matrix& m) {
        u32(static_cast<std::uint32_t>(m.rows()));
        u32(static_cast<std::uint32_t>(m.cols()));
        for (double v : m.data()) f64(v);
    }
};

struct Reader {
    const std::string& bytes;
    const std::string& path;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > bytes.size())
            throw ModelFormatError(path + ": truncated model file");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
        pos += 8;
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str() {
        const std::uint32_t n = u32();
        need(n);
        std::string s = bytes.substr(pos, n);
        pos += n;
        return s;
    }
    Matrix matrix() {
        const std::uint32_t r = u32();
        const std::uint32_t c = u32();
        if (static_cast<std::uint64_t>(r) * c > 100'000'000ull)
            throw ModelFormatError(path + ": implausible matrix size");
        Matrix m(r, c);
        for (double& v : m.data()) v = f64();
        return m;
    }
};

std::string encode_svm(const SvmMulticlassModel& svm) {
    Writer w;
    w.u32(static_cast<std::uint32_t>(svm.machines.size()));
    w.u32(static_cast<std::uint32_t>(svm.dim));
    w.u32(static_cast<std::uint32_t>(svm.class_labels.size()));
    for (const std::string& l : svm.class_labels) w.str(l);
    for (const SvmBinaryModel& m : svm.machines) {
        w.u32(static_cast<std::uint32_t>(m.kernel.kind));
        w.f64(m.kernel.gamma);
        w.u32(static_cast<std::uint32_t>(m.kernel.degree));
        w.f64(m.kernel.coef);
        w.f64(m.C);
        w.f64(m.bias);
        w.u32(static_cast<std::uint32_t>(m.alphas.size()));
        for (double a : m.alphas) w.f64(a);
        for (double y : m.sv_labels) w.f64(y);
        w.matrix(m.support_vectors);
    }
    return std::move(w.bytes);
}

SvmMulticlassModel decode_svm(Reader& r) {
    SvmMulticlassModel svm;
    const std::uint32_t machines = r.u32();
    svm.dim = r.u32();
    const std::uint32_t label_count = r.u32();
    for (std::uint32_t i = 0; i < label_count; ++i) svm.class_labels.push_back(r.str());
    for (std::uint32_t k = 0; k < machines; ++k) {
        SvmBinaryModel m;
        const std::uint32_t kind = r.u32();
        if (kind > 2) throw ModelFormatError(r.path + ": unknown kernel kind");
        m.kernel.kind = static_cast<KernelKind>(kind);
        m.kernel.gamma = r.f64();
        m.kernel.degree = static_cast<int>(r.u32());
        m.kernel.coef = r.f64();
        m.C = r.f64();
        m.bias = r.f64();
        const std::uint32_t sv = r.u32();
        m.alphas.resize(sv);
        for (double& a : m.alphas) a = r.f64();
        m.sv_labels.resize(sv);
        for (double& y : m.sv_labels) y = r.f64();
        m.support_vectors = r.matrix();
        if (m.support_vectors.rows() != sv || m.support_vectors.cols() != svm.dim)
            throw ModelFormatError(r.path + ": inconsistent support vector block");
        svm.machines.push_back(std::move(m));
        svm.class_ids.push_back(static_cast<int>(k));
    }
    return svm;
}

}  // namespace

void save_model(const std::string& path, const PipelineModel& model) {
    Writer body;
    std::vector<std::pair<std::uint32_t, std::string>> stages;

    {
        Writer w;
        w.u32(static_cast<std::uint32_t>(model.scaling.ranges.size()));
        for (const auto& [lo, hi] : model.scaling.ranges) {
            w.f64(lo);
            w.f64(hi);
        }
        stages.emplace_back(kStageScaling, std::move(w.bytes));
    }
    if (model.has_selection) {
        Writer w;
        w.u32(static_cast<std::uint32_t>(model.selected.size()));
        for (std::size_t idx : model.selected) w.u32(static_cast<std::uint32_t>(idx));
        stages.emplace_back(kStageSelection, std::move(w.bytes));
    }
    if (model.pca) {
        Writer w;
        w.u32(static_cast<std::uint32_t>(model.pca->in_dim()));
        w.u32(static_cast<std::uint32_t>(model.pca->out_dim()));
        for (double v : model.pca->mean) w.f64(v);
        for (double v : model.pca->eigenvalues) w.f64(v);
        w.matrix(model.pca->basis);
        stages.emplace_back(kStagePca, std::move(w.bytes));
    }
    if (model.lda) {
        Writer w;
        w.u32(static_cast<std::uint32_t>(model.lda->in_dim()));
        w.u32(static_cast<std::uint32_t>(model.lda->out_dim()));
        for (double v : model.lda->mean) w.f64(v);
        for (double v : model.lda->eigenvalues) w.f64(v);
        w.matrix(model.lda->basis);
        w.matrix(model.lda->class_means);
        stages.emplace_back(kStageLda, std::move(w.bytes));
    }
    stages.emplace_back(kStageSvm, encode_svm(model.svm));

    body.u32(kVersion);
    body.u32(static_cast<std::uint32_t>(stages.size()));
    for (const auto& [id, payload] : stages) {
        body.u32(id);
        body.u64(payload.size());
        body.bytes.append(payload);
    }

    Writer out;
    out.bytes.assign(kMagic, sizeof kMagic);
    out.bytes.append(body.bytes);
    out.u32(crc32_ieee(body.bytes.data(), body.bytes.size()));

    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError(path + ": cannot open file for writing");
    f.write(out.bytes.data(), static_cast<std::streamsize>(out.bytes.size()));
    if (!f) throw IoError(path + ": write failed");
}

PipelineModel load_model(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError(path + ": cannot open file");
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    if (bytes.size() < sizeof(kMagic) + 4 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
        throw ModelFormatError(path + ": bad magic bytes");
    const std::size_t body_len = bytes.size() - sizeof(kMagic) - 4;
    std::uint32_t stored_crc = 0;
    for (int i = 0; i < 4; ++i)
        stored_crc |= static_cast<std::uint32_t>(
                          static_cast<unsigned char>(bytes[sizeof(kMagic) + body_len + i]))
                      << (8 * i);
    const std::uint32_t actual_crc = crc32_ieee(bytes.data() + sizeof(kMagic), body_len);
    if (stored_crc != actual_crc)
        throw ModelFormatError(path + ": checksum mismatch (corrupt model file)");

    Reader r{bytes, path, sizeof(kMagic)};
    const std::uint32_t version = r.u32();
    if (version != kVersion)
        throw ModelFormatError(path + ": unsupported format version " + std::to_string(version));
    const std::uint32_t stage_count = r.u32();
    if (stage_count < 2 || stage_count > 5)
        throw ModelFormatError(path + ": implausible stage count");

    PipelineModel model;
    bool have_scaling = false, have_svm = false;
    std::uint32_t last_id = 0;
    for (std::uint32_t s = 0; s < stage_count; ++s) {
        const std::uint32_t id = r.u32();
        const std::uint64_t len = r.u64();
        if (id < kStageScaling || id > kStageSvm)
            throw ModelFormatError(path + ": unknown stage id " + std::to_string(id));
        if (id <= last_id) throw ModelFormatError(path + ": stage ids out of order");
        last_id = id;
        const std::size_t stage_end = r.pos + len;
        r.need(len);
        switch (id) {
            case kStageScaling: {
                const std::uint32_t n = r.u32();
                model.scaling.ranges.resize(n);
                for (auto& [lo, hi] : model.scaling.ranges) {
                    lo = r.f64();
                    hi = r.f64();
                }
                have_scaling = true;
                break;
            }
            case kStageSelection: {
                const std::uint32_t n = r.u32();
                model.has_selection = true;
                model.selected.resize(n);
                for (std::size_t& idx : model.selected) idx = r.u32();
                break;
            }
            case kStagePca: {
                PcaModel pca;
                const std::uint32_t in = r.u32();
                const std::uint32_t out = r.u32();
                pca.mean.resize(in);
                for (double& v : pca.mean) v = r.f64();
                pca.eigenvalues.resize(out);
                for (double& v : pca.eigenvalues) v = r.f64();
                pca.basis = r.matrix();
                if (pca.basis.rows() != in || pca.basis.cols() != out)
                    throw ModelFormatError(path + ": inconsistent pca block");
                model.pca = std::move(pca);
                break;
            }
            case kStageLda: {
                LdaModel lda;
                const std::uint32_t in = r.u32();
                const std::uint32_t out = r.u32();
                lda.mean.resize(in);
                for (double& v : lda.mean) v = r.f64();
                lda.eigenvalues.resize(out);
                for (double& v : lda.eigenvalues) v = r.f64();
                lda.basis = r.matrix();
                lda.class_means = r.matrix();
                if (lda.basis.rows() != in || lda.basis.cols() != out ||
                    lda.class_means.cols() != out)
                    throw ModelFormatError(path + ": inconsistent lda block");
                model.lda = std::move(lda);
                break;
            }
            case kStageSvm: {
                model.svm = decode_svm(r);
                have_svm = true;
                break;
            }
        }
        if (r.pos != stage_end)
            throw ModelFormatError(path + ": stage " + std::to_string(id) +
                                   " length does not match payload");
    }
    if (r.pos != bytes.size() - 4)
        throw ModelFormatError(path + ": trailing bytes after stages");
    if (!have_scaling || !have_svm)
        throw ModelFormatError(path + ": model must contain scaling and svm stages");

    model.label_names = model.svm.class_labels;

    // Cross-stage dimension checks.
    std::size_t dim = model.scaling.dim();
    if (model.has_selection) {
        for (std::size_t idx : model.selected)
            if (idx >= dim) throw ModelFormatError(path + ": selection index out of range");
        dim = model.selected.size();
    }
    if (model.pca) {
        if (model.pca->in_dim() != dim)
            throw ModelFormatError(path + ": pca input dimension mismatch");
        dim = model.pca->out_dim();
    }
    if (model.lda) {
        if (model.lda->in_dim() != dim)
            throw ModelFormatError(path + ": lda input dimension mismatch");
        dim = model.lda->out_dim();
    }
    if (model.svm.dim != dim)
        throw ModelFormatError(path + ": svm input dimension mismatch");
    return model;
}

}  // namespace medpipe
