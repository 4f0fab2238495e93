#include "medpipe/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "medpipe/errors.hpp"

namespace medpipe {

int LabeledDataset::class_count() const {
    int c = 0;
    for (int l : labels) c = std::max(c, l + 1);
    return c;
}

LabeledDataset LabeledDataset::select_columns(const std::vector<std::size_t>& cols) const {
    LabeledDataset out;
    out.labels = labels;
    out.label_names = label_names;
    out.x = Matrix(x.rows(), cols.size());
    for (std::size_t c = 0; c < cols.size(); ++c) {
        if (cols[c] >= x.cols()) throw InvalidArgument("select_columns: index out of range");
        if (!feature_names.empty()) out.feature_names.push_back(feature_names[cols[c]]);
        for (std::size_t r = 0; r < x.rows(); ++r) out.x(r, c) = x(r, cols[c]);
    }
    return out;
}

LabeledDataset LabeledDataset::select_rows(const std::vector<std::size_t>& rows) const {
    LabeledDataset out;
    out.feature_names = feature_names;
    out.label_names = label_names;
    out.x = Matrix(rows.size(), x.cols());
    out.labels.reserve(labels.empty() ? 0 : rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r] >= x.rows()) throw InvalidArgument("select_rows: index out of range");
        for (std::size_t c = 0; c < x.cols(); ++c) out.x(r, c) = x(rows[r], c);
        if (!labels.empty()) out.labels.push_back(labels[rows[r]]);
    }
    return out;
}

Matrix ColumnScaling::apply(const Matrix& m) const {
    if (m.cols() != ranges.size())
        throw InvalidArgument("scaling: expected " + std::to_string(ranges.size()) +
                              " features, got " + std::to_string(m.cols()));
    Matrix out(m.rows(), m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) = apply(c, m(r, c));
    return out;
}

std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    fields.push_back(cur);
    return fields;
}

std::string trimmed(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t')) --e;
    return s.substr(b, e - b);
}

double parse_real_field(const std::string& path, const std::string& field, std::size_t line_no) {
    const std::string t = trimmed(field);
    double v = 0.0;
    const auto* begin = t.data();
    const auto* end = t.data() + t.size();
    const auto res = std::from_chars(begin, end, v);
    if (res.ec != std::errc{} || res.ptr != end)
        throw IoError(path + ":" + std::to_string(line_no) + ": cannot parse value '" + t + "'");
    if (!std::isfinite(v))
        throw IoError(path + ":" + std::to_string(line_no) + ": non-finite value '" + t + "'");
    return v;
}

}  // namespace

void write_feature_csv(const std::string& path, const LabeledDataset& ds) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(path + ": cannot open file for writing");
    for (std::size_t c = 0; c < ds.feature_names.size(); ++c) {
        if (c) out << ',';
        out << ds.feature_names[c];
    }
    const bool labeled = !ds.labels.empty();
    if (labeled) out << ",label";
    out << '\n';
    for (std::size_t r = 0; r < ds.x.rows(); ++r) {
        for (std::size_t c = 0; c < ds.x.cols(); ++c) {
            if (c) out << ',';
            out << format_real(ds.x(r, c));
        }
        if (labeled) {
            const int id = ds.labels[r];
            out << ',' << (id < static_cast<int>(ds.label_names.size())
                               ? ds.label_names[id]
                               : std::to_string(id));
        }
        out << '\n';
    }
    if (!out) throw IoError(path + ": write failed");
}

LabeledDataset read_feature_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path + ": cannot open file");

    std::string line;
    if (!std::getline(in, line)) throw IoError(path + ": empty CSV");
    std::vector<std::string> header = split_csv_line(line);
    if (header.empty()) throw IoError(path + ": empty header");
    const bool labeled = trimmed(header.back()) == "label";
    const std::size_t n_features = header.size() - (labeled ? 1 : 0);
    if (n_features == 0) throw IoError(path + ": no feature columns");

    LabeledDataset ds;
    for (std::size_t c = 0; c < n_features; ++c) ds.feature_names.push_back(trimmed(header[c]));

    std::vector<double> values;
    std::vector<std::string> labels_raw;
    std::size_t rows = 0;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw IoError(path + ":" + std::to_string(line_no) + ": expected " +
                          std::to_string(header.size()) + " fields, got " +
                          std::to_string(fields.size()));
        for (std::size_t c = 0; c < n_features; ++c)
            values.push_back(parse_real_field(path, fields[c], line_no));
        if (labeled) labels_raw.push_back(trimmed(fields.back()));
        ++rows;
    }

    ds.x = Matrix(rows, n_features);
    ds.x.data() = std::move(values);
    if (labeled) {
        std::set<std::string> uniq(labels_raw.begin(), labels_raw.end());
        ds.label_names.assign(uniq.begin(), uniq.end());
        std::map<std::string, int> id;
        for (std::size_t i = 0; i < ds.label_names.size(); ++i)
            id[ds.label_names[i]] = static_cast<int>(i);
        for (const std::string& l : labels_raw) ds.labels.push_back(id[l]);
    }
    return ds;
}

Manifest load_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path + ": cannot open file");
    const std::filesystem::path base = std::filesystem::path(path).parent_path();

    Manifest m;
    std::string line;
    std::size_t line_no = 0;
    std::set<std::string> labels;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trimmed(line);
        if (t.empty() || t[0] == '#') continue;
        std::vector<std::string> fields = split_csv_line(t);
        if (fields.size() != 3)
            throw IoError(path + ":" + std::to_string(line_no) +
                          ": expected 'image,mask,label' with 3 fields, got " +
                          std::to_string(fields.size()));
        ManifestRow row;
        const auto resolve = [&](const std::string& p) {
            const std::filesystem::path fp(trimmed(p));
            return fp.is_absolute() ? fp.string() : (base / fp).string();
        };
        row.image_path = resolve(fields[0]);
        if (!trimmed(fields[1]).empty()) row.mask_path = resolve(fields[1]);
        row.label = trimmed(fields[2]);
        if (row.label.empty())
            throw IoError(path + ":" + std::to_string(line_no) + ": empty label");
        if (!std::filesystem::exists(row.image_path))
            throw IoError(path + ":" + std::to_string(line_no) + ": missing image file " +
                          row.image_path);
        if (!row.mask_path.empty() && !std::filesystem::exists(row.mask_path))
            throw IoError(path + ":" + std::to_string(line_no) + ": missing mask file " +
                          row.mask_path);
        labels.insert(row.label);
        m.rows.push_back(std::move(row));
    }
    m.label_names.assign(labels.begin(), labels.end());
    for (ManifestRow& row : m.rows) {
        const auto it = std::lower_bound(m.label_names.begin(), m.label_names.end(), row.label);
        row.label_id = static_cast<int>(it - m.label_names.begin());
    }
    return m;
}

}  // namespace medpipe
