#include "medpipe/features.hpp"

#include <algorithm>
#include <cmath>

#include "medpipe/errors.hpp"

namespace medpipe {

namespace {

std::vector<double> masked_values(const GrayImage& img, const RegionMask& mask) {
    if (img.width != mask.width || img.height != mask.height)
        throw InvalidArgument("feature extraction: image and mask dimensions differ");
    std::vector<double> v;
    v.reserve(mask.count());
    for (std::size_t i = 0; i < img.size(); ++i)
        if (mask.bits[i]) v.push_back(img.pixels[i]);
    return v;
}

int quantize(double p, int levels) {
    const int b = static_cast<int>(std::floor(std::clamp(p, 0.0, 1.0) * levels));
    return std::min(b, levels - 1);
}

}  // namespace

FeatureVector intensity_features(const GrayImage& img, const RegionMask& mask) {
    std::vector<double> v = masked_values(img, mask);
    if (v.empty()) throw InvalidArgument("intensity_features: empty mask");

    const double n = static_cast<double>(v.size());
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= n;

    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double x : v) {
        const double d = x - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;

    std::vector<double> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted[(sorted.size() - 1) / 2];

    const double skewness = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
    const double kurtosis = m2 > 0.0 ? m4 / (m2 * m2) : 0.0;

    FeatureVector f;
    f.push("intensity_mean", mean);
    f.push("intensity_variance", m2);
    f.push("intensity_stddev", std::sqrt(m2));
    f.push("intensity_median", median);
    f.push("intensity_skewness", skewness);
    f.push("intensity_kurtosis", kurtosis);
    return f;
}

GlcmMatrix glcm(const GrayImage& img, const RegionMask& mask, int levels,
                std::pair<int, int> offset) {
    if (levels < 2 || levels > 256)
        throw InvalidArgument("glcm: levels must be in [2, 256]");
    if (offset.first == 0 && offset.second == 0)
        throw InvalidArgument("glcm: offset must be nonzero");
    if (img.width != mask.width || img.height != mask.height)
        throw InvalidArgument("glcm: image and mask dimensions differ");

    const auto [dy, dx] = offset;
    Matrix counts(static_cast<std::size_t>(levels), static_cast<std::size_t>(levels), 0.0);
    double total = 0.0;
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            if (!mask.at(y, x)) continue;
            const int ny = y + dy;
            const int nx = x + dx;
            if (ny < 0 || ny >= img.height || nx < 0 || nx >= img.width) continue;
            if (!mask.at(ny, nx)) continue;
            const int a = quantize(img.at(y, x), levels);
            const int b = quantize(img.at(ny, nx), levels);
            counts(a, b) += 1.0;
            counts(b, a) += 1.0;
            total += 2.0;
        }
    }
    if (total == 0.0) throw InvalidArgument("empty GLCM: no valid pixel pairs");

    GlcmMatrix g;
    g.levels = levels;
    g.offset = offset;
    g.probs = counts;
    for (double& p : g.probs.data()) p /= total;
    return g;
}

FeatureVector texture_features(const GlcmMatrix& g) {
    const int n = g.levels;
    if (n < 2 || g.probs.rows() != static_cast<std::size_t>(n) ||
        g.probs.cols() != static_cast<std::size_t>(n))
        throw InvalidArgument("texture_features: invalid GLCM");

    std::vector<double> px(n, 0.0), py(n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            px[i] += g.probs(i, j);
            py[j] += g.probs(i, j);
        }
    double mu_x = 0.0, mu_y = 0.0;
    for (int i = 0; i < n; ++i) {
        mu_x += i * px[i];
        mu_y += i * py[i];
    }
    double var_x = 0.0, var_y = 0.0;
    for (int i = 0; i < n; ++i) {
        var_x += (i - mu_x) * (i - mu_x) * px[i];
        var_y += (i - mu_y) * (i - mu_y) * py[i];
    }
    const double sigma_xy = std::sqrt(var_x) * std::sqrt(var_y);

    double contrast = 0.0, correlation = 0.0, entropy = 0.0, energy = 0.0;
    double homogeneity = 0.0, cluster_shade = 0.0, ssq_variance = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double p = g.probs(i, j);
            if (p < 0.0) throw InvalidArgument("texture_features: negative probability");
            contrast += (i - j) * (i - j) * p;
            if (p > 0.0) entropy -= p * std::log2(p);
            energy += p * p;
            homogeneity += p / (1.0 + std::abs(i - j));
            const double c = i + j - mu_x - mu_y;
            cluster_shade += c * c * c * p;
            ssq_variance += (i - mu_x) * (i - mu_x) * p;
            if (sigma_xy > 0.0) correlation += (i - mu_x) * (j - mu_y) * p / sigma_xy;
        }
    }

    FeatureVector f;
    f.push("contrast", contrast);
    f.push("correlation", sigma_xy > 0.0 ? correlation : 0.0);
    f.push("entropy", entropy);
    f.push("energy", energy);
    f.push("homogeneity", homogeneity);
    f.push("cluster_shade", cluster_shade);
    f.push("ssq_variance", ssq_variance);
    return f;
}

FeatureVector shape_features(const RegionMask& mask) {
    const std::size_t area = mask.count();
    if (area == 0) throw InvalidArgument("shape_features: empty mask");

    long perimeter = 0;
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
            if (!mask.at(y, x)) continue;
            const int dys[4] = {-1, 1, 0, 0};
            const int dxs[4] = {0, 0, -1, 1};
            for (int k = 0; k < 4; ++k) {
                const int ny = y + dys[k];
                const int nx = x + dxs[k];
                if (ny < 0 || ny >= mask.height || nx < 0 || nx >= mask.width || !mask.at(ny, nx))
                    ++perimeter;
            }
        }
    }

    const double a = static_cast<double>(area);
    const double p = static_cast<double>(perimeter);
    constexpr double kPi = 3.14159265358979323846;
    const double circularity = 4.0 * kPi * a / (p * p);

    FeatureVector f;
    f.push("area", a);
    f.push("perimeter", p);
    f.push("circularity", circularity);
    f.push("irregularity", (p * p) / (4.0 * kPi * a));
    f.push("shape_index", p / (4.0 * std::sqrt(a)));
    return f;
}

FeatureVector extract_all(const GrayImage& img, const RegionMask& mask,
                          const ExtractionConfig& cfg) {
    FeatureVector out;
    out.append(intensity_features(img, mask));
    out.append(shape_features(mask));

    // 0, 45, 90, 135 degrees at distance 1; accumulation symmetry makes the
    // sign convention irrelevant.
    const std::pair<int, int> offsets[4] = {{0, 1}, {-1, 1}, {-1, 0}, {-1, -1}};
    for (int levels : cfg.glcm_levels) {
        FeatureVector sum;
        int used = 0;
        for (const auto& off : offsets) {
            GlcmMatrix g;
            try {
                g = glcm(img, mask, levels, off);
            } catch (const InvalidArgument&) {
                continue;  // offset with no in-mask pairs
            }
            const FeatureVector t = texture_features(g);
            if (sum.size() == 0) {
                sum = t;
            } else {
                for (std::size_t i = 0; i < t.size(); ++i) sum.values[i] += t.values[i];
            }
            ++used;
        }
        if (used == 0)
            throw InvalidArgument("extract_all: no GLCM offset produced any pixel pair");
        const std::string prefix = "texture_l" + std::to_string(levels) + "_";
        for (std::size_t i = 0; i < sum.size(); ++i)
            out.push(prefix + sum.names[i], sum.values[i] / used);
    }

    for (double v : out.values)
        if (!std::isfinite(v)) throw Error("extract_all: non-finite feature value");
    return out;
}

}  // namespace medpipe
