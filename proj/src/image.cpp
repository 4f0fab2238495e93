#include "medpipe/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "medpipe/errors.hpp"

namespace medpipe {

std::size_t RegionMask::count() const {
    return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

namespace {

[[noreturn]] void pgm_fail(const std::string& path, const std::string& what, std::size_t offset) {
    throw IoError(path + ": " + what + " (byte " + std::to_string(offset) + ")");
}

struct PgmCursor {
    const std::string& path;
    const std::string& buf;
    std::size_t pos = 0;

    bool eof() const { return pos >= buf.size(); }

    void skip_header_space() {
        while (!eof()) {
            const char c = buf[pos];
            if (c == '#') {
                while (!eof() && buf[pos] != '\n') ++pos;
            } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                ++pos;
            } else {
                break;
            }
        }
    }

    long read_header_int(const char* name) {
        skip_header_space();
        if (eof()) pgm_fail(path, std::string("truncated header, missing ") + name, pos);
        const std::size_t start = pos;
        long value = 0;
        bool any = false;
        while (!eof() && buf[pos] >= '0' && buf[pos] <= '9') {
            value = value * 10 + (buf[pos] - '0');
            if (value > 1'000'000'000L) pgm_fail(path, std::string(name) + " out of range", start);
            ++pos;
            any = true;
        }
        if (!any) pgm_fail(path, std::string("expected integer for ") + name, start);
        return value;
    }
};

}  // namespace

GrayImage load_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path + ": cannot open file");
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    PgmCursor cur{path, buf};
    if (buf.size() < 2) pgm_fail(path, "truncated header, missing magic number", 0);
    const char m0 = buf[0];
    const char m1 = buf[1];
    if (m0 != 'P' || (m1 != '2' && m1 != '5'))
        pgm_fail(path, "unsupported magic number", 0);
    const bool binary = (m1 == '5');
    cur.pos = 2;

    const long width = cur.read_header_int("width");
    const long height = cur.read_header_int("height");
    const std::size_t maxval_at = cur.pos;
    const long maxval = cur.read_header_int("maxval");
    if (width <= 0 || height <= 0)
        pgm_fail(path, "invalid dimensions", 2);
    if (maxval <= 0) pgm_fail(path, "invalid maxval", maxval_at);
    if (maxval > 65535) pgm_fail(path, "maxval exceeds 65535", maxval_at);

    GrayImage img(static_cast<int>(width), static_cast<int>(height));
    const double scale = 1.0 / static_cast<double>(maxval);
    const std::size_t n = img.size();

    if (binary) {
        // Single whitespace byte separates maxval from the payload.
        if (cur.eof()) pgm_fail(path, "truncated payload", cur.pos);
        ++cur.pos;
        const int bytes_per_sample = maxval < 256 ? 1 : 2;
        for (std::size_t i = 0; i < n; ++i) {
            if (cur.pos + bytes_per_sample > buf.size())
                pgm_fail(path, "truncated payload", cur.pos);
            long v = static_cast<unsigned char>(buf[cur.pos]);
            if (bytes_per_sample == 2)
                v = (v << 8) | static_cast<unsigned char>(buf[cur.pos + 1]);
            if (v > maxval) pgm_fail(path, "sample exceeds maxval", cur.pos);
            img.pixels[i] = static_cast<double>(v) * scale;
            cur.pos += bytes_per_sample;
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t at = cur.pos;
            long v = 0;
            try {
                v = cur.read_header_int("sample");
            } catch (const IoError&) {
                pgm_fail(path, "truncated payload", at);
            }
            if (v > maxval) pgm_fail(path, "sample exceeds maxval", at);
            img.pixels[i] = static_cast<double>(v) * scale;
        }
    }
    return img;
}

void save_pgm(const std::string& path, const GrayImage& img, int maxval) {
    if (maxval < 1 || maxval > 255)
        throw InvalidArgument("save_pgm: maxval must be in [1, 255]");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(path + ": cannot open file for writing");
    out << "P5\n" << img.width << " " << img.height << "\n" << maxval << "\n";
    for (double p : img.pixels) {
        const double clamped = std::clamp(p, 0.0, 1.0);
        out.put(static_cast<char>(std::lround(clamped * maxval)));
    }
    if (!out) throw IoError(path + ": write failed");
}

void save_mask_pgm(const std::string& path, const RegionMask& mask) {
    GrayImage img(mask.width, mask.height);
    for (std::size_t i = 0; i < img.size(); ++i) img.pixels[i] = mask.bits[i] ? 1.0 : 0.0;
    save_pgm(path, img, 255);
}

RegionMask load_mask_pgm(const std::string& path) {
    const GrayImage img = load_pgm(path);
    RegionMask mask(img.width, img.height);
    for (std::size_t i = 0; i < img.size(); ++i) mask.bits[i] = img.pixels[i] > 0.5 ? 1 : 0;
    return mask;
}

GrayImage minmax_normalize(const GrayImage& img) {
    if (img.pixels.empty()) throw InvalidArgument("minmax_normalize: empty image");
    const auto [lo_it, hi_it] = std::minmax_element(img.pixels.begin(), img.pixels.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    GrayImage out(img.width, img.height);
    if (hi == lo) return out;
    // element-wise division keeps the operation exactly idempotent: the max
    // maps to 1.0 and a second pass divides by (1 - 0)
    const double range = hi - lo;
    for (std::size_t i = 0; i < img.size(); ++i) out.pixels[i] = (img.pixels[i] - lo) / range;
    return out;
}

GrayImage gaussian_blur(const GrayImage& img, double sigma) {
    if (!(sigma > 0.0)) throw InvalidArgument("gaussian_blur: sigma must be positive");
    if (img.pixels.empty()) throw InvalidArgument("gaussian_blur: empty image");

    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int k = -radius; k <= radius; ++k) {
        const double w = std::exp(-(static_cast<double>(k) * k) / (2.0 * sigma * sigma));
        kernel[static_cast<std::size_t>(k + radius)] = w;
        sum += w;
    }
    for (double& w : kernel) w /= sum;

    const int w = img.width;
    const int h = img.height;
    GrayImage tmp(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k) {
                const int xx = std::clamp(x + k, 0, w - 1);
                acc += kernel[static_cast<std::size_t>(k + radius)] * img.at(y, xx);
            }
            tmp.at(y, x) = acc;
        }
    }
    GrayImage out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k) {
                const int yy = std::clamp(y + k, 0, h - 1);
                acc += kernel[static_cast<std::size_t>(k + radius)] * tmp.at(yy, x);
            }
            out.at(y, x) = acc;
        }
    }
    return out;
}

GrayImage sobel_edges(const GrayImage& img) {
    if (img.width < 3 || img.height < 3)
        throw InvalidArgument("sobel_edges: image must be at least 3x3");
    GrayImage mag(img.width, img.height, 0.0);
    for (int y = 1; y < img.height - 1; ++y) {
        for (int x = 1; x < img.width - 1; ++x) {
            // paired differences cancel exactly on constant input
            const double gx = (img.at(y - 1, x + 1) - img.at(y - 1, x - 1)) +
                              2.0 * (img.at(y, x + 1) - img.at(y, x - 1)) +
                              (img.at(y + 1, x + 1) - img.at(y + 1, x - 1));
            const double gy = (img.at(y + 1, x - 1) - img.at(y - 1, x - 1)) +
                              2.0 * (img.at(y + 1, x) - img.at(y - 1, x)) +
                              (img.at(y + 1, x + 1) - img.at(y - 1, x + 1));
            mag.at(y, x) = std::sqrt(gx * gx + gy * gy);
        }
    }
    return minmax_normalize(mag);
}

namespace {

constexpr int kOtsuBins = 256;

int intensity_bin(double p) {
    const int b = static_cast<int>(std::floor(std::clamp(p, 0.0, 1.0) * kOtsuBins));
    return std::min(b, kOtsuBins - 1);
}

}  // namespace

int otsu_threshold_bin(const GrayImage& img) {
    if (img.pixels.empty()) throw InvalidArgument("otsu_threshold_bin: empty image");
    std::vector<long> hist(kOtsuBins, 0);
    for (double p : img.pixels) ++hist[static_cast<std::size_t>(intensity_bin(p))];

    const double total = static_cast<double>(img.size());
    double weighted_total = 0.0;
    for (int i = 0; i < kOtsuBins; ++i) weighted_total += static_cast<double>(i) * hist[i];

    int best_t = -1;
    double best_score = -1.0;
    double w0 = 0.0;
    double sum0 = 0.0;
    for (int t = 0; t < kOtsuBins - 1; ++t) {
        w0 += static_cast<double>(hist[t]);
        sum0 += static_cast<double>(t) * hist[t];
        const double w1 = total - w0;
        if (w0 <= 0.0 || w1 <= 0.0) continue;
        const double mu0 = sum0 / w0;
        const double mu1 = (weighted_total - sum0) / w1;
        const double score = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
        if (score > best_score) {
            best_score = score;
            best_t = t;
        }
    }
    return best_t;
}

RegionMask threshold_segment(const GrayImage& img) {
    const int t = otsu_threshold_bin(img);
    RegionMask mask(img.width, img.height);
    if (t < 0) {
        // Constant image: include only the first brightest pixel.
        const auto it = std::max_element(img.pixels.begin(), img.pixels.end());
        mask.bits[static_cast<std::size_t>(it - img.pixels.begin())] = 1;
        return mask;
    }
    for (std::size_t i = 0; i < img.size(); ++i)
        mask.bits[i] = intensity_bin(img.pixels[i]) > t ? 1 : 0;
    return mask;
}

RegionMask auto_segment(const GrayImage& normalized, double blur_sigma) {
    return threshold_segment(gaussian_blur(normalized, blur_sigma));
}

}  // namespace medpipe
