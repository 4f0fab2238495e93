#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace medpipe {

// 2-D grayscale raster, row-major. Pixels sit in [0, 1] once normalized;
// loaders scale by the PGM maxval so values start there already.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<double> pixels;

    GrayImage() = default;
    GrayImage(int w, int h, double fill = 0.0)
        : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

    double& at(int y, int x) { return pixels[static_cast<std::size_t>(y) * width + x]; }
    double at(int y, int x) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
    std::size_t size() const { return pixels.size(); }
};

// Binary region-of-interest mask with the same dimensions as its image.
struct RegionMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;

    RegionMask() = default;
    RegionMask(int w, int h, bool fill = false)
        : width(w), height(h), bits(static_cast<std::size_t>(w) * h, fill ? 1 : 0) {}

    bool at(int y, int x) const {
        return bits[static_cast<std::size_t>(y) * width + x] != 0;
    }
    void set(int y, int x, bool v) {
        bits[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0;
    }
    std::size_t count() const;
};

// PGM (P2/P5) reader; maxval in [1, 65535]. Pixel values are scaled by
// 1/maxval. Malformed input raises IoError with the offending byte offset.
GrayImage load_pgm(const std::string& path);

// Writes binary P5 output, quantizing [0,1] to [0, maxval].
void save_pgm(const std::string& path, const GrayImage& img, int maxval = 255);

// Masks round-trip as 0/255 PGM; any pixel > 0.5 reads back as inside.
void save_mask_pgm(const std::string& path, const RegionMask& mask);
RegionMask load_mask_pgm(const std::string& path);

// (p - min) / (max - min) per pixel; a constant image maps to all zeros.
GrayImage minmax_normalize(const GrayImage& img);

// Separable Gaussian, kernel radius ceil(3*sigma), coordinates clamped at
// the border. sigma must be positive.
GrayImage gaussian_blur(const GrayImage& img, double sigma);

// Sobel gradient magnitude over interior pixels, borders zero, result
// min-max normalized. Requires at least 3x3.
GrayImage sobel_edges(const GrayImage& img);

// Otsu threshold bin over a 256-bin histogram of [0,1] intensities.
// Returns the bin index t maximizing between-class variance of {bins <= t}
// vs {bins > t}; -1 if no split exists (single occupied bin).
int otsu_threshold_bin(const GrayImage& img);

// Segment by Otsu: mask = pixels whose bin lies strictly above the
// threshold. If that leaves nothing (constant image), the first brightest
// pixel is included so downstream feature extraction always has a region.
RegionMask threshold_segment(const GrayImage& img);

// Default preprocessing chain used when a manifest row carries no mask:
// blur, then Otsu segmentation of the smoothed intensities.
RegionMask auto_segment(const GrayImage& normalized, double blur_sigma = 1.0);

}  // namespace medpipe
