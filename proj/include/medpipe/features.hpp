#pragma once

#include <string>
#include <utility>
#include <vector>

#include "medpipe/image.hpp"
#include "medpipe/linalg.hpp"

namespace medpipe {

// Named feature values; names and values stay aligned 1:1 and every value
// leaving an extraction call is finite.
struct FeatureVector {
    std::vector<std::string> names;
    std::vector<double> values;

    void push(std::string name, double value) {
        names.push_back(std::move(name));
        values.push_back(value);
    }
    void append(const FeatureVector& other) {
        names.insert(names.end(), other.names.begin(), other.names.end());
        values.insert(values.end(), other.values.begin(), other.values.end());
    }
    std::size_t size() const { return values.size(); }
};

// Symmetric gray-level co-occurrence matrix: probs[i][j] is the joint
// probability of quantized intensities i and j at the given offset,
// accumulated in both directions.
struct GlcmMatrix {
    int levels = 0;
    Matrix probs;
    std::pair<int, int> offset{0, 0};  // (dy, dx)
};

// Six first-order statistics over masked pixels: mean, population variance,
// standard deviation, median (lower-middle for even counts), skewness and
// non-excess kurtosis. Zero-variance regions report skewness/kurtosis 0.
FeatureVector intensity_features(const GrayImage& img, const RegionMask& mask);

// Quantizes [0,1] intensities into `levels` uniform bins and counts in-mask
// pixel pairs at `offset` symmetrically. Throws if no valid pair exists.
GlcmMatrix glcm(const GrayImage& img, const RegionMask& mask, int levels,
                std::pair<int, int> offset);

// Haralick-style statistics: contrast, correlation, entropy (log2), energy,
// homogeneity, cluster shade, sum-of-squares variance.
FeatureVector texture_features(const GlcmMatrix& g);

// Area, perimeter (exposed 4-neighbor edges), circularity 4*pi*A/P^2,
// irregularity P^2/(4*pi*A), shape index P/(4*sqrt(A)).
FeatureVector shape_features(const RegionMask& mask);

struct ExtractionConfig {
    std::vector<int> glcm_levels = {8};
    double blur_sigma = 1.0;  // used when a mask must be auto-generated
};

// Full per-image vector: 6 intensity + 5 shape + 7 texture features per
// configured level count, texture averaged over the four distance-1 offsets
// (0, 45, 90, 135 degrees). Name order is deterministic.
FeatureVector extract_all(const GrayImage& img, const RegionMask& mask,
                          const ExtractionConfig& cfg);

}  // namespace medpipe
