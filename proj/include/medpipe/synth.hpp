#pragma once

#include <cstdint>
#include <string>

namespace medpipe {

// Seeded generator of textured elliptical blobs on a noisy background.
// Class identity shifts blob intensity, stripe period and eccentricity, each
// scaled by `separation`; at separation 0 the classes are indistinguishable
// by construction.
struct SynthConfig {
    int classes = 3;
    int per_class = 40;
    int width = 64;
    int height = 64;
    double separation = 0.6;
    std::uint64_t seed = 0;
};

// Writes images, masks and a manifest into `out_dir`; returns the manifest
// path.
std::string generate_synthetic_dataset(const std::string& out_dir, const SynthConfig& cfg);

}  // namespace medpipe
