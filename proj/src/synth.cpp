#include "medpipe/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "medpipe/errors.hpp"
#include "medpipe/image.hpp"
#include "medpipe/rng.hpp"

namespace medpipe {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct ClassParams {
    double blob_mean;
    double stripe_period;
    double axis_ratio;
};

ClassParams class_params(int cls, int classes, double separation) {
    // Position in [-1, 1]; every class-dependent term vanishes at
    // separation 0 so the null fixture carries no signal.
    const double pos = classes > 1 ? 2.0 * cls / (classes - 1.0) - 1.0 : 0.0;
    ClassParams p;
    p.blob_mean = 0.55 + 0.20 * separation * pos;
    p.stripe_period = 6.0 + 2.5 * separation * pos;
    p.axis_ratio = 1.0 + 0.8 * separation * (pos + 1.0) * 0.5;
    return p;
}

}  // namespace

std::string generate_synthetic_dataset(const std::string& out_dir, const SynthConfig& cfg) {
    if (cfg.classes < 2) throw InvalidArgument("synth: need at least 2 classes");
    if (cfg.per_class < 1) throw InvalidArgument("synth: per_class must be >= 1");
    if (cfg.width < 16 || cfg.height < 16)
        throw InvalidArgument("synth: image size must be at least 16x16");
    if (cfg.separation < 0.0 || cfg.separation > 1.0)
        throw InvalidArgument("synth: separation must be in [0, 1]");

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec || !std::filesystem::is_directory(out_dir))
        throw IoError(out_dir + ": cannot create output directory");

    Rng rng(cfg.seed);
    // .txt so the predict command cannot mistake it for a feature csv
    const std::string manifest_path =
        (std::filesystem::path(out_dir) / "manifest.txt").string();
    std::ofstream manifest(manifest_path, std::ios::binary);
    if (!manifest) throw IoError(manifest_path + ": cannot open file for writing");

    char name[64];
    int index = 0;
    for (int cls = 0; cls < cfg.classes; ++cls) {
        const ClassParams params = class_params(cls, cfg.classes, cfg.separation);
        for (int i = 0; i < cfg.per_class; ++i, ++index) {
            GrayImage img(cfg.width, cfg.height);
            RegionMask mask(cfg.width, cfg.height);

            const double cx = cfg.width * (0.5 + 0.08 * (rng.uniform() - 0.5));
            const double cy = cfg.height * (0.5 + 0.08 * (rng.uniform() - 0.5));
            const double r =
                0.27 * std::min(cfg.width, cfg.height) * rng.uniform(0.85, 1.15);
            const double a = r * std::sqrt(params.axis_ratio);
            const double b = r / std::sqrt(params.axis_ratio);
            const double theta = rng.uniform(0.0, kPi);
            const double ct = std::cos(theta);
            const double st = std::sin(theta);
            const double stripe_dir = rng.uniform(0.0, kPi);
            const double sd_c = std::cos(stripe_dir);
            const double sd_s = std::sin(stripe_dir);
            const double phase = rng.uniform(0.0, 2.0 * kPi);

            for (int y = 0; y < cfg.height; ++y) {
                for (int x = 0; x < cfg.width; ++x) {
                    const double dx = x - cx;
                    const double dy = y - cy;
                    const double u = ct * dx + st * dy;
                    const double v = -st * dx + ct * dy;
                    const bool inside = (u / a) * (u / a) + (v / b) * (v / b) <= 1.0;
                    double value;
                    if (inside) {
                        mask.set(y, x, true);
                        const double along = sd_c * dx + sd_s * dy;
                        value = params.blob_mean +
                                0.10 * std::sin(2.0 * kPi * along / params.stripe_period +
                                                phase) +
                                rng.normal(0.0, 0.03);
                    } else {
                        value = 0.25 + rng.normal(0.0, 0.04);
                    }
                    img.at(y, x) = std::clamp(value, 0.0, 1.0);
                }
            }

            std::snprintf(name, sizeof name, "img_%05d.pgm", index);
            const std::string img_name = name;
            std::snprintf(name, sizeof name, "msk_%05d.pgm", index);
            const std::string msk_name = name;
            save_pgm((std::filesystem::path(out_dir) / img_name).string(), img);
            save_mask_pgm((std::filesystem::path(out_dir) / msk_name).string(), mask);
            std::snprintf(name, sizeof name, "c%02d", cls);
            manifest << img_name << ',' << msk_name << ',' << name << '\n';
        }
    }
    if (!manifest) throw IoError(manifest_path + ": write failed");
    return manifest_path;
}

}  // namespace medpipe
