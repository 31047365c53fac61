#include <algorithm>
#include <cmath>
#include <cstdio>

#include "dbrn/episodes.hpp"
#include "dbrn/rng.hpp"

namespace dbrn {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct SampleJitter {
    double cx, cy;   // pattern center, pixels
    double gamma;    // pattern scale factor
    double phase;    // grating phase
    double theta;    // orientation offset, radians
};

// Windowed grating: oriented sinusoid under a Gaussian envelope. Classes
// differ in spatial frequency and base orientation.
void draw_grating(Image& img, int level, const SampleJitter& jit) {
    const double r = img.width;
    const double freq = 3.0 + 1.7 * level;
    const double theta = 0.35 * level + jit.theta;
    const double sigma = 0.22 * r * jit.gamma;
    const double ct = std::cos(theta), st = std::sin(theta);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const double dx = x - jit.cx, dy = y - jit.cy;
            const double proj = (dx * ct + dy * st) / (r * jit.gamma);
            const double env = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
            img.at(y, x, 0) +=
                0.8 * env * 0.5 * (1.0 + std::cos(2.0 * kPi * freq * proj + jit.phase));
        }
    }
}

// Ring of Gaussian blobs: classes differ in blob count, ring radius and the
// base angle of the arrangement.
void draw_blobs(Image& img, int level, const SampleJitter& jit) {
    const double r = img.width;
    const int m = 3 + level % 4;
    const double rho = r * (0.18 + 0.05 * (level % 3)) * jit.gamma;
    const double sb = r * 0.055 * jit.gamma;
    const double base = 0.5 * level + jit.theta;
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            double v = 0.0;
            for (int i = 0; i < m; ++i) {
                const double a = base + 2.0 * kPi * i / m;
                const double bx = jit.cx + rho * std::cos(a);
                const double by = jit.cy + rho * std::sin(a);
                const double dx = x - bx, dy = y - by;
                v += std::exp(-(dx * dx + dy * dy) / (2.0 * sb * sb));
            }
            img.at(y, x, 0) += 0.85 * v;
        }
    }
}

// Annulus: classes differ in radius and thickness.
void draw_ring(Image& img, int level, const SampleJitter& jit) {
    const double r = img.width;
    const double rho = r * (0.16 + 0.045 * (level % 4)) * jit.gamma;
    const double t = r * (0.035 + 0.012 * (level % 2)) * jit.gamma;
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const double dx = x - jit.cx, dy = y - jit.cy;
            const double dist = std::sqrt(dx * dx + dy * dy);
            const double dr = dist - rho;
            img.at(y, x, 0) += 0.8 * std::exp(-(dr * dr) / (2.0 * t * t));
        }
    }
}

// Class-independent clutter: bright blobs at random positions. These give
// every image regions whose descriptors carry no class signal, i.e. the
// background bias the rectify weights exist to suppress.
void draw_clutter(Image& img, Rng& rng) {
    const double r = img.width;
    for (int b = 0; b < 4; ++b) {
        const double bx = rng.uniform(0.1, 0.9) * r;
        const double by = rng.uniform(0.1, 0.9) * r;
        const double sc = 0.045 * r * rng.uniform(0.7, 1.3);
        for (int y = 0; y < img.height; ++y) {
            for (int x = 0; x < img.width; ++x) {
                const double dx = x - bx, dy = y - by;
                img.at(y, x, 0) += 0.65 * std::exp(-(dx * dx + dy * dy) / (2.0 * sc * sc));
            }
        }
    }
}

Image make_sample(std::uint64_t seed, int cls, int sample, int resolution) {
    // Draw order is fixed, so every sample is a pure function of (seed,
    // class, sample index) regardless of generation order.
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(cls), static_cast<std::uint64_t>(sample)));
    SampleJitter jit;
    const double r = resolution;
    jit.cx = r * (0.5 + rng.uniform(-0.08, 0.08));
    jit.cy = r * (0.5 + rng.uniform(-0.08, 0.08));
    // wide scale jitter: the size mismatch between support and query is the
    // variation multi-scale prototypes are meant to absorb
    jit.gamma = rng.uniform(0.7, 1.35);
    jit.phase = rng.uniform(0.0, 2.0 * kPi);
    jit.theta = rng.uniform(-0.08, 0.08);

    Image img(resolution, resolution, 1,
              std::vector<double>(static_cast<std::size_t>(resolution) * resolution, 0.1));
    const int level = cls / 3;
    switch (cls % 3) {
        case 0: draw_grating(img, level, jit); break;
        case 1: draw_blobs(img, level, jit); break;
        default: draw_ring(img, level, jit); break;
    }
    draw_clutter(img, rng);
    for (double& v : img.pixels) v = std::clamp(v, 0.0, 1.0);
    return img;
}

} // namespace

Dataset generate_toy_dataset(std::uint64_t seed, int num_classes, int samples_per_class,
                             int resolution) {
    if (num_classes < 2) throw ParameterError("generate_toy_dataset: num_classes must be >= 2");
    if (samples_per_class < 0) {
        throw ParameterError("generate_toy_dataset: samples_per_class must be >= 0");
    }
    if (resolution < 16) throw ParameterError("generate_toy_dataset: resolution must be >= 16");

    Dataset ds;
    ds.split = "test";
    ds.class_names.reserve(num_classes);
    ds.class_items.resize(num_classes);
    for (int c = 0; c < num_classes; ++c) {
        char name[16];
        std::snprintf(name, sizeof(name), "class_%02d", c);
        ds.class_names.emplace_back(name);
        for (int s = 0; s < samples_per_class; ++s) {
            ds.class_items[c].push_back(static_cast<int>(ds.images.size()));
            ds.images.push_back(make_sample(seed, c, s, resolution));
            ds.labels.push_back(c);
        }
    }
    return ds;
}

} // namespace dbrn
