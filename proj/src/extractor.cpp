#include "dbrn/extractor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dbrn/rng.hpp"

namespace dbrn {

Image::Image(int h, int w, int c, std::vector<double> px)
    : height(h), width(w), channels(c), pixels(std::move(px)) {
    if (h < 1 || w < 1) throw ParameterError("Image: dimensions must be positive");
    if (c != 1 && c != 3) throw ParameterError("Image: channels must be 1 or 3");
    if (pixels.size() != static_cast<std::size_t>(h) * w * c) {
        throw DimensionError("Image: pixel count does not match " + std::to_string(h) + "x" +
                             std::to_string(w) + "x" + std::to_string(c));
    }
    for (double v : pixels) {
        if (!(v >= 0.0 && v <= 1.0)) { // also rejects NaN
            throw ParameterError("Image: pixel value outside [0, 1]");
        }
    }
}

namespace {

void check_config(const ExtractorConfig& cfg) {
    if (cfg.num_layers < 1) throw ParameterError("extractor: num_layers must be positive");
    if (cfg.out_dim < 1) throw ParameterError("extractor: out_dim must be positive");
    if (static_cast<int>(cfg.strides.size()) != cfg.num_layers) {
        throw ParameterError("extractor: stride schedule length " +
                             std::to_string(cfg.strides.size()) + " != num_layers " +
                             std::to_string(cfg.num_layers));
    }
    for (int s : cfg.strides) {
        if (s < 1) throw ParameterError("extractor: strides must be positive");
    }
}

// Filter bank for one layer: out_dim filters of size k*k*c_in, uniform in
// [-1, 1] and mean-centered per filter. Seeded per (seed, layer, fan-in) so
// grayscale and RGB banks are independent deterministic streams.
std::vector<double> make_filters(std::uint64_t seed, int layer, int k, int c_in, int c_out) {
    const int fan_in = k * k * c_in;
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(layer),
                     static_cast<std::uint64_t>(fan_in)));
    std::vector<double> w(static_cast<std::size_t>(c_out) * fan_in);
    for (int f = 0; f < c_out; ++f) {
        double* fw = w.data() + static_cast<std::size_t>(f) * fan_in;
        double mean = 0.0;
        for (int i = 0; i < fan_in; ++i) {
            fw[i] = rng.uniform(-1.0, 1.0);
            mean += fw[i];
        }
        mean /= fan_in;
        for (int i = 0; i < fan_in; ++i) fw[i] -= mean;
    }
    return w;
}

} // namespace

std::pair<int, int> extract_grid_shape(int image_height, int image_width,
                                       const ExtractorConfig& config) {
    check_config(config);
    int h = image_height, w = image_width;
    for (int s : config.strides) {
        h /= s;
        w /= s;
    }
    if (h < 1 || w < 1) {
        throw ResolutionError("extract: image " + std::to_string(image_height) + "x" +
                              std::to_string(image_width) +
                              " is smaller than the receptive footprint of the stride schedule");
    }
    return {w, h};
}

FeatureMap extract(const Image& image, const ExtractorConfig& config) {
    extract_grid_shape(image.height, image.width, config); // validates config + size

    int h = image.height, w = image.width, c = image.channels;
    std::vector<double> cur = image.pixels; // h x w x c, channel-interleaved

    for (int layer = 0; layer < config.num_layers; ++layer) {
        const int s = config.strides[layer];
        const int oh = h / s, ow = w / s;
        const int oc = config.out_dim;
        const int fan_in = s * s * c;
        const std::vector<double> filters = make_filters(config.seed, layer, s, c, oc);

        std::vector<double> next(static_cast<std::size_t>(oh) * ow * oc);
        std::vector<double> patch(fan_in);
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                int p = 0;
                for (int dy = 0; dy < s; ++dy) {
                    const double* row =
                        cur.data() + (static_cast<std::size_t>(oy * s + dy) * w + ox * s) * c;
                    for (int i = 0; i < s * c; ++i) patch[p++] = row[i];
                }
                double* out = next.data() + (static_cast<std::size_t>(oy) * ow + ox) * oc;
                for (int f = 0; f < oc; ++f) {
                    const double* fw = filters.data() + static_cast<std::size_t>(f) * fan_in;
                    double acc = 0.0;
                    for (int i = 0; i < fan_in; ++i) acc += fw[i] * patch[i];
                    out[f] = acc > 0.0 ? acc : 0.0; // ramp
                }
            }
        }
        cur = std::move(next);
        h = oh;
        w = ow;
        c = oc;
    }

    // Round through float32: in-memory descriptors match the feature-file
    // precision exactly, so save/load round-trips are bitwise.
    for (double& v : cur) v = static_cast<double>(static_cast<float>(v));
    return FeatureMap(w, h, config.out_dim, std::move(cur));
}

Image resize_image(const Image& image, int target_height, int target_width) {
    if (target_height < 2 || target_width < 2) {
        throw ParameterError("resize_image: target must be at least 2x2");
    }
    if (target_height == image.height && target_width == image.width) return image;
    const int ih = image.height, iw = image.width, c = image.channels;
    const double sy = ih > 1 ? static_cast<double>(ih - 1) / (target_height - 1) : 0.0;
    const double sx = iw > 1 ? static_cast<double>(iw - 1) / (target_width - 1) : 0.0;

    std::vector<double> out(static_cast<std::size_t>(target_height) * target_width * c);
    for (int y = 0; y < target_height; ++y) {
        const double fy = y * sy;
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, ih - 1);
        const double ty = fy - y0;
        for (int x = 0; x < target_width; ++x) {
            const double fx = x * sx;
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, iw - 1);
            const double tx = fx - x0;
            for (int ch = 0; ch < c; ++ch) {
                double v = (1.0 - ty) * ((1.0 - tx) * image.at(y0, x0, ch) +
                                         tx * image.at(y0, x1, ch)) +
                           ty * ((1.0 - tx) * image.at(y1, x0, ch) +
                                 tx * image.at(y1, x1, ch));
                out[(static_cast<std::size_t>(y) * target_width + x) * c + ch] =
                    std::clamp(v, 0.0, 1.0);
            }
        }
    }
    return Image(target_height, target_width, c, std::move(out));
}

} // namespace dbrn
