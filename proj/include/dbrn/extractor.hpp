#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "dbrn/core.hpp"

namespace dbrn {

/// One image: row-major, channel-interleaved pixels in [0, 1].
struct Image {
    int height = 0;
    int width = 0;
    int channels = 1; // 1 or 3
    std::vector<double> pixels;

    Image() = default;
    Image(int h, int w, int c, std::vector<double> px);

    double at(int y, int x, int c) const {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    double& at(int y, int x, int c) {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
};

/// Seeded fixed-filter convolutional extractor. Filters are drawn once from
/// the seed (uniform [-1, 1], mean-centered per filter), there is no bias and
/// no training; extraction is bit-for-bit deterministic. Each layer is a
/// stride-s convolution with kernel size s (non-overlapping patches) followed
/// by a ramp, so spatial dims shrink by floor division per layer. The default
/// schedule {4, 2, 2} divides by 16 overall: 84 -> 5x5, 92 -> 5x5, 108 -> 6x6.
struct ExtractorConfig {
    std::uint64_t seed = 1;
    int num_layers = 3;
    int out_dim = 32;
    std::vector<int> strides = {4, 2, 2};
};

/// Output grid (width, height) for an image of the given size; throws
/// ResolutionError when the image is smaller than the receptive footprint.
std::pair<int, int> extract_grid_shape(int image_height, int image_width,
                                       const ExtractorConfig& config);

/// Run the extractor. Output descriptors are rounded through float32 so that
/// in-memory features and the on-disk feature format agree bit-for-bit.
FeatureMap extract(const Image& image, const ExtractorConfig& config);

/// Corner-aligned bilinear resize; output clamped to [0, 1].
Image resize_image(const Image& image, int target_height, int target_width);

} // namespace dbrn
