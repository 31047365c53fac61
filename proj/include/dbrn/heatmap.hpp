#pragma once

#include <string>

#include "dbrn/extractor.hpp"
#include "dbrn/metric_head.hpp"

namespace dbrn {

/// Modulate the query image's brightness by its rectify weights: the grid_w x
/// grid_h weight grid is upsampled nearest-cell to the image resolution,
/// min-max normalized to [0, 1] (constant grids map to 0.5), and each pixel is
/// scaled by 0.25 + 0.75 * normalized weight. Color inputs are flattened to
/// grayscale first, so the result is always a 1-channel image.
Image render_weight_image(const Image& query, const RectifyWeights& weights, int grid_w,
                          int grid_h);

/// render_weight_image, written to out_path as binary P5.
void render_weight_heatmap(const Image& query, const RectifyWeights& weights, int grid_w,
                           int grid_h, const std::string& out_path);

} // namespace dbrn
