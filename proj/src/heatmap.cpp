#include "dbrn/heatmap.hpp"

#include <algorithm>
#include <string>

#include "dbrn/pnm.hpp"

namespace dbrn {

Image render_weight_image(const Image& query, const RectifyWeights& weights, int grid_w,
                          int grid_h) {
    if (grid_w < 1 || grid_h < 1) throw ParameterError("heatmap: grid dims must be positive");
    if (static_cast<int>(weights.values.size()) != grid_w * grid_h) {
        throw DimensionError("heatmap: " + std::to_string(weights.values.size()) +
                             " weights for a " + std::to_string(grid_w) + "x" +
                             std::to_string(grid_h) + " grid");
    }

    double lo = weights.values[0], hi = weights.values[0];
    for (double w : weights.values) {
        lo = std::min(lo, w);
        hi = std::max(hi, w);
    }
    const bool constant = (hi - lo) < 1e-12;

    std::vector<double> out(static_cast<std::size_t>(query.height) * query.width);
    for (int y = 0; y < query.height; ++y) {
        // Nearest-cell upsampling: pixel (y, x) belongs to grid cell
        // (y * grid_h / height, x * grid_w / width).
        const int gy = std::min(grid_h - 1, y * grid_h / query.height);
        for (int x = 0; x < query.width; ++x) {
            const int gx = std::min(grid_w - 1, x * grid_w / query.width);
            const double w = weights.values[static_cast<std::size_t>(gy) * grid_w + gx];
            const double nw = constant ? 0.5 : (w - lo) / (hi - lo);
            const double factor = 0.25 + 0.75 * nw;
            double gray;
            if (query.channels == 3) {
                gray = 0.299 * query.at(y, x, 0) + 0.587 * query.at(y, x, 1) +
                       0.114 * query.at(y, x, 2);
            } else {
                gray = query.at(y, x, 0);
            }
            out[static_cast<std::size_t>(y) * query.width + x] =
                std::clamp(factor * gray, 0.0, 1.0);
        }
    }
    return Image(query.height, query.width, 1, std::move(out));
}

void render_weight_heatmap(const Image& query, const RectifyWeights& weights, int grid_w,
                           int grid_h, const std::string& out_path) {
    write_pgm(render_weight_image(query, weights, grid_w, grid_h), out_path);
}

} // namespace dbrn
