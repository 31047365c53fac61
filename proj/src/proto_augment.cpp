#include "dbrn/proto_augment.hpp"

#include <string>

namespace dbrn {

FeatureMap pool_to_grid(const FeatureMap& map, int target_w, int target_h) {
    if (target_w < 1 || target_h < 1) {
        throw ParameterError("pool_to_grid: target grid must be positive");
    }
    if (target_w > map.width || target_h > map.height) {
        throw ParameterError("pool_to_grid: target " + std::to_string(target_w) + "x" +
                             std::to_string(target_h) + " would upsample source " +
                             std::to_string(map.width) + "x" + std::to_string(map.height));
    }
    const int d = map.dim;
    FeatureMap out(target_w, target_h, d);
    for (int a = 0; a < target_h; ++a) {
        const int y0 = a * map.height / target_h;
        const int y1 = (a + 1) * map.height / target_h;
        for (int b = 0; b < target_w; ++b) {
            const int x0 = b * map.width / target_w;
            const int x1 = (b + 1) * map.width / target_w;
            double* dst = out.data.data() + (static_cast<std::size_t>(a) * target_w + b) * d;
            for (int y = y0; y < y1; ++y) {
                for (int x = x0; x < x1; ++x) {
                    const double* src =
                        map.data.data() + (static_cast<std::size_t>(y) * map.width + x) * d;
                    for (int c = 0; c < d; ++c) dst[c] += src[c];
                }
            }
            const double inv = 1.0 / (static_cast<double>(y1 - y0) * (x1 - x0));
            for (int c = 0; c < d; ++c) dst[c] *= inv;
        }
    }
    return out;
}

Prototype augmented_prototype_from_maps(const std::vector<std::vector<FeatureMap>>& per_scale_maps,
                                        int base_w, int base_h, int class_id) {
    if (per_scale_maps.empty()) {
        throw ParameterError("augmented_prototype: no scales");
    }
    std::vector<Prototype> per_scale;
    per_scale.reserve(per_scale_maps.size());
    for (const std::vector<FeatureMap>& maps : per_scale_maps) {
        if (maps.empty()) throw ParameterError("augmented_prototype: empty support set");
        std::vector<FeatureMap> pooled;
        pooled.reserve(maps.size());
        for (const FeatureMap& m : maps) pooled.push_back(pool_to_grid(m, base_w, base_h));
        per_scale.push_back(compute_prototype(pooled, class_id));
    }
    // Mean of the per-scale prototypes (all on the base grid now).
    std::vector<FeatureMap> scale_maps;
    scale_maps.reserve(per_scale.size());
    for (Prototype& p : per_scale) scale_maps.push_back(std::move(p.map));
    return compute_prototype(scale_maps, class_id);
}

Prototype augmented_prototype(const std::vector<Image>& support_images, int class_id,
                              const ScaleSet& scales, const ExtractorConfig& config) {
    if (support_images.empty()) {
        throw ParameterError("augmented_prototype: empty support set");
    }
    const int base = scales.base();
    const auto [base_w, base_h] = extract_grid_shape(base, base, config);

    std::vector<std::vector<FeatureMap>> per_scale_maps;
    per_scale_maps.reserve(scales.resolutions.size());
    for (int res : scales.resolutions) {
        std::vector<FeatureMap> maps;
        maps.reserve(support_images.size());
        for (const Image& img : support_images) {
            maps.push_back(extract(resize_image(img, res, res), config));
        }
        per_scale_maps.push_back(std::move(maps));
    }
    return augmented_prototype_from_maps(per_scale_maps, base_w, base_h, class_id);
}

} // namespace dbrn
