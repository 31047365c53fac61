#pragma once

#include <vector>

#include "dbrn/extractor.hpp"
#include "dbrn/metric_head.hpp"

namespace dbrn {

/// Square resolutions used for multi-scale prototype augmentation. The first
/// entry is the base scale: every other scale's grid is pooled down to the
/// base grid before fusion, so the base should be the smallest resolution.
struct ScaleSet {
    std::vector<int> resolutions = {84, 92, 108};

    int base() const {
        if (resolutions.empty()) throw ParameterError("ScaleSet: no resolutions");
        return resolutions.front();
    }
};

/// Adaptive average pooling: target cell (a, b) is the mean of the source
/// cells in block [floor(a*h/th), floor((a+1)*h/th)) x [floor(b*w/tw),
/// floor((b+1)*w/tw)). Pooling never upsamples.
FeatureMap pool_to_grid(const FeatureMap& map, int target_w, int target_h);

/// Fuse per-scale support maps into one prototype: pool each map to the base
/// grid, average within each scale, then average the per-scale prototypes.
/// per_scale_maps[s] holds the support maps extracted at scale s.
Prototype augmented_prototype_from_maps(const std::vector<std::vector<FeatureMap>>& per_scale_maps,
                                        int base_w, int base_h, int class_id);

/// Resize every support image to each scale, extract, pool to the base grid,
/// and fuse (the full multi-scale prototype path).
Prototype augmented_prototype(const std::vector<Image>& support_images, int class_id,
                              const ScaleSet& scales, const ExtractorConfig& config);

} // namespace dbrn
