#pragma once

#include <string>
#include <vector>

#include "dbrn/core.hpp"

namespace dbrn {

// Feature tensor file, little-endian:
//   magic "DBRNFT01", count u32, then per map
//   { w u32, h u32, d u32, data w*h*d IEEE-754 float32, row-major }.
// Values are stored in single precision; maps produced by extract() already
// carry float32-rounded values, so their round-trip is bitwise.

void save_features(const std::vector<FeatureMap>& maps, const std::string& path);

std::vector<FeatureMap> load_features(const std::string& path);

} // namespace dbrn
