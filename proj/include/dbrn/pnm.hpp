#pragma once

#include <string>

#include "dbrn/extractor.hpp"

namespace dbrn {

/// Read a binary portable graymap (P5) or pixmap (P6), maxval <= 255.
/// Pixel values are mapped to [0, 1] as value / maxval.
Image read_pnm(const std::string& path);

/// Write a 1-channel image as binary P5 with maxval 255 (values are
/// round(255 * v)).
void write_pgm(const Image& image, const std::string& path);

} // namespace dbrn
