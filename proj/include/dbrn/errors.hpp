#pragma once

#include <stdexcept>
#include <string>

namespace dbrn {

// Shape disagreement between operands (vector lengths, descriptor dims, grids).
struct DimensionError : std::invalid_argument {
    explicit DimensionError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Argument outside its documented domain (k out of range, tau <= 0, ...).
struct ParameterError : std::invalid_argument {
    explicit ParameterError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Malformed file contents (bad magic, truncation, non-finite payload).
struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

// Episode sampling could not be satisfied by the dataset.
struct SamplingError : std::runtime_error {
    explicit SamplingError(const std::string& msg) : std::runtime_error(msg) {}
};

// Input image smaller than the extractor's receptive footprint.
struct ResolutionError : std::invalid_argument {
    explicit ResolutionError(const std::string& msg) : std::invalid_argument(msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace dbrn
