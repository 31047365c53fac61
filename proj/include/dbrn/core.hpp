#pragma once

#include <span>
#include <vector>

#include "dbrn/errors.hpp"

namespace dbrn {

/// Grid of local descriptors for one image: r = width*height rows of length
/// dim, row-major spatial order (row-by-row scan of the grid), so descriptor i
/// sits at grid cell (row = i / width, col = i % width).
struct FeatureMap {
    int width = 0;
    int height = 0;
    int dim = 0;
    std::vector<double> data; // (width*height) x dim, row-major

    FeatureMap() = default;
    FeatureMap(int w, int h, int d); // zero-filled
    FeatureMap(int w, int h, int d, std::vector<double> values);

    int cells() const { return width * height; }

    std::span<const double> descriptor(int i) const {
        return {data.data() + static_cast<std::size_t>(i) * dim, static_cast<std::size_t>(dim)};
    }
    std::span<double> descriptor(int i) {
        return {data.data() + static_cast<std::size_t>(i) * dim, static_cast<std::size_t>(dim)};
    }

    bool same_shape(const FeatureMap& other) const {
        return width == other.width && height == other.height && dim == other.dim;
    }
};

/// Class-probability vector: entries in [0,1] summing to 1.
struct ProbVector {
    std::vector<double> values;

    int size() const { return static_cast<int>(values.size()); }
};

/// v / ||v||_2; the zero vector when ||v||_2 < 1e-12 (degenerate-descriptor
/// convention; cosine against a zero vector is 0 downstream).
std::vector<double> l2_normalize(std::span<const double> v);

/// <u_hat, v_hat> clamped to [-1, 1]; 0 if either norm < 1e-12.
double cosine(std::span<const double> u, std::span<const double> v);

/// Batched cosine: a is ra x d, b is rb x d, both row-major; returns ra x rb
/// row-major with entry (i, j) = cosine(a_i, b_j).
std::vector<double> cosine_matrix(std::span<const double> a, int ra,
                                  std::span<const double> b, int rb, int d);

/// Sum of the k largest entries.
double top_k_sum(std::span<const double> values, int k);

/// Numerically stable softmax. The denominator is accumulated in ascending
/// value order, so the result is independent of the order of the logits.
ProbVector softmax(std::span<const double> logits);

} // namespace dbrn
