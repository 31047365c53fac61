#include "dbrn/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dbrn {

namespace {
constexpr double kNormEps = 1e-12;

void check_finite(const std::vector<double>& values, const char* what) {
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw ParameterError(std::string(what) + ": non-finite entry");
        }
    }
}
} // namespace

FeatureMap::FeatureMap(int w, int h, int d) : width(w), height(h), dim(d) {
    if (w < 1 || h < 1 || d < 1) {
        throw ParameterError("FeatureMap: width, height and dim must be positive");
    }
    data.assign(static_cast<std::size_t>(w) * h * d, 0.0);
}

FeatureMap::FeatureMap(int w, int h, int d, std::vector<double> values)
    : width(w), height(h), dim(d), data(std::move(values)) {
    if (w < 1 || h < 1 || d < 1) {
        throw ParameterError("FeatureMap: width, height and dim must be positive");
    }
    if (data.size() != static_cast<std::size_t>(w) * h * d) {
        throw DimensionError("FeatureMap: data size " + std::to_string(data.size()) +
                             " does not match " + std::to_string(w) + "x" + std::to_string(h) +
                             "x" + std::to_string(d));
    }
    check_finite(data, "FeatureMap");
}

std::vector<double> l2_normalize(std::span<const double> v) {
    double sq = 0.0;
    for (double x : v) sq += x * x;
    double norm = std::sqrt(sq);
    std::vector<double> out(v.size(), 0.0);
    if (norm < kNormEps) return out;
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / norm;
    return out;
}

double cosine(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) {
        throw DimensionError("cosine: length mismatch (" + std::to_string(u.size()) + " vs " +
                             std::to_string(v.size()) + ")");
    }
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    double num = std::sqrt(nu), nvm = std::sqrt(nv);
    if (num < kNormEps || nvm < kNormEps) return 0.0;
    double c = dot / (num * nvm);
    return std::clamp(c, -1.0, 1.0);
}

std::vector<double> cosine_matrix(std::span<const double> a, int ra,
                                  std::span<const double> b, int rb, int d) {
    if (ra < 0 || rb < 0 || d < 1) {
        throw ParameterError("cosine_matrix: bad dimensions");
    }
    if (a.size() != static_cast<std::size_t>(ra) * d || b.size() != static_cast<std::size_t>(rb) * d) {
        throw DimensionError("cosine_matrix: operand sizes do not match row count x d");
    }
    // Pre-normalize rows, then plain row-by-row dot products.
    std::vector<double> an(a.size()), bn(b.size());
    auto normalize_rows = [d](std::span<const double> src, std::vector<double>& dst, int rows) {
        for (int i = 0; i < rows; ++i) {
            const double* row = src.data() + static_cast<std::size_t>(i) * d;
            double sq = 0.0;
            for (int c = 0; c < d; ++c) sq += row[c] * row[c];
            double norm = std::sqrt(sq);
            double* out = dst.data() + static_cast<std::size_t>(i) * d;
            if (norm < kNormEps) {
                std::fill(out, out + d, 0.0);
            } else {
                for (int c = 0; c < d; ++c) out[c] = row[c] / norm;
            }
        }
    };
    normalize_rows(a, an, ra);
    normalize_rows(b, bn, rb);

    std::vector<double> out(static_cast<std::size_t>(ra) * rb);
    for (int i = 0; i < ra; ++i) {
        const double* ai = an.data() + static_cast<std::size_t>(i) * d;
        double* orow = out.data() + static_cast<std::size_t>(i) * rb;
        for (int j = 0; j < rb; ++j) {
            const double* bj = bn.data() + static_cast<std::size_t>(j) * d;
            double dot = 0.0;
            for (int c = 0; c < d; ++c) dot += ai[c] * bj[c];
            orow[j] = std::clamp(dot, -1.0, 1.0);
        }
    }
    return out;
}

double top_k_sum(std::span<const double> values, int k) {
    if (k < 1 || static_cast<std::size_t>(k) > values.size()) {
        throw ParameterError("top_k_sum: k = " + std::to_string(k) + " out of range [1, " +
                             std::to_string(values.size()) + "]");
    }
    std::vector<double> tmp(values.begin(), values.end());
    std::partial_sort(tmp.begin(), tmp.begin() + k, tmp.end(), std::greater<double>());
    double sum = 0.0;
    for (int i = 0; i < k; ++i) sum += tmp[i];
    return sum;
}

ProbVector softmax(std::span<const double> logits) {
    if (logits.empty()) {
        throw ParameterError("softmax: empty logits");
    }
    for (double x : logits) {
        if (!std::isfinite(x)) throw ParameterError("softmax: non-finite logit");
    }
    double mx = logits[0];
    for (double x : logits) mx = std::max(mx, x);
    std::vector<double> exps(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) exps[i] = std::exp(logits[i] - mx);
    // Order-independent denominator: sum a sorted copy ascending.
    std::vector<double> sorted(exps);
    std::sort(sorted.begin(), sorted.end());
    double denom = 0.0;
    for (double e : sorted) denom += e;
    ProbVector out;
    out.values.resize(exps.size());
    for (std::size_t i = 0; i < exps.size(); ++i) out.values[i] = exps[i] / denom;
    return out;
}

} // namespace dbrn
