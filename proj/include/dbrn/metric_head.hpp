#pragma once

#include <vector>

#include "dbrn/core.hpp"

namespace dbrn {

/// Per-class centroid of support feature maps.
struct Prototype {
    int class_id = 0;
    FeatureMap map;
};

/// Bias-rectify weights: one nonnegative weight per query grid position,
/// normalized to mean one (or exactly one everywhere on degenerate input).
struct RectifyWeights {
    std::vector<double> values;

    static RectifyWeights uniform(int r) { return RectifyWeights{std::vector<double>(r, 1.0)}; }
};

/// Scoring configuration. With use_weight off the head reduces to plain
/// top-k scaled-cosine matching; with use_pow off the dispersion exponent is
/// treated as 1. The weight normalization mode is fixed to mean-one.
struct HeadConfig {
    int k = 3;
    double tau = 10.0;
    double omega = 2.0;
    bool use_weight = true;
    bool use_pow = true;
    bool use_protoaug = true;
};

/// Elementwise arithmetic mean of the support maps.
Prototype compute_prototype(const std::vector<FeatureMap>& support_maps, int class_id);

/// Co-occurrence weights of the query's descriptors against a reference
/// prototype: raw_j = sum_i max(0, cos(u_i, v_j))^omega, then mean-one
/// normalization; uniform fallback when all raw weights vanish.
RectifyWeights rectify_weights(const FeatureMap& query_map, const Prototype& reference,
                               double omega, bool use_pow);

/// Sim = sum_j W_j * top_k_sum({tau * cos(u_i, v_j)}_i, k): each query
/// descriptor contributes its k best scaled-cosine matches against the
/// prototype's descriptors, weighted by its rectify weight.
double similarity(const Prototype& proto, const FeatureMap& query_map,
                  const RectifyWeights& weights, int k, double tau);

/// Per-class logits (similarity with per-class rectify weights when enabled).
std::vector<double> class_logits(const std::vector<Prototype>& prototypes,
                                 const FeatureMap& query_map, const HeadConfig& config);

/// Softmax over class_logits.
ProbVector classify(const std::vector<Prototype>& prototypes, const FeatureMap& query_map,
                    const HeadConfig& config);

/// Predicted class index; ties break to the lowest index.
int argmax_class(const ProbVector& probs);

// Internals shared by the public ops; cosines is the r_q x r_ref query-major
// cosine matrix between query and reference descriptors.
RectifyWeights rectify_weights_from_cosines(const std::vector<double>& cosines, int r_q,
                                            int r_ref, double omega, bool use_pow);
double similarity_from_cosines(const std::vector<double>& cosines, int r_q, int r_ref,
                               const RectifyWeights& weights, int k, double tau);

/// d(mean cross-entropy)/d(tau) for logits produced at temperature tau. Every
/// logit is linear in tau, so d logit_c / d tau = logit_c / tau and the
/// gradient is mean_q sum_c (p_c - 1{c=y_q}) * logit_c / tau.
double tau_gradient(const std::vector<std::vector<double>>& episode_logits,
                    const std::vector<int>& true_labels, double tau);

/// One episode in feature space, ready for scoring.
struct FeatureEpisode {
    std::vector<Prototype> prototypes;
    std::vector<FeatureMap> queries;
    std::vector<int> labels; // index into prototypes, per query
};

struct TauFit {
    double tau = 0.0;
    std::vector<double> loss_trace; // steps + 1 entries: loss before each update, then final
};

/// Plain gradient descent on the temperature, clamped to [1e-3, 1e3]; all
/// other parameters stay fixed.
TauFit fit_tau(const std::vector<FeatureEpisode>& episodes, const HeadConfig& config,
               double learning_rate, int steps);

} // namespace dbrn
