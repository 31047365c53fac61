#include "dbrn/metric_head.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dbrn {

namespace {

constexpr double kRawEps = 1e-12;

double clamped_pow(double c, double omega, bool use_pow) {
    double x = c > 0.0 ? c : 0.0; // negative cosines clamp to 0 before the exponent
    if (!use_pow) return x;
    if (omega == 1.0) return x; // keeps the omega=1 reduction identity exact
    if (omega == 2.0) return x * x;
    if (omega == 3.0) return x * x * x;
    return std::pow(x, omega);
}

void check_head(const HeadConfig& cfg) {
    if (cfg.k < 1) throw ParameterError("head: k must be positive");
    if (!(cfg.tau > 0.0)) throw ParameterError("head: tau must be positive");
    if (!(cfg.omega > 0.0)) throw ParameterError("head: omega must be positive");
}

} // namespace

Prototype compute_prototype(const std::vector<FeatureMap>& support_maps, int class_id) {
    if (support_maps.empty()) {
        throw ParameterError("compute_prototype: empty support set");
    }
    const FeatureMap& first = support_maps.front();
    for (const FeatureMap& m : support_maps) {
        if (!m.same_shape(first)) {
            throw DimensionError("compute_prototype: support maps disagree in shape");
        }
    }
    std::vector<double> acc(first.data.size(), 0.0);
    for (const FeatureMap& m : support_maps) {
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += m.data[i];
    }
    const double inv = 1.0 / static_cast<double>(support_maps.size());
    for (double& v : acc) v *= inv;
    return Prototype{class_id, FeatureMap(first.width, first.height, first.dim, std::move(acc))};
}

RectifyWeights rectify_weights_from_cosines(const std::vector<double>& cosines, int r_q,
                                            int r_ref, double omega, bool use_pow) {
    std::vector<double> raw(r_q, 0.0);
    double total = 0.0;
    for (int j = 0; j < r_q; ++j) {
        const double* row = cosines.data() + static_cast<std::size_t>(j) * r_ref;
        double s = 0.0;
        for (int i = 0; i < r_ref; ++i) s += clamped_pow(row[i], omega, use_pow);
        raw[j] = s;
        total += s;
    }
    if (total < kRawEps) {
        return RectifyWeights::uniform(r_q); // degenerate fallback
    }
    RectifyWeights w;
    w.values.resize(r_q);
    for (int j = 0; j < r_q; ++j) w.values[j] = raw[j] * static_cast<double>(r_q) / total;
    return w;
}

RectifyWeights rectify_weights(const FeatureMap& query_map, const Prototype& reference,
                               double omega, bool use_pow) {
    if (query_map.dim != reference.map.dim) {
        throw DimensionError("rectify_weights: descriptor dim mismatch");
    }
    if (!(omega > 0.0)) throw ParameterError("rectify_weights: omega must be positive");
    const std::vector<double> cosines =
        cosine_matrix(query_map.data, query_map.cells(), reference.map.data,
                      reference.map.cells(), query_map.dim);
    return rectify_weights_from_cosines(cosines, query_map.cells(), reference.map.cells(), omega,
                                        use_pow);
}

double similarity_from_cosines(const std::vector<double>& cosines, int r_q, int r_ref,
                               const RectifyWeights& weights, int k, double tau) {
    std::vector<double> scaled(r_ref);
    double sim = 0.0;
    for (int j = 0; j < r_q; ++j) {
        const double* row = cosines.data() + static_cast<std::size_t>(j) * r_ref;
        for (int i = 0; i < r_ref; ++i) scaled[i] = tau * row[i];
        sim += weights.values[j] * top_k_sum(scaled, k);
    }
    return sim;
}

double similarity(const Prototype& proto, const FeatureMap& query_map,
                  const RectifyWeights& weights, int k, double tau) {
    if (query_map.dim != proto.map.dim) {
        throw DimensionError("similarity: descriptor dim mismatch");
    }
    if (k < 1 || k > proto.map.cells()) {
        throw ParameterError("similarity: k = " + std::to_string(k) + " out of range [1, " +
                             std::to_string(proto.map.cells()) + "]");
    }
    if (static_cast<int>(weights.values.size()) != query_map.cells()) {
        throw DimensionError("similarity: weight count does not match query positions");
    }
    if (!(tau > 0.0)) throw ParameterError("similarity: tau must be positive");
    const std::vector<double> cosines =
        cosine_matrix(query_map.data, query_map.cells(), proto.map.data, proto.map.cells(),
                      query_map.dim);
    return similarity_from_cosines(cosines, query_map.cells(), proto.map.cells(), weights, k,
                                   tau);
}

std::vector<double> class_logits(const std::vector<Prototype>& prototypes,
                                 const FeatureMap& query_map, const HeadConfig& config) {
    if (prototypes.size() < 2) {
        throw ParameterError("classify: need at least 2 prototypes");
    }
    check_head(config);
    const FeatureMap& pfirst = prototypes.front().map;
    for (const Prototype& p : prototypes) {
        if (!p.map.same_shape(pfirst)) {
            throw DimensionError("classify: prototypes disagree in shape");
        }
    }
    if (query_map.dim != pfirst.dim) {
        throw DimensionError("classify: query dim does not match prototypes");
    }
    if (config.k > pfirst.cells()) {
        throw ParameterError("classify: k exceeds prototype resolution");
    }

    const int r_q = query_map.cells();
    const int r_p = pfirst.cells();
    std::vector<double> logits(prototypes.size());
    for (std::size_t c = 0; c < prototypes.size(); ++c) {
        const std::vector<double> cosines = cosine_matrix(
            query_map.data, r_q, prototypes[c].map.data, r_p, query_map.dim);
        const RectifyWeights w =
            config.use_weight
                ? rectify_weights_from_cosines(cosines, r_q, r_p, config.omega, config.use_pow)
                : RectifyWeights::uniform(r_q);
        logits[c] = similarity_from_cosines(cosines, r_q, r_p, w, config.k, config.tau);
    }
    return logits;
}

ProbVector classify(const std::vector<Prototype>& prototypes, const FeatureMap& query_map,
                    const HeadConfig& config) {
    return softmax(class_logits(prototypes, query_map, config));
}

int argmax_class(const ProbVector& probs) {
    if (probs.values.empty()) throw ParameterError("argmax_class: empty probabilities");
    int best = 0;
    for (int i = 1; i < probs.size(); ++i) {
        if (probs.values[i] > probs.values[best]) best = i;
    }
    return best;
}

double tau_gradient(const std::vector<std::vector<double>>& episode_logits,
                    const std::vector<int>& true_labels, double tau) {
    if (!(tau > 0.0)) throw ParameterError("tau_gradient: tau must be positive");
    if (episode_logits.empty()) throw ParameterError("tau_gradient: no queries");
    if (episode_logits.size() != true_labels.size()) {
        throw DimensionError("tau_gradient: logit/label count mismatch");
    }
    double acc = 0.0;
    for (std::size_t q = 0; q < episode_logits.size(); ++q) {
        const std::vector<double>& logits = episode_logits[q];
        const int y = true_labels[q];
        if (y < 0 || y >= static_cast<int>(logits.size())) {
            throw ParameterError("tau_gradient: label out of range");
        }
        const ProbVector p = softmax(logits);
        for (std::size_t c = 0; c < logits.size(); ++c) {
            const double indicator = (static_cast<int>(c) == y) ? 1.0 : 0.0;
            acc += (p.values[c] - indicator) * logits[c] / tau;
        }
    }
    return acc / static_cast<double>(episode_logits.size());
}

TauFit fit_tau(const std::vector<FeatureEpisode>& episodes, const HeadConfig& config,
               double learning_rate, int steps) {
    if (steps < 1) throw ParameterError("fit_tau: steps must be >= 1");
    if (learning_rate < 0.0) throw ParameterError("fit_tau: learning rate must be >= 0");
    if (episodes.empty()) throw ParameterError("fit_tau: no episodes");
    check_head(config);

    // Logits are linear in tau, so compute each query's logits once at tau=1
    // and rescale during descent.
    HeadConfig unit = config;
    unit.tau = 1.0;
    std::vector<std::vector<double>> base;
    std::vector<int> labels;
    for (const FeatureEpisode& ep : episodes) {
        if (ep.queries.size() != ep.labels.size()) {
            throw DimensionError("fit_tau: query/label count mismatch");
        }
        for (std::size_t q = 0; q < ep.queries.size(); ++q) {
            base.push_back(class_logits(ep.prototypes, ep.queries[q], unit));
            labels.push_back(ep.labels[q]);
        }
    }
    if (base.empty()) throw ParameterError("fit_tau: episodes contain no queries");

    auto mean_ce = [&](double tau) {
        double loss = 0.0;
        std::vector<double> logits;
        for (std::size_t q = 0; q < base.size(); ++q) {
            logits = base[q];
            for (double& v : logits) v *= tau;
            const ProbVector p = softmax(logits);
            loss -= std::log(std::max(p.values[labels[q]], 1e-300));
        }
        return loss / static_cast<double>(base.size());
    };

    double tau = config.tau;
    TauFit fit;
    fit.loss_trace.reserve(steps + 1);
    std::vector<std::vector<double>> logits(base.size());
    for (int s = 0; s < steps; ++s) {
        fit.loss_trace.push_back(mean_ce(tau));
        for (std::size_t q = 0; q < base.size(); ++q) {
            logits[q] = base[q];
            for (double& v : logits[q]) v *= tau;
        }
        const double g = tau_gradient(logits, labels, tau);
        tau = std::clamp(tau - learning_rate * g, 1e-3, 1e3);
    }
    fit.loss_trace.push_back(mean_ce(tau));
    fit.tau = tau;
    return fit;
}

} // namespace dbrn
