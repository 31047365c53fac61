#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dbrn/extractor.hpp"
#include "dbrn/metric_head.hpp"
#include "dbrn/proto_augment.hpp"

namespace dbrn {

/// Labeled pool of items to sample episodes from. Items are either images or
/// precomputed feature maps (exactly one of the two storages is populated).
struct Dataset {
    std::vector<Image> images;
    std::vector<FeatureMap> features;
    std::vector<int> labels; // class index per item
    std::vector<std::string> class_names;
    std::vector<std::vector<int>> class_items; // item indices per class
    std::string split = "test";

    bool image_backed() const { return features.empty(); }
    int num_classes() const { return static_cast<int>(class_names.size()); }
    int num_items() const { return static_cast<int>(labels.size()); }
};

/// Deterministic synthetic shape dataset: each class is a parametric family
/// (windowed gratings, blob clusters, rings) with class-specific frequency,
/// orientation and size; samples jitter in position, scale and phase and
/// carry class-independent clutter blobs. Grayscale, values in [0, 1].
Dataset generate_toy_dataset(std::uint64_t seed, int num_classes, int samples_per_class,
                             int resolution);

/// Directory of per-class subdirectories of P5/P6 images. Class order and
/// item order are lexicographic, so loading is deterministic.
Dataset load_image_dataset(const std::string& dir);

/// DBRNFT01 feature file plus a labels sidecar (one class name per line, one
/// line per map). Class indices follow sorted unique names.
Dataset load_feature_dataset(const std::string& features_path, const std::string& labels_path);

/// One N-way K-shot task. Support and query item lists are way-major:
/// way w owns support_items[w*k_shot .. (w+1)*k_shot) and
/// query_items[w*q_queries .. (w+1)*q_queries).
struct Episode {
    int n_way = 0;
    int k_shot = 0;
    int q_queries = 0;
    std::vector<int> way_class;     // dataset class per way
    std::vector<int> support_items; // n*k dataset item indices
    std::vector<int> query_items;   // n*q dataset item indices
    std::vector<int> query_way;     // ground-truth way per query

    std::uint64_t hash() const;
};

/// Sample classes without replacement, then items without replacement within
/// each class; support and query items are disjoint. Deterministic per seed.
Episode sample_episode(const Dataset& dataset, int n_way, int k_shot, int q_queries,
                       std::uint64_t rng_seed);

struct EvalReport {
    double mean_accuracy = 0.0;
    double ci95 = 0.0; // 1.96 * stddev(per-episode acc) / sqrt(num_episodes)
    int num_episodes = 0;
    std::vector<double> per_episode;

    // config snapshot
    std::string label;
    int n_way = 0, k_shot = 0, q_queries = 0;
    std::uint64_t seed = 0;
    HeadConfig head;
    ScaleSet scales;
    ExtractorConfig extractor;
    bool query_multiscale = false;
    std::uint64_t episode_stream_hash = 0;

    std::string to_text() const; // summary table + [report] key-value block
};

/// Short name for a toggle combination: "baseline", "weight", "weight+pow",
/// "full" or "custom".
std::string config_label(const HeadConfig& config);

/// Episodic evaluation: num_episodes independent episodes, prototypes built
/// per config (multi-scale when use_protoaug), every query classified with
/// argmax tie-break to the lowest class index. Deterministic per seed.
/// query_multiscale additionally averages each query's logits over all
/// scales (queries stay single-scale at the base resolution by default).
EvalReport evaluate(const Dataset& dataset, const HeadConfig& head_config,
                    const ScaleSet& scale_set, const ExtractorConfig& extractor_config,
                    int n_way, int k_shot, int q_queries, int num_episodes, std::uint64_t seed,
                    bool query_multiscale = false);

/// The four ablation rows (none, weight, weight+pow, all) evaluated on
/// identical episode streams (same seed, paired comparison).
std::vector<EvalReport> ablation_run(const Dataset& dataset, const HeadConfig& base_config,
                                     const ScaleSet& scale_set,
                                     const ExtractorConfig& extractor_config, int n_way,
                                     int k_shot, int q_queries, int num_episodes,
                                     std::uint64_t seed);

std::string ablation_to_text(const std::vector<EvalReport>& rows);

/// Materialize sampled episodes in feature space (prototypes + query maps),
/// using the same caches and prototype paths as evaluate. Used by fit_tau.
std::vector<FeatureEpisode> make_feature_episodes(const Dataset& dataset,
                                                  const HeadConfig& head_config,
                                                  const ScaleSet& scale_set,
                                                  const ExtractorConfig& extractor_config,
                                                  int n_way, int k_shot, int q_queries,
                                                  int num_episodes, std::uint64_t seed);

} // namespace dbrn
