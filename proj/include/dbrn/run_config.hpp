#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dbrn/extractor.hpp"
#include "dbrn/metric_head.hpp"
#include "dbrn/proto_augment.hpp"

namespace dbrn {

/// Everything a CLI run needs, with documented defaults. Round-trips through
/// the flat `key = value` config format losslessly: from_kv(to_kv(c)) == c.
struct RunConfig {
    std::string command = "eval"; // gen-data | extract | eval | ablate | fit-tau | heatmap
    std::string data;             // dataset directory, or feature file (with labels sidecar)
    std::string labels;           // labels sidecar path ("" = <data>.labels)
    std::string out;              // output path ("" = stdout where applicable)

    int n_way = 5;
    int k_shot = 1;
    int q_queries = 15;
    int num_episodes = 500;
    std::uint64_t seed = 0;

    int k = 3;
    double tau = 10.0;
    double omega = 2.0;
    bool use_weight = true;
    bool use_pow = true;
    bool use_protoaug = true;
    bool query_multiscale = false;
    std::vector<int> scales = {84, 92, 108};

    std::uint64_t ext_seed = 1;
    int ext_dim = 32;
    std::vector<int> ext_strides = {4, 2, 2};

    int classes = 20;    // gen-data
    int samples = 50;    // gen-data
    int resolution = 84; // gen-data
    int resize = 0;      // extract: square resize before extraction; 0 keeps native size

    double lr = 0.05; // fit-tau
    int steps = 50;   // fit-tau

    bool operator==(const RunConfig&) const = default;

    HeadConfig head() const;
    ScaleSet scale_set() const;
    ExtractorConfig extractor() const;

    /// All fields as `key = value` lines in a fixed order; doubles printed
    /// with enough digits to round-trip exactly.
    std::string to_kv() const;
};

/// Parse `key = value` lines ('#' comments and blank lines ignored); unknown
/// keys or malformed values raise ParameterError.
RunConfig parse_run_config(const std::string& text);

RunConfig load_run_config(const std::string& path);

} // namespace dbrn
