#pragma once

// Independent scalar-loop reference implementations used to cross-check the
// library. Everything here is written against plain nested vectors with its
// own loops; nothing is shared with the dbrn sources.

#include <vector>

namespace oracle {

using Desc = std::vector<double>;
using DescGrid = std::vector<Desc>; // r descriptors of equal length

struct Config {
    int k = 3;
    double tau = 10.0;
    double omega = 2.0;
    bool use_weight = true;
    bool use_pow = true;
};

double cosine(const Desc& u, const Desc& v);

// sum of the k largest entries, found by repeated maximum extraction
double top_k_sum(std::vector<double> values, int k);

std::vector<double> softmax(const std::vector<double>& logits);

// raw_j = sum_i max(0, cos(ref_i, query_j))^omega, normalized to mean one;
// all-ones when the total vanishes
std::vector<double> rectify(const DescGrid& query, const DescGrid& ref, double omega,
                            bool use_pow);

double similarity(const DescGrid& proto, const DescGrid& query, const std::vector<double>& w,
                  int k, double tau);

std::vector<double> classify(const std::vector<DescGrid>& protos, const DescGrid& query,
                             const Config& cfg);

// elementwise mean of equally shaped grids
DescGrid prototype(const std::vector<DescGrid>& grids);

// mean cross-entropy of the given per-query logit rows
double mean_cross_entropy(const std::vector<std::vector<double>>& logits,
                          const std::vector<int>& labels);

// block-mean pooling of an h x w grid of descriptors to th x tw
DescGrid pool(const DescGrid& grid, int w, int h, int tw, int th);

} // namespace oracle
