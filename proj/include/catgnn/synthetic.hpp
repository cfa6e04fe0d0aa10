#pragma once

#include <cstdint>
#include <utility>

#include "catgnn/graph.hpp"

namespace catgnn {

// Planted two-class graph with camouflaged fraud: class-conditional Gaussian
// features, homophilous edges, extra fraud->benign camouflage edges, a hidden
// (unlabeled) fraction for semi-supervision, and an optional mean shift on
// test-node features.
struct SynthConfig {
    int num_nodes = 2000;
    double fraud_ratio = 0.1;       // fraction of nodes labeled fraud
    double camouflage_ratio = 0.3;  // camouflage edges per fraud node, as a fraction of avg_degree
    double hidden_ratio = 0.3;      // fraction of labels hidden (unlabeled)
    int feat_dim = 16;
    int num_relations = 2;
    int avg_degree = 5;       // homophilous edges added per node per relation
    double class_sep = 1.2;   // L2 distance between class feature means
    double noise_dims = 0.5;  // fraction of feature dims that carry no class signal
    double test_shift = 0.0;  // mean offset added to every test-node feature
    double train_ratio = 0.4;
    double valid_ratio = 0.2;  // remainder of the labeled nodes is test
};

std::pair<MultiRelationGraph, DatasetSplit> generate_synthetic(const SynthConfig& config,
                                                               std::uint64_t seed);

}  // namespace catgnn
