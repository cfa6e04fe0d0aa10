#include "catgnn/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "catgnn/splitting.hpp"

namespace catgnn {

namespace {

void validate(const SynthConfig& c) {
    if (c.num_nodes < 20) throw InvalidInput("synthetic: num_nodes must be >= 20");
    if (!(c.fraud_ratio > 0.0 && c.fraud_ratio < 0.5))
        throw InvalidInput("synthetic: fraud_ratio must be in (0, 0.5)");
    if (c.camouflage_ratio < 0.0 || c.camouflage_ratio > 1.0)
        throw InvalidInput("synthetic: camouflage_ratio must be in [0, 1]");
    if (c.hidden_ratio < 0.0 || c.hidden_ratio >= 1.0)
        throw InvalidInput("synthetic: hidden_ratio must be in [0, 1)");
    if (c.feat_dim < 2 || c.num_relations < 1 || c.avg_degree < 1)
        throw InvalidInput("synthetic: degenerate dimensions");
    if (c.train_ratio <= 0.0 || c.valid_ratio < 0.0 || c.train_ratio + c.valid_ratio >= 1.0)
        throw InvalidInput("synthetic: split ratios must leave room for a test set");
}

}  // namespace

std::pair<MultiRelationGraph, DatasetSplit> generate_synthetic(const SynthConfig& config,
                                                               std::uint64_t seed) {
    validate(config);
    std::mt19937_64 rng(seed);
    const int n = config.num_nodes;
    const int n_fraud = static_cast<int>(std::lround(config.fraud_ratio * n));

    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<Label> truth(n, Label::kBenign);
    for (int i = 0; i < n_fraud; ++i) truth[order[i]] = Label::kFraud;

    std::vector<int> benign_ids, fraud_ids;
    for (int v = 0; v < n; ++v)
        (truth[v] == Label::kFraud ? fraud_ids : benign_ids).push_back(v);

    // class-conditional Gaussian features; trailing dims carry no signal
    const int d = config.feat_dim;
    const int n_signal = std::max(1, d - static_cast<int>(std::floor(config.noise_dims * d)));
    const double mean_step = config.class_sep / std::sqrt(static_cast<double>(n_signal));
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> features(static_cast<std::size_t>(n) * d);
    for (int v = 0; v < n; ++v) {
        const double mu = truth[v] == Label::kFraud ? mean_step : 0.0;
        double* row = features.data() + static_cast<std::size_t>(v) * d;
        for (int j = 0; j < d; ++j) row[j] = gauss(rng) + (j < n_signal ? mu : 0.0);
    }

    // homophilous edges plus fraud->benign camouflage, symmetrized
    const int n_camo = static_cast<int>(std::lround(config.camouflage_ratio * config.avg_degree));
    std::uniform_int_distribution<int> pick_benign(0, static_cast<int>(benign_ids.size()) - 1);
    std::uniform_int_distribution<int> pick_fraud(0, static_cast<int>(fraud_ids.size()) - 1);
    std::vector<AdjacencyList> relations;
    std::vector<std::string> names;
    for (int r = 0; r < config.num_relations; ++r) {
        std::vector<std::vector<int>> lists(n);
        auto link = [&](int a, int b) {
            if (a == b) return;
            lists[a].push_back(b);
            lists[b].push_back(a);
        };
        for (int v = 0; v < n; ++v) {
            const bool is_fraud = truth[v] == Label::kFraud;
            for (int k = 0; k < config.avg_degree; ++k)
                link(v, is_fraud ? fraud_ids[pick_fraud(rng)] : benign_ids[pick_benign(rng)]);
            if (is_fraud)
                for (int k = 0; k < n_camo; ++k) link(v, benign_ids[pick_benign(rng)]);
        }
        for (auto& l : lists) {
            std::sort(l.begin(), l.end());
            l.erase(std::unique(l.begin(), l.end()), l.end());
        }
        relations.emplace_back(lists);
        names.push_back("synthetic_relation_" + std::to_string(r));
    }

    // hide a fraction of the labels for semi-supervision
    std::vector<Label> labels = truth;
    std::shuffle(order.begin(), order.end(), rng);
    const int n_hidden = static_cast<int>(std::floor(config.hidden_ratio * n));
    for (int i = 0; i < n_hidden; ++i) labels[order[i]] = Label::kUnlabeled;

    DatasetSplit split = stratified_split(labels, config.train_ratio, config.valid_ratio,
                                          rng());

    // distribution shift on test nodes only
    if (config.test_shift != 0.0) {
        for (int v : split.test_ids) {
            double* row = features.data() + static_cast<std::size_t>(v) * d;
            for (int j = 0; j < d; ++j) row[j] += config.test_shift;
        }
    }

    MultiRelationGraph graph(std::move(features), d, std::move(labels), std::move(relations),
                             std::move(names));
    return {std::move(graph), std::move(split)};
}

}  // namespace catgnn
