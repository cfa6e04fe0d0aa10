#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "catgnn/error.hpp"

namespace catgnn {

enum class Label : std::uint8_t { kBenign = 0, kFraud = 1, kUnlabeled = 2 };

// One raw credit-card transaction row.
struct TransactionRecord {
    std::int64_t txn_id = 0;
    std::int64_t time = 0;  // seconds
    std::string source;     // cardholder
    std::string target;     // merchant
    double amount = 0.0;
    std::string location;
    std::string txn_type;
    Label label = Label::kUnlabeled;
};

// Compressed sorted neighbor lists for one relation.
class AdjacencyList {
  public:
    AdjacencyList() = default;
    // lists[v] must be sorted and duplicate-free with entries in [0, lists.size())
    explicit AdjacencyList(const std::vector<std::vector<int>>& lists);

    std::span<const int> neighbors(int v) const {
        return {neighbors_.data() + offsets_[v], neighbors_.data() + offsets_[v + 1]};
    }
    int num_nodes() const { return static_cast<int>(offsets_.size()) - 1; }
    std::size_t num_entries() const { return neighbors_.size(); }

  private:
    std::vector<int> offsets_{0};
    std::vector<int> neighbors_;
};

// Immutable node-feature matrix plus per-relation adjacency and labels.
class MultiRelationGraph {
  public:
    MultiRelationGraph(std::vector<double> features, int feat_dim, std::vector<Label> labels,
                       std::vector<AdjacencyList> relations, std::vector<std::string> relation_names);

    int num_nodes() const { return num_nodes_; }
    int feat_dim() const { return feat_dim_; }
    int num_relations() const { return static_cast<int>(relations_.size()); }
    std::span<const double> feature_row(int v) const {
        return {features_.data() + static_cast<std::size_t>(v) * feat_dim_,
                static_cast<std::size_t>(feat_dim_)};
    }
    std::span<const double> features() const { return features_; }
    Label label(int v) const { return labels_[v]; }
    std::span<const Label> labels() const { return labels_; }
    const AdjacencyList& relation(int r) const { return relations_[r]; }
    const std::string& relation_name(int r) const { return relation_names_[r]; }
    std::size_t total_adjacency_entries() const;

    // Same structure and features with a different label vector (used to hide
    // labels outside the training split from the model input).
    MultiRelationGraph relabeled(std::vector<Label> labels) const;

  private:
    int num_nodes_ = 0;
    int feat_dim_ = 0;
    std::vector<double> features_;
    std::vector<Label> labels_;
    std::vector<AdjacencyList> relations_;
    std::vector<std::string> relation_names_;
};

struct DatasetSplit {
    std::vector<int> train_ids;
    std::vector<int> valid_ids;
    std::vector<int> test_ids;
};

// Builds the temporal multi-relation graph over transaction records: one node
// per record (in input order) and three relations (same source, same target,
// same location). Edges point newer -> older: a node links to at most
// max_neighbors most recent earlier records sharing the key within `window`
// seconds. "Earlier" orders by (time, txn_id).
MultiRelationGraph build_temporal_graph(const std::vector<TransactionRecord>& records,
                                        std::int64_t window, int max_neighbors,
                                        int categorical_buckets = 32);

// Width of the raw feature row produced by build_temporal_graph:
// [amount, type one-hot, location one-hot, time gap to previous same-source txn]
inline int temporal_feature_dim(int categorical_buckets) { return 2 + 2 * categorical_buckets; }

// FNV-1a, used to bucket categorical strings deterministically.
std::uint64_t hash_bucket(const std::string& s, int buckets);

}  // namespace catgnn
