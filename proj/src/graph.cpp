#include "catgnn/graph.hpp"

#include <algorithm>
#include <functional>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

namespace catgnn {

AdjacencyList::AdjacencyList(const std::vector<std::vector<int>>& lists) {
    const int n = static_cast<int>(lists.size());
    offsets_.assign(1, 0);
    offsets_.reserve(n + 1);
    for (const auto& l : lists) {
        for (std::size_t i = 0; i < l.size(); ++i) {
            if (l[i] < 0 || l[i] >= n) throw IndexError("adjacency: neighbor index out of range");
            if (i > 0 && l[i] <= l[i - 1])
                throw InvalidInput("adjacency: neighbor list not sorted/duplicate-free");
        }
        neighbors_.insert(neighbors_.end(), l.begin(), l.end());
        offsets_.push_back(static_cast<int>(neighbors_.size()));
    }
}

MultiRelationGraph::MultiRelationGraph(std::vector<double> features, int feat_dim,
                                       std::vector<Label> labels,
                                       std::vector<AdjacencyList> relations,
                                       std::vector<std::string> relation_names)
    : feat_dim_(feat_dim),
      features_(std::move(features)),
      labels_(std::move(labels)),
      relations_(std::move(relations)),
      relation_names_(std::move(relation_names)) {
    if (feat_dim_ <= 0) throw InvalidInput("graph: feature dimension must be positive");
    if (features_.size() % feat_dim_ != 0) throw ShapeError("graph: feature matrix is ragged");
    num_nodes_ = static_cast<int>(features_.size() / feat_dim_);
    if (labels_.size() != static_cast<std::size_t>(num_nodes_))
        throw ShapeError("graph: label count != node count");
    if (relations_.empty()) throw InvalidInput("graph: at least one relation required");
    if (relation_names_.size() != relations_.size())
        throw InvalidInput("graph: relation name count mismatch");
    for (const auto& rel : relations_)
        if (rel.num_nodes() != num_nodes_) throw ShapeError("graph: relation node count mismatch");
}

std::size_t MultiRelationGraph::total_adjacency_entries() const {
    std::size_t n = 0;
    for (const auto& r : relations_) n += r.num_entries();
    return n;
}

MultiRelationGraph MultiRelationGraph::relabeled(std::vector<Label> labels) const {
    return MultiRelationGraph(features_, feat_dim_, std::move(labels), relations_, relation_names_);
}

std::uint64_t hash_bucket(const std::string& s, int buckets) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h % static_cast<std::uint64_t>(buckets);
}

namespace {

// (time, txn_id) lexicographic order defines "earlier"
struct KeyedEvent {
    std::int64_t time;
    std::int64_t txn_id;
    int node;
};

std::vector<std::vector<int>> relation_from_key(
    const std::vector<TransactionRecord>& records,
    const std::function<const std::string&(const TransactionRecord&)>& key, std::int64_t window,
    int max_neighbors) {
    std::unordered_map<std::string, std::vector<KeyedEvent>> groups;
    for (int i = 0; i < static_cast<int>(records.size()); ++i)
        groups[key(records[i])].push_back({records[i].time, records[i].txn_id, i});

    std::vector<std::vector<int>> lists(records.size());
    for (auto& [k, events] : groups) {
        std::sort(events.begin(), events.end(), [](const KeyedEvent& a, const KeyedEvent& b) {
            return std::tie(a.time, a.txn_id) < std::tie(b.time, b.txn_id);
        });
        for (std::size_t i = 0; i < events.size(); ++i) {
            auto& out = lists[events[i].node];
            // walk backwards from the closest earlier event
            for (std::size_t j = i; j-- > 0;) {
                if (events[i].time - events[j].time > window) break;
                out.push_back(events[j].node);
                if (static_cast<int>(out.size()) == max_neighbors) break;
            }
            std::sort(out.begin(), out.end());
        }
    }
    return lists;
}

}  // namespace

MultiRelationGraph build_temporal_graph(const std::vector<TransactionRecord>& records,
                                        std::int64_t window, int max_neighbors,
                                        int categorical_buckets) {
    if (records.empty()) throw InvalidInput("build_temporal_graph: empty record list");
    if (window <= 0) throw InvalidInput("build_temporal_graph: window must be positive");
    if (max_neighbors < 1) throw InvalidInput("build_temporal_graph: max_neighbors must be >= 1");
    {
        std::unordered_set<std::int64_t> seen;
        for (const auto& r : records)
            if (!seen.insert(r.txn_id).second)
                throw DuplicateId("build_temporal_graph: duplicate txn_id " + std::to_string(r.txn_id));
    }

    const int n = static_cast<int>(records.size());
    const int d = temporal_feature_dim(categorical_buckets);
    std::vector<double> features(static_cast<std::size_t>(n) * d, 0.0);

    // previous same-source event (any distance, not window-limited) for the gap feature
    std::unordered_map<std::string, std::vector<KeyedEvent>> by_source;
    for (int i = 0; i < n; ++i)
        by_source[records[i].source].push_back({records[i].time, records[i].txn_id, i});
    for (auto& [src, events] : by_source) {
        std::sort(events.begin(), events.end(), [](const KeyedEvent& a, const KeyedEvent& b) {
            return std::tie(a.time, a.txn_id) < std::tie(b.time, b.txn_id);
        });
        for (std::size_t i = 0; i < events.size(); ++i) {
            const int node = events[i].node;
            double* row = features.data() + static_cast<std::size_t>(node) * d;
            row[0] = records[node].amount;
            row[1 + hash_bucket(records[node].txn_type, categorical_buckets)] = 1.0;
            row[1 + categorical_buckets + hash_bucket(records[node].location, categorical_buckets)] = 1.0;
            row[d - 1] = i == 0 ? 0.0 : static_cast<double>(events[i].time - events[i - 1].time);
        }
    }

    std::vector<AdjacencyList> relations;
    relations.emplace_back(relation_from_key(
        records, [](const TransactionRecord& r) -> const std::string& { return r.source; }, window,
        max_neighbors));
    relations.emplace_back(relation_from_key(
        records, [](const TransactionRecord& r) -> const std::string& { return r.target; }, window,
        max_neighbors));
    relations.emplace_back(relation_from_key(
        records, [](const TransactionRecord& r) -> const std::string& { return r.location; }, window,
        max_neighbors));

    std::vector<Label> labels(n);
    for (int i = 0; i < n; ++i) labels[i] = records[i].label;

    return MultiRelationGraph(std::move(features), d, std::move(labels), std::move(relations),
                              {"same_source", "same_target", "same_location"});
}

}  // namespace catgnn
