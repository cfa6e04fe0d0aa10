#pragma once

#include <string>
#include <vector>

#include "catgnn/graph.hpp"

namespace catgnn {

// Maps TransactionRecord fields to column names of a transaction CSV.
struct ColumnMapping {
    std::string time = "time";
    std::string source = "source";
    std::string target = "target";
    std::string amount = "amount";
    std::string location = "location";
    std::string txn_type = "type";
    std::string label = "label";
};

// Parses a header-first comma-separated transaction file. Rows keep file
// order; txn_id is the 0-based row index. Label values other than 0/1 map to
// unlabeled.
std::vector<TransactionRecord> load_transactions_csv(const std::string& path,
                                                     const ColumnMapping& schema);

// Loads a pre-built graph: a features CSV (N rows x d columns, no header), a
// labels CSV (node_id,label) and one edge CSV (src,dst) per relation. Edges
// are symmetrized and deduplicated; self-loops are dropped. A non-numeric
// first line in labels/edge files is treated as a header.
MultiRelationGraph load_generic_graph(const std::string& feature_path,
                                      const std::string& label_path,
                                      const std::vector<std::string>& edge_paths);

// Writers for the same format (used by the dataset generator; the pair
// round-trips losslessly).
void save_generic_graph(const MultiRelationGraph& graph, const std::string& feature_path,
                        const std::string& label_path, const std::vector<std::string>& edge_paths);

void save_split(const DatasetSplit& split, const std::string& path);
DatasetSplit load_split(const std::string& path);

}  // namespace catgnn
