#include "catgnn/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace catgnn {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

bool parse_double(const std::string& s, double& out) {
    const char* b = s.data();
    const char* e = b + s.size();
    auto [p, ec] = std::from_chars(b, e, out);
    return ec == std::errc() && p == e;
}

bool parse_int64(const std::string& s, std::int64_t& out) {
    const char* b = s.data();
    const char* e = b + s.size();
    auto [p, ec] = std::from_chars(b, e, out);
    return ec == std::errc() && p == e;
}

std::ifstream open_or_throw(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    return in;
}

Label label_from_int(std::int64_t v) {
    if (v == 0) return Label::kBenign;
    if (v == 1) return Label::kFraud;
    return Label::kUnlabeled;
}

}  // namespace

std::vector<TransactionRecord> load_transactions_csv(const std::string& path,
                                                     const ColumnMapping& schema) {
    std::ifstream in = open_or_throw(path);
    std::string line;
    if (!std::getline(in, line)) throw SchemaError("empty transaction file: " + path);
    const std::vector<std::string> header = split_line(line);

    auto column = [&](const std::string& name) {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw SchemaError(name);
        return static_cast<int>(it - header.begin());
    };
    const int c_time = column(schema.time);
    const int c_source = column(schema.source);
    const int c_target = column(schema.target);
    const int c_amount = column(schema.amount);
    const int c_location = column(schema.location);
    const int c_type = column(schema.txn_type);
    const int c_label = column(schema.label);

    std::vector<TransactionRecord> records;
    int row = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const std::vector<std::string> cells = split_line(line);
        if (cells.size() != header.size())
            throw ParseError("row " + std::to_string(row) + ": expected " +
                             std::to_string(header.size()) + " columns");
        TransactionRecord r;
        r.txn_id = row;
        if (!parse_int64(cells[c_time], r.time))
            throw ParseError("row " + std::to_string(row) + ": bad time value");
        if (!parse_double(cells[c_amount], r.amount))
            throw ParseError("row " + std::to_string(row) + ": bad amount value");
        if (r.amount < 0.0)
            throw ParseError("row " + std::to_string(row) + ": negative amount");
        r.source = cells[c_source];
        r.target = cells[c_target];
        r.location = cells[c_location];
        r.txn_type = cells[c_type];
        std::int64_t lv;
        r.label = parse_int64(cells[c_label], lv) ? label_from_int(lv) : Label::kUnlabeled;
        records.push_back(std::move(r));
        ++row;
    }
    return records;
}

MultiRelationGraph load_generic_graph(const std::string& feature_path,
                                      const std::string& label_path,
                                      const std::vector<std::string>& edge_paths) {
    if (edge_paths.empty()) throw InvalidInput("load_generic_graph: no edge files");

    std::vector<double> features;
    int feat_dim = -1;
    {
        std::ifstream in = open_or_throw(feature_path);
        std::string line;
        int row = 0;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto cells = split_line(line);
            if (feat_dim < 0) feat_dim = static_cast<int>(cells.size());
            if (static_cast<int>(cells.size()) != feat_dim)
                throw ParseError(feature_path + ": ragged row " + std::to_string(row));
            for (const auto& c : cells) {
                double v;
                if (!parse_double(c, v))
                    throw ParseError(feature_path + ": bad value at row " + std::to_string(row));
                features.push_back(v);
            }
            ++row;
        }
        if (row == 0) throw InvalidInput("load_generic_graph: empty feature file");
    }
    const int n = static_cast<int>(features.size()) / feat_dim;

    std::vector<Label> labels(n, Label::kUnlabeled);
    {
        std::ifstream in = open_or_throw(label_path);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            const auto cells = split_line(line);
            if (cells.size() != 2)
                throw ParseError(label_path + ": line " + std::to_string(lineno));
            std::int64_t id, lv;
            if (!parse_int64(cells[0], id)) {
                if (lineno == 1) continue;  // header
                throw ParseError(label_path + ": line " + std::to_string(lineno));
            }
            if (id < 0 || id >= n)
                throw IndexError(label_path + ": node id out of range at line " + std::to_string(lineno));
            labels[id] = parse_int64(cells[1], lv) ? label_from_int(lv) : Label::kUnlabeled;
        }
    }

    std::vector<AdjacencyList> relations;
    std::vector<std::string> names;
    for (const auto& path : edge_paths) {
        std::ifstream in = open_or_throw(path);
        std::vector<std::vector<int>> lists(n);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            const auto cells = split_line(line);
            if (cells.size() != 2) throw ParseError(path + ": line " + std::to_string(lineno));
            std::int64_t a, b;
            if (!parse_int64(cells[0], a) || !parse_int64(cells[1], b)) {
                if (lineno == 1) continue;  // header
                throw ParseError(path + ": line " + std::to_string(lineno));
            }
            if (a < 0 || a >= n || b < 0 || b >= n)
                throw IndexError(path + ": endpoint out of range at line " + std::to_string(lineno) +
                                 " (" + line + ")");
            if (a == b) continue;
            lists[a].push_back(static_cast<int>(b));
            lists[b].push_back(static_cast<int>(a));
        }
        for (auto& l : lists) {
            std::sort(l.begin(), l.end());
            l.erase(std::unique(l.begin(), l.end()), l.end());
        }
        relations.emplace_back(lists);
        names.push_back("relation_" + std::to_string(names.size()));
    }

    return MultiRelationGraph(std::move(features), feat_dim, std::move(labels),
                              std::move(relations), std::move(names));
}

void save_generic_graph(const MultiRelationGraph& graph, const std::string& feature_path,
                        const std::string& label_path, const std::vector<std::string>& edge_paths) {
    if (static_cast<int>(edge_paths.size()) != graph.num_relations())
        throw InvalidInput("save_generic_graph: one edge path per relation required");

    {
        std::ofstream out(feature_path);
        if (!out) throw IoError("cannot write " + feature_path);
        char buf[32];
        for (int v = 0; v < graph.num_nodes(); ++v) {
            const auto row = graph.feature_row(v);
            for (int j = 0; j < graph.feat_dim(); ++j) {
                std::snprintf(buf, sizeof(buf), "%.17g", row[j]);
                out << (j ? "," : "") << buf;
            }
            out << '\n';
        }
    }
    {
        std::ofstream out(label_path);
        if (!out) throw IoError("cannot write " + label_path);
        out << "node_id,label\n";
        for (int v = 0; v < graph.num_nodes(); ++v)
            out << v << ',' << static_cast<int>(graph.label(v)) << '\n';
    }
    for (int r = 0; r < graph.num_relations(); ++r) {
        std::ofstream out(edge_paths[r]);
        if (!out) throw IoError("cannot write " + edge_paths[r]);
        out << "src,dst\n";
        const auto& rel = graph.relation(r);
        for (int v = 0; v < graph.num_nodes(); ++v)
            for (int u : rel.neighbors(v))
                if (v < u) out << v << ',' << u << '\n';  // one direction; loader symmetrizes
    }
}

void save_split(const DatasetSplit& split, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "node_id,split\n";
    for (int v : split.train_ids) out << v << ",train\n";
    for (int v : split.valid_ids) out << v << ",valid\n";
    for (int v : split.test_ids) out << v << ",test\n";
}

DatasetSplit load_split(const std::string& path) {
    std::ifstream in = open_or_throw(path);
    DatasetSplit split;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto cells = split_line(line);
        if (cells.size() != 2) throw ParseError(path + ": line " + std::to_string(lineno));
        std::int64_t id;
        if (!parse_int64(cells[0], id)) {
            if (lineno == 1) continue;
            throw ParseError(path + ": line " + std::to_string(lineno));
        }
        if (cells[1] == "train") split.train_ids.push_back(static_cast<int>(id));
        else if (cells[1] == "valid") split.valid_ids.push_back(static_cast<int>(id));
        else if (cells[1] == "test") split.test_ids.push_back(static_cast<int>(id));
        else throw ParseError(path + ": unknown split tag at line " + std::to_string(lineno));
    }
    return split;
}

}  // namespace catgnn
