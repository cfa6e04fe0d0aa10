#include "catgnn/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <unordered_map>

#include "catgnn/rng.hpp"
#include "json.hpp"

namespace catgnn {

using nlohmann::json;

EnvPolicy ModelConfig::env_policy() const {
    EnvPolicy p;
    p.by_proportion = !variant_uses_fixed_count(variant);
    p.r_e = r_e;
    p.fixed_count = fixed_env_count;
    p.rounding = env_rounding;
    return p;
}

void ModelConfig::validate() const {
    if (hidden_dim < 1) throw InvalidInput("model: hidden_dim must be >= 1");
    if (num_heads < 1) throw InvalidInput("model: num_heads must be >= 1");
    if (dropout < 0.0 || dropout >= 1.0) throw InvalidInput("model: dropout must be in [0, 1)");
    if (leaky_slope <= 0.0 || leaky_slope >= 1.0)
        throw InvalidInput("model: leaky_slope must be in (0, 1)");
    if (r_e < 0.0 || r_e > 1.0) throw InvalidInput("model: r_e must be in [0, 1]");
    if (r_c <= 0.0 || r_c > 1.0) throw InvalidInput("model: r_c must be in (0, 1]");
    if (fixed_env_count < 0) throw InvalidInput("model: fixed_env_count must be >= 0");
    if (depth < 1) throw InvalidInput("model: depth must be >= 1");
}

namespace {

Tensor glorot(int rows, int cols, std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / (rows + cols));
    std::uniform_real_distribution<double> unif(-limit, limit);
    Tensor t(rows, cols);
    for (double& v : *t.data) v = unif(rng);
    return t;
}

}  // namespace

CatGnnParams CatGnnParams::init(int feat_dim, const ModelConfig& config, std::uint64_t seed) {
    config.validate();
    if (feat_dim < 1) throw InvalidInput("params: feat_dim must be >= 1");
    std::mt19937_64 rng(mix_seed(seed, 0x9a7a));
    const int d = config.hidden_dim;
    CatGnnParams p;
    p.projection = glorot(feat_dim, d, rng);
    p.proj_bias = Tensor::zeros(1, d);
    p.label_embed = [&] {
        std::uniform_real_distribution<double> unif(-0.1, 0.1);
        Tensor t(3, d);
        for (double& v : *t.data) v = unif(rng);
        return t;
    }();
    for (int h = 0; h < config.num_heads; ++h) p.attn_vectors.push_back(glorot(2 * d, 1, rng));
    p.mixup_scorer = glorot(d, 1, rng);
    p.mixup_bias = Tensor::zeros(1, 1);
    p.output_proj = glorot(config.num_heads * d, d, rng);
    p.classifier = glorot(d, 1, rng);
    p.clf_bias = Tensor::zeros(1, 1);
    return p;
}

std::vector<Tensor*> CatGnnParams::all() {
    std::vector<Tensor*> out = {&projection, &proj_bias, &label_embed};
    for (auto& a : attn_vectors) out.push_back(&a);
    out.push_back(&mixup_scorer);
    out.push_back(&mixup_bias);
    out.push_back(&output_proj);
    out.push_back(&classifier);
    out.push_back(&clf_bias);
    return out;
}

std::vector<const Tensor*> CatGnnParams::all() const {
    auto mut = const_cast<CatGnnParams*>(this)->all();
    return {mut.begin(), mut.end()};
}

std::vector<std::string> CatGnnParams::names() const {
    std::vector<std::string> out = {"projection", "proj_bias", "label_embed"};
    for (std::size_t h = 0; h < attn_vectors.size(); ++h)
        out.push_back("attn_" + std::to_string(h));
    out.insert(out.end(), {"mixup_scorer", "mixup_bias", "output_proj", "classifier", "clf_bias"});
    return out;
}

std::size_t CatGnnParams::num_parameters() const {
    std::size_t n = 0;
    for (const Tensor* t : all()) n += t->size();
    return n;
}

CatGnnParams CatGnnParams::tracked(Tape& tape) const {
    CatGnnParams p = *this;
    for (Tensor* t : p.all()) *t = tape.leaf(*t);
    return p;
}

CatGnnParams CatGnnParams::clone() const {
    CatGnnParams p = *this;
    for (Tensor* t : p.all()) *t = t->detached_copy();
    return p;
}

void CatGnnParams::save(const std::string& path, const ModelConfig& config) const {
    json j;
    j["format_version"] = 1;
    j["model"] = {{"hidden_dim", config.hidden_dim},
                  {"num_heads", config.num_heads},
                  {"dropout", config.dropout},
                  {"leaky_slope", config.leaky_slope},
                  {"variant", variant_name(config.variant)},
                  {"r_e", config.r_e},
                  {"r_c", config.r_c},
                  {"fixed_env_count", config.fixed_env_count},
                  {"env_rounding", config.env_rounding == EnvRounding::kFloor ? "floor" : "ceil"},
                  {"depth", config.depth}};
    json params = json::object();
    const auto ts = all();
    const auto ns = names();
    for (std::size_t i = 0; i < ts.size(); ++i)
        params[ns[i]] = {{"shape", {ts[i]->rows, ts[i]->cols}}, {"values", *ts[i]->data}};
    j["params"] = std::move(params);
    std::ofstream out(path);
    if (!out) throw IoError("cannot write checkpoint " + path);
    out << j.dump();
}

CatGnnParams CatGnnParams::load(const std::string& path, ModelConfig& config) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open checkpoint " + path);
    json j;
    in >> j;
    if (j.value("format_version", 0) != 1) throw ParseError("checkpoint: unsupported format version");
    const json& m = j.at("model");
    config.hidden_dim = m.at("hidden_dim");
    config.num_heads = m.at("num_heads");
    config.dropout = m.at("dropout");
    config.leaky_slope = m.at("leaky_slope");
    config.variant = variant_from_name(m.at("variant"));
    config.r_e = m.at("r_e");
    config.r_c = m.at("r_c");
    config.fixed_env_count = m.at("fixed_env_count");
    config.env_rounding =
        m.at("env_rounding") == "ceil" ? EnvRounding::kCeil : EnvRounding::kFloor;
    config.depth = m.at("depth");
    config.validate();

    const json& params = j.at("params");
    const int d = config.hidden_dim;
    const int feat_dim = params.at("projection").at("shape").at(0);
    CatGnnParams p;
    p.attn_vectors.resize(config.num_heads);
    auto read = [&](const std::string& name, Tensor& t, int rows, int cols) {
        const json& e = params.at(name);
        if (e.at("shape").at(0) != rows || e.at("shape").at(1) != cols)
            throw ShapeError("checkpoint: shape mismatch for " + name);
        std::vector<double> values = e.at("values").get<std::vector<double>>();
        t = Tensor(rows, cols, std::move(values));
    };
    read("projection", p.projection, feat_dim, d);
    read("proj_bias", p.proj_bias, 1, d);
    read("label_embed", p.label_embed, 3, d);
    for (int h = 0; h < config.num_heads; ++h)
        read("attn_" + std::to_string(h), p.attn_vectors[h], 2 * d, 1);
    read("mixup_scorer", p.mixup_scorer, d, 1);
    read("mixup_bias", p.mixup_bias, 1, 1);
    read("output_proj", p.output_proj, config.num_heads * d, d);
    read("classifier", p.classifier, d, 1);
    read("clf_bias", p.clf_bias, 1, 1);
    return p;
}

namespace {

constexpr std::uint64_t kNeighborDropStream = 11;
constexpr std::uint64_t kCenterDropStream = 13;

Tensor feature_rows(const MultiRelationGraph& graph, std::span<const int> nodes) {
    Tensor t(static_cast<int>(nodes.size()), graph.feat_dim());
    double* out = t.ptr();
    for (int v : nodes) {
        const auto row = graph.feature_row(v);
        out = std::copy(row.begin(), row.end(), out);
    }
    return t;
}

// projection + label embedding for a node list; `mask_self` forces every
// label to unlabeled (center role)
Tensor embed_rows(const MultiRelationGraph& graph, std::span<const int> nodes, bool mask_self,
                  const CatGnnParams& params, const ModelConfig& config, bool training,
                  std::uint64_t dropout_seed) {
    Tensor feats = feature_rows(graph, nodes);
    std::vector<int> label_idx(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i)
        label_idx[i] =
            mask_self ? static_cast<int>(Label::kUnlabeled) : static_cast<int>(graph.label(nodes[i]));
    Tensor emb = ops::add(ops::add_row_bias(ops::matmul(feats, params.projection), params.proj_bias),
                          ops::gather_rows(params.label_embed, std::move(label_idx)));
    return ops::dropout(emb, config.dropout, dropout_seed, training);
}

struct RelationEdges {
    std::vector<int> center_pos;     // batch position per edge, ascending
    std::vector<int> neighbor_node;  // node id per edge
    std::vector<int> full_offsets;   // per batch position, empty segments allowed
    std::vector<int> compact_offsets;
    int num_edges = 0;
};

RelationEdges collect_edges(const AdjacencyList& rel, std::span<const int> centers) {
    RelationEdges e;
    e.full_offsets.reserve(centers.size() + 1);
    e.full_offsets.push_back(0);
    e.compact_offsets.push_back(0);
    for (std::size_t c = 0; c < centers.size(); ++c) {
        const auto nbrs = rel.neighbors(centers[c]);
        for (int u : nbrs) {
            e.center_pos.push_back(static_cast<int>(c));
            e.neighbor_node.push_back(u);
        }
        e.full_offsets.push_back(static_cast<int>(e.center_pos.size()));
        if (!nbrs.empty()) e.compact_offsets.push_back(static_cast<int>(e.center_pos.size()));
    }
    e.num_edges = static_cast<int>(e.center_pos.size());
    return e;
}

std::vector<int> offsets_for_subset(const std::vector<int>& edge_center_pos, int num_centers) {
    std::vector<int> counts(num_centers, 0);
    for (int c : edge_center_pos) ++counts[c];
    std::vector<int> offsets(num_centers + 1, 0);
    for (int c = 0; c < num_centers; ++c) offsets[c + 1] = offsets[c] + counts[c];
    return offsets;
}

// One attention layer over every relation: per-head attention on the
// original embeddings, Causal-Inspector/Intervener per variant, masked
// aggregation, relation outputs summed, then the output projection.
Tensor layer_forward(const MultiRelationGraph& graph, std::span<const int> centers,
                     const Tensor& emb_centers, const Tensor& emb_neighbors,
                     const std::unordered_map<int, int>& local_of_node,
                     const CatGnnParams& params, const ModelConfig& config) {
    const int batch = static_cast<int>(centers.size());
    const int heads = config.num_heads;
    const EnvPolicy policy = config.env_policy();

    std::optional<Tensor> total;
    auto accumulate = [&](std::optional<Tensor>& acc, const Tensor& t) {
        acc = acc ? ops::add(*acc, t) : t;
    };

    for (int r = 0; r < graph.num_relations(); ++r) {
        const RelationEdges edges = collect_edges(graph.relation(r), centers);

        std::vector<Tensor> alpha(heads);  // per-head attention, E x 1
        std::vector<Tensor> leaky(heads);  // pre-softmax scores, reused by D-CaT
        Tensor ne;
        if (edges.num_edges > 0) {
            std::vector<int> neighbor_local(edges.num_edges);
            for (int e = 0; e < edges.num_edges; ++e)
                neighbor_local[e] = local_of_node.at(edges.neighbor_node[e]);
            Tensor ce = ops::gather_rows(emb_centers, edges.center_pos);
            ne = ops::gather_rows(emb_neighbors, neighbor_local);
            Tensor pair = ops::concat_cols(ce, ne);
            for (int h = 0; h < heads; ++h) {
                leaky[h] = ops::leaky_relu(ops::matmul(pair, params.attn_vectors[h]),
                                           config.leaky_slope);
                alpha[h] = ops::segment_softmax(leaky[h], edges.compact_offsets);
            }
        }

        // --- Causal-Inspector: per-center partitions (plain values) ---
        std::vector<int> pass_edges;             // aggregated with original features
        std::vector<int> env_edges;              // replaced by causal mixup
        std::vector<int> participant_local;      // rows of emb_neighbors per participant
        std::vector<int> participant_offsets{0};
        std::vector<double> importance_weights;  // PI/FI constants, aligned with participants
        std::vector<std::uint8_t> has_any_kept(batch, 0);

        const bool inspect = config.variant != Variant::kNCat && edges.num_edges > 0;
        if (!inspect) {
            pass_edges.resize(edges.num_edges);
            std::iota(pass_edges.begin(), pass_edges.end(), 0);
            for (int e = 0; e < edges.num_edges; ++e) has_any_kept[edges.center_pos[e]] = 1;
        } else {
            const WeightMode mode =
                variant_uses_mixup(config.variant) ? variant_weight_mode(config.variant)
                                                   : WeightMode::kImportance;
            for (std::size_t s = 0; s + 1 < edges.compact_offsets.size(); ++s) {
                const int lo = edges.compact_offsets[s];
                const int hi = edges.compact_offsets[s + 1];
                const int m = hi - lo;
                std::vector<double> imp(m, 0.0);
                for (int h = 0; h < heads; ++h) {
                    const auto av = alpha[h].values();
                    for (int e = lo; e < hi; ++e) imp[e - lo] += av[e];
                }
                for (double& v : imp) v /= heads;
                std::vector<int> ids(edges.neighbor_node.begin() + lo,
                                     edges.neighbor_node.begin() + hi);
                NeighborhoodPartition part = partition_neighborhood(
                    std::move(imp), std::move(ids), policy, centers[edges.center_pos[lo]]);

                if (config.variant == Variant::kDCat) {
                    for (int pos : part.causal_set) {
                        pass_edges.push_back(lo + pos);
                        has_any_kept[edges.center_pos[lo]] = 1;
                    }
                    continue;
                }
                has_any_kept[edges.center_pos[lo]] = 1;
                for (int pos : part.causal_set) pass_edges.push_back(lo + pos);
                if (part.causal_set.empty()) {
                    // no donors; environment neighbors pass through unchanged
                    for (int pos : part.env_set) pass_edges.push_back(lo + pos);
                    continue;
                }
                const std::vector<int> selected = part.env_set.empty()
                                                      ? std::vector<int>{}
                                                      : select_causal(part, config.r_c);
                for (int pos : part.env_set) {
                    env_edges.push_back(lo + pos);
                    participant_local.push_back(local_of_node.at(part.neighbor_ids[pos]));
                    for (int c : selected)
                        participant_local.push_back(local_of_node.at(part.neighbor_ids[c]));
                    participant_offsets.push_back(static_cast<int>(participant_local.size()));
                    if (mode == WeightMode::kImportance) {
                        double z = part.importance[pos];
                        for (int c : selected) z += part.importance[c];
                        importance_weights.push_back(part.importance[pos] / z);
                        for (int c : selected) importance_weights.push_back(part.importance[c] / z);
                    }
                }
            }
            std::sort(pass_edges.begin(), pass_edges.end());
        }

        // --- masked aggregation per head ---
        Tensor ne_pass;
        std::vector<int> pass_offsets;
        if (!pass_edges.empty()) {
            ne_pass = ops::gather_rows(ne, pass_edges);
            std::vector<int> pass_center(pass_edges.size());
            for (std::size_t i = 0; i < pass_edges.size(); ++i)
                pass_center[i] = edges.center_pos[pass_edges[i]];
            pass_offsets = offsets_for_subset(pass_center, batch);
        }

        // intervened features, shared by all heads
        Tensor mixed;
        std::vector<int> env_offsets;
        if (!env_edges.empty()) {
            Tensor part_emb = ops::gather_rows(emb_neighbors, participant_local);
            Tensor mix_w;
            if (variant_weight_mode(config.variant) == WeightMode::kLearned) {
                Tensor sc = ops::add_row_bias(ops::matmul(part_emb, params.mixup_scorer),
                                              params.mixup_bias);
                mix_w = ops::segment_softmax(sc, participant_offsets);
            } else {
                mix_w = Tensor(static_cast<int>(importance_weights.size()), 1, importance_weights);
            }
            mixed = ops::weighted_segment_sum(mix_w, part_emb, participant_offsets);
            std::vector<int> env_center(env_edges.size());
            for (std::size_t i = 0; i < env_edges.size(); ++i)
                env_center[i] = edges.center_pos[env_edges[i]];
            env_offsets = offsets_for_subset(env_center, batch);
        }

        // self-only aggregation for centers with nothing to aggregate
        Tensor fallback_pre;
        {
            std::vector<int> fb;
            for (int c = 0; c < batch; ++c)
                if (!has_any_kept[c]) fb.push_back(c);
            if (!fb.empty()) {
                Tensor fb_emb = ops::gather_rows(emb_centers, fb);
                Tensor ones(static_cast<int>(fb.size()), 1,
                            std::vector<double>(fb.size(), 1.0));
                fallback_pre = ops::weighted_segment_sum(ones, fb_emb, offsets_for_subset(fb, batch));
            }
        }

        std::optional<Tensor> concat;
        for (int h = 0; h < heads; ++h) {
            std::optional<Tensor> pre;
            if (!pass_edges.empty()) {
                Tensor aw;
                if (config.variant == Variant::kDCat) {
                    // restrict scores to the kept edges and renormalize
                    Tensor kept_scores = ops::gather_rows(leaky[h], pass_edges);
                    std::vector<int> compact{0};
                    for (std::size_t c = 0; c < pass_offsets.size() - 1; ++c)
                        if (pass_offsets[c + 1] > pass_offsets[c])
                            compact.push_back(pass_offsets[c + 1]);
                    aw = ops::segment_softmax(kept_scores, compact);
                } else {
                    aw = ops::gather_rows(alpha[h], pass_edges);
                }
                accumulate(pre, ops::weighted_segment_sum(aw, ne_pass, pass_offsets));
            }
            if (!env_edges.empty()) {
                Tensor aw = ops::gather_rows(alpha[h], env_edges);
                accumulate(pre, ops::weighted_segment_sum(aw, mixed, env_offsets));
            }
            if (fallback_pre.data) accumulate(pre, fallback_pre);
            Tensor activated = ops::elu(*pre);
            concat = concat ? ops::concat_cols(*concat, activated) : activated;
        }
        accumulate(total, *concat);
    }

    return ops::matmul(*total, params.output_proj);
}

}  // namespace

Tensor embed_node(const MultiRelationGraph& graph, int node_id, const CatGnnParams& params,
                  bool mask_self, bool training, std::uint64_t dropout_seed, double dropout_rate) {
    if (node_id < 0 || node_id >= graph.num_nodes()) throw IndexError("embed_node: id out of range");
    ModelConfig cfg;
    cfg.hidden_dim = params.projection.cols;
    cfg.num_heads = static_cast<int>(params.attn_vectors.size());
    cfg.dropout = dropout_rate;
    const int ids[1] = {node_id};
    return embed_rows(graph, ids, mask_self, params, cfg, training, dropout_seed);
}

Tensor attention_scores(const Tensor& center_emb, const Tensor& neighbor_embs, int head,
                        const CatGnnParams& params, double leaky_slope) {
    if (neighbor_embs.rows == 0) throw EmptyNeighborhood("attention_scores: no neighbors");
    if (head < 0 || head >= static_cast<int>(params.attn_vectors.size()))
        throw IndexError("attention_scores: head out of range");
    std::vector<int> zeros(neighbor_embs.rows, 0);
    Tensor centers = ops::gather_rows(center_emb, zeros);  // broadcast the single center row
    Tensor pair = ops::concat_cols(centers, neighbor_embs);
    Tensor scores = ops::leaky_relu(ops::matmul(pair, params.attn_vectors[head]), leaky_slope);
    return ops::segment_softmax(scores, {0, neighbor_embs.rows});
}

Tensor aggregate_neighborhood(const std::vector<Tensor>& per_head_weights,
                              const Tensor& intervened_features, const CatGnnParams& params) {
    if (per_head_weights.empty()) throw InvalidInput("aggregate_neighborhood: no heads");
    std::optional<Tensor> concat;
    const std::vector<int> offsets{0, intervened_features.rows};
    for (const Tensor& w : per_head_weights) {
        if (w.rows != intervened_features.rows)
            throw ShapeError("aggregate_neighborhood: weight/feature row mismatch");
        Tensor h = ops::elu(ops::weighted_segment_sum(w, intervened_features, offsets));
        concat = concat ? ops::concat_cols(*concat, h) : h;
    }
    return ops::matmul(*concat, params.output_proj);
}

Tensor forward(const MultiRelationGraph& graph, std::span<const int> batch,
               const CatGnnParams& params, const ModelConfig& config, bool training,
               std::uint64_t seed) {
    config.validate();
    if (batch.empty()) throw InvalidInput("forward: empty batch");
    for (int v : batch)
        if (v < 0 || v >= graph.num_nodes()) throw IndexError("forward: batch id out of range");

    std::vector<int> all_nodes;
    std::unordered_map<int, int> local_all;
    auto node_identity = [&](int n) {
        all_nodes.resize(n);
        std::iota(all_nodes.begin(), all_nodes.end(), 0);
        local_all.reserve(n);
        for (int v = 0; v < n; ++v) local_all.emplace(v, v);
    };

    if (config.depth == 1) {
        // only the batch neighborhoods are needed
        std::vector<int> unique;
        for (int r = 0; r < graph.num_relations(); ++r)
            for (int v : batch) {
                const auto nbrs = graph.relation(r).neighbors(v);
                unique.insert(unique.end(), nbrs.begin(), nbrs.end());
            }
        std::sort(unique.begin(), unique.end());
        unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
        std::unordered_map<int, int> local;
        local.reserve(unique.size());
        for (std::size_t i = 0; i < unique.size(); ++i) local.emplace(unique[i], static_cast<int>(i));

        Tensor emb_nbr = unique.empty()
                             ? Tensor::zeros(0, config.hidden_dim)
                             : embed_rows(graph, unique, false, params, config, training,
                                          mix_seed(seed, kNeighborDropStream));
        Tensor emb_cent = embed_rows(graph, batch, true, params, config, training,
                                     mix_seed(seed, kCenterDropStream));
        Tensor m = layer_forward(graph, batch, emb_cent, emb_nbr, local, params, config);
        return ops::add_row_bias(ops::matmul(m, params.classifier), params.clf_bias);
    }

    // deeper models run layerwise over the full graph with tied weights;
    // label embeddings and dropout enter at the first layer only
    node_identity(graph.num_nodes());
    Tensor hidden_nbr = embed_rows(graph, all_nodes, false, params, config, training,
                                   mix_seed(seed, kNeighborDropStream));
    Tensor hidden_cent = embed_rows(graph, all_nodes, true, params, config, training,
                                    mix_seed(seed, kCenterDropStream));
    Tensor hidden = layer_forward(graph, all_nodes, hidden_cent, hidden_nbr, local_all, params, config);
    for (int layer = 1; layer < config.depth - 1; ++layer)
        hidden = layer_forward(graph, all_nodes, hidden, hidden, local_all, params, config);
    std::vector<int> batch_ids(batch.begin(), batch.end());
    Tensor cent_final = ops::gather_rows(hidden, batch_ids);
    Tensor m = layer_forward(graph, batch, cent_final, hidden, local_all, params, config);
    return ops::add_row_bias(ops::matmul(m, params.classifier), params.clf_bias);
}

std::vector<double> predict_scores(const MultiRelationGraph& graph, std::span<const int> ids,
                                   const CatGnnParams& params, const ModelConfig& config,
                                   int batch_size) {
    std::vector<double> scores(ids.size());
    for (std::size_t start = 0; start < ids.size(); start += batch_size) {
        const std::size_t count = std::min<std::size_t>(batch_size, ids.size() - start);
        Tensor logits = forward(graph, ids.subspan(start, count), params, config, false, 0);
        Tensor probs = ops::sigmoid(logits);
        for (std::size_t i = 0; i < count; ++i) scores[start + i] = (*probs.data)[i];
    }
    return scores;
}

}  // namespace catgnn
