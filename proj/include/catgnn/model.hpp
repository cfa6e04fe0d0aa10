#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "catgnn/causal.hpp"
#include "catgnn/graph.hpp"
#include "catgnn/tensor.hpp"

namespace catgnn {

struct ModelConfig {
    int hidden_dim = 256;
    int num_heads = 4;
    double dropout = 0.2;
    double leaky_slope = 0.2;
    Variant variant = Variant::kPL;
    double r_e = 0.3;
    double r_c = 0.5;
    int fixed_env_count = 2;
    EnvRounding env_rounding = EnvRounding::kFloor;
    int depth = 1;  // attention layers; > 1 reuses the same weights per layer

    EnvPolicy env_policy() const;
    void validate() const;
};

// All trainable parameters. Tensors are plain values; tracked(tape) returns
// handles sharing the same buffers so Adam updates apply in place.
struct CatGnnParams {
    Tensor projection;   // d_in x d
    Tensor proj_bias;    // 1 x d
    Tensor label_embed;  // 3 x d, rows indexed by Label
    std::vector<Tensor> attn_vectors;  // per head, 2d x 1
    Tensor mixup_scorer;  // d x 1
    Tensor mixup_bias;    // 1 x 1
    Tensor output_proj;   // (H*d) x d
    Tensor classifier;    // d x 1
    Tensor clf_bias;      // 1 x 1

    static CatGnnParams init(int feat_dim, const ModelConfig& config, std::uint64_t seed);

    std::vector<Tensor*> all();
    std::vector<const Tensor*> all() const;
    std::vector<std::string> names() const;
    std::size_t num_parameters() const;
    CatGnnParams tracked(Tape& tape) const;
    CatGnnParams clone() const;

    void save(const std::string& path, const ModelConfig& config) const;
    // validates every shape against `config`
    static CatGnnParams load(const std::string& path, ModelConfig& config);
};

// projection(features[node]) + label embedding, with the label forced to
// unlabeled when mask_self is set. Dropout only in training mode.
Tensor embed_node(const MultiRelationGraph& graph, int node_id, const CatGnnParams& params,
                  bool mask_self, bool training = false, std::uint64_t dropout_seed = 0,
                  double dropout_rate = 0.0);

// Per-head attention over one neighborhood: softmax_j of
// LeakyReLU(W_a^T [center (+) neighbor_j]). Throws EmptyNeighborhood when
// there are no neighbors.
Tensor attention_scores(const Tensor& center_emb, const Tensor& neighbor_embs, int head,
                        const CatGnnParams& params, double leaky_slope);

// Masked aggregation: per head ELU(sum_j alpha_j x'_j), heads concatenated,
// then multiplied by the output projection. Weights and features must share
// the same row count.
Tensor aggregate_neighborhood(const std::vector<Tensor>& per_head_weights,
                              const Tensor& intervened_features, const CatGnnParams& params);

// Full model: embeds the batch centers (self label masked) and their
// temporal neighbors, scores per-head attention, applies the
// Causal-Inspector/Causal-Intervener per config.variant, aggregates over
// relations and classifies. Deterministic given (params, seed, mode).
Tensor forward(const MultiRelationGraph& graph, std::span<const int> batch,
               const CatGnnParams& params, const ModelConfig& config, bool training,
               std::uint64_t seed);

// Eval-mode sigmoid scores for a node list, computed in batches.
std::vector<double> predict_scores(const MultiRelationGraph& graph, std::span<const int> ids,
                                   const CatGnnParams& params, const ModelConfig& config,
                                   int batch_size = 256);

}  // namespace catgnn
