#pragma once

#include <span>
#include <vector>

#include "catgnn/tensor.hpp"

namespace catgnn {

// Variant grid: environment selection by Proportion or Fixed count x mixup
// weights Learned or Importance-derived, plus the two ablations (no
// intervention at all / environment nodes deleted from aggregation).
enum class Variant { kPL, kPI, kFL, kFI, kNCat, kDCat };

enum class WeightMode { kLearned, kImportance };
enum class EnvRounding { kFloor, kCeil };

const char* variant_name(Variant v);
Variant variant_from_name(const std::string& name);
bool variant_uses_mixup(Variant v);
WeightMode variant_weight_mode(Variant v);  // mixup variants only
bool variant_uses_fixed_count(Variant v);

// Environment-set sizing policy (Causal-Inspector).
struct EnvPolicy {
    bool by_proportion = true;
    double r_e = 0.3;        // proportion of the neighborhood
    int fixed_count = 2;     // used when by_proportion is false
    EnvRounding rounding = EnvRounding::kFloor;
};

// Importance scores and the environment/causal partition of one center
// node's neighborhood. env_set/causal_set hold positions into the
// neighborhood, not node ids.
struct NeighborhoodPartition {
    int center = -1;
    std::vector<int> neighbor_ids;   // node id per position (tie-breaking)
    std::vector<double> importance;  // per position, sums to 1
    std::vector<int> env_set;
    std::vector<int> causal_set;
};

// Mixup recipe for one environment neighbor: the participant positions are
// [env_pos, causal...] and weights align with them (weights[0] is the env
// node's self-weight). Weights sum to 1.
struct MixupPlan {
    int env_pos = -1;
    std::vector<int> causal_positions;
    std::vector<double> weights;
};

// Head-mean attention weights normalized over the neighborhood. Each input
// head must already be softmax-normalized.
std::vector<double> node_importance(std::span<const std::vector<double>> head_weights);

// Splits a neighborhood into environment (lowest-importance) and causal
// positions. Ties break toward the lower node id entering the environment
// set first.
NeighborhoodPartition partition_neighborhood(std::vector<double> importance,
                                             std::vector<int> neighbor_ids,
                                             const EnvPolicy& policy, int center = -1);

// Top-importance causal positions at proportion r_c: k = max(1, floor(r_c*|S_c|)).
std::vector<int> select_causal(const NeighborhoodPartition& part, double r_c);

// Builds the mixup recipe for one environment neighbor. embeddings holds one
// row per neighborhood position. Learned mode scores each participant with
// scorer_w/scorer_b and softmaxes; importance mode normalizes the
// participants' importance scores. Throws NoCausalNodes when the causal set
// is empty.
MixupPlan plan_mixup(const NeighborhoodPartition& part, int env_pos, WeightMode mode, double r_c,
                     const std::vector<std::vector<double>>& embeddings, const Tensor& scorer_w,
                     const Tensor& scorer_b);

// x'_j = a_j x_j + sum a_i x_ci as a fresh row; participants are never
// modified, so interventions for different centers cannot observe each
// other.
std::vector<double> causal_mixup(const MixupPlan& plan,
                                 const std::vector<std::vector<double>>& embeddings);

struct VariantResult {
    // intervened feature row per kept neighborhood position
    std::vector<std::vector<double>> features;
    // neighborhood positions that remain in the aggregation (all positions
    // except for the D-CaT ablation, which drops the environment set)
    std::vector<int> kept_positions;
};

struct VariantConfig {
    Variant variant = Variant::kPL;
    double r_c = 0.5;
};

VariantResult apply_variant(const VariantConfig& config, const NeighborhoodPartition& part,
                            const std::vector<std::vector<double>>& embeddings,
                            const Tensor& scorer_w, const Tensor& scorer_b);

}  // namespace catgnn
