#include "catgnn/causal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "catgnn/kernels.hpp"

namespace catgnn {

const char* variant_name(Variant v) {
    switch (v) {
        case Variant::kPL: return "PL";
        case Variant::kPI: return "PI";
        case Variant::kFL: return "FL";
        case Variant::kFI: return "FI";
        case Variant::kNCat: return "N_CAT";
        case Variant::kDCat: return "D_CAT";
    }
    return "?";
}

Variant variant_from_name(const std::string& name) {
    for (Variant v : {Variant::kPL, Variant::kPI, Variant::kFL, Variant::kFI, Variant::kNCat,
                      Variant::kDCat})
        if (name == variant_name(v)) return v;
    throw InvalidInput("unknown variant: " + name);
}

bool variant_uses_mixup(Variant v) {
    return v == Variant::kPL || v == Variant::kPI || v == Variant::kFL || v == Variant::kFI;
}

WeightMode variant_weight_mode(Variant v) {
    if (v == Variant::kPL || v == Variant::kFL) return WeightMode::kLearned;
    if (v == Variant::kPI || v == Variant::kFI) return WeightMode::kImportance;
    throw InvalidInput("variant has no mixup weights");
}

bool variant_uses_fixed_count(Variant v) { return v == Variant::kFL || v == Variant::kFI; }

std::vector<double> node_importance(std::span<const std::vector<double>> head_weights) {
    if (head_weights.empty()) throw InvalidInput("node_importance: no heads");
    const std::size_t m = head_weights.front().size();
    if (m == 0) throw EmptyNeighborhood("node_importance: empty neighborhood");
    std::vector<double> mean(m, 0.0);
    for (const auto& head : head_weights) {
        if (head.size() != m) throw ShapeError("node_importance: ragged head weights");
        for (std::size_t j = 0; j < m; ++j) mean[j] += head[j];
    }
    const double inv_h = 1.0 / static_cast<double>(head_weights.size());
    for (double& v : mean) v *= inv_h;
    // normalize over the neighborhood; a no-op when each head already sums
    // to 1, but kept so raw weights behave too
    const double total = std::accumulate(mean.begin(), mean.end(), 0.0);
    if (total <= 0.0) throw InvalidInput("node_importance: non-positive weight mass");
    for (double& v : mean) v /= total;
    return mean;
}

NeighborhoodPartition partition_neighborhood(std::vector<double> importance,
                                             std::vector<int> neighbor_ids,
                                             const EnvPolicy& policy, int center) {
    const int m = static_cast<int>(importance.size());
    if (m == 0) throw EmptyNeighborhood("partition_neighborhood: empty neighborhood");
    if (neighbor_ids.size() != importance.size())
        throw ShapeError("partition_neighborhood: ids/importance length mismatch");

    int env_count;
    if (policy.by_proportion) {
        if (policy.r_e < 0.0 || policy.r_e > 1.0)
            throw InvalidInput("partition_neighborhood: r_e must be in [0, 1]");
        const double want = policy.r_e * m;
        env_count = policy.rounding == EnvRounding::kFloor
                        ? static_cast<int>(std::floor(want))
                        : static_cast<int>(std::ceil(want));
        env_count = std::min(env_count, m);
    } else {
        if (policy.fixed_count < 0) throw InvalidInput("partition_neighborhood: negative fixed count");
        env_count = std::min(policy.fixed_count, m);
    }

    std::vector<int> by_importance(m);
    std::iota(by_importance.begin(), by_importance.end(), 0);
    std::sort(by_importance.begin(), by_importance.end(), [&](int a, int b) {
        if (importance[a] != importance[b]) return importance[a] < importance[b];
        return neighbor_ids[a] < neighbor_ids[b];
    });

    NeighborhoodPartition part;
    part.center = center;
    part.neighbor_ids = std::move(neighbor_ids);
    part.importance = std::move(importance);
    part.env_set.assign(by_importance.begin(), by_importance.begin() + env_count);
    part.causal_set.assign(by_importance.begin() + env_count, by_importance.end());
    std::sort(part.env_set.begin(), part.env_set.end());
    std::sort(part.causal_set.begin(), part.causal_set.end());
    return part;
}

std::vector<int> select_causal(const NeighborhoodPartition& part, double r_c) {
    if (r_c <= 0.0 || r_c > 1.0) throw InvalidInput("select_causal: r_c must be in (0, 1]");
    if (part.causal_set.empty()) throw NoCausalNodes("select_causal: causal set is empty");
    const int pool = static_cast<int>(part.causal_set.size());
    const int k = std::max(1, static_cast<int>(std::floor(r_c * pool)));

    std::vector<int> ranked = part.causal_set;
    std::sort(ranked.begin(), ranked.end(), [&](int a, int b) {
        if (part.importance[a] != part.importance[b]) return part.importance[a] > part.importance[b];
        return part.neighbor_ids[a] < part.neighbor_ids[b];
    });
    ranked.resize(k);
    std::sort(ranked.begin(), ranked.end());
    return ranked;
}

MixupPlan plan_mixup(const NeighborhoodPartition& part, int env_pos, WeightMode mode, double r_c,
                     const std::vector<std::vector<double>>& embeddings, const Tensor& scorer_w,
                     const Tensor& scorer_b) {
    if (std::find(part.env_set.begin(), part.env_set.end(), env_pos) == part.env_set.end())
        throw InvalidInput("plan_mixup: position is not an environment node");

    MixupPlan plan;
    plan.env_pos = env_pos;
    plan.causal_positions = select_causal(part, r_c);

    const std::size_t k = plan.causal_positions.size();
    plan.weights.resize(k + 1);
    if (mode == WeightMode::kImportance) {
        double z = part.importance[env_pos];
        for (int c : plan.causal_positions) z += part.importance[c];
        plan.weights[0] = part.importance[env_pos] / z;
        for (std::size_t i = 0; i < k; ++i)
            plan.weights[i + 1] = part.importance[plan.causal_positions[i]] / z;
    } else {
        if (embeddings.size() != part.importance.size())
            throw ShapeError("plan_mixup: embedding row per neighborhood position required");
        const int d = scorer_w.rows;
        auto score = [&](int pos) {
            if (static_cast<int>(embeddings[pos].size()) != d)
                throw ShapeError("plan_mixup: embedding width != scorer width");
            return kernels::dot(embeddings[pos].data(), scorer_w.ptr(), d) + scorer_b.item();
        };
        std::vector<double> s(k + 1);
        s[0] = score(env_pos);
        for (std::size_t i = 0; i < k; ++i) s[i + 1] = score(plan.causal_positions[i]);
        const double mx = *std::max_element(s.begin(), s.end());
        double z = 0.0;
        for (double& v : s) {
            v = std::exp(v - mx);
            z += v;
        }
        for (std::size_t i = 0; i < s.size(); ++i) plan.weights[i] = s[i] / z;
    }
    return plan;
}

std::vector<double> causal_mixup(const MixupPlan& plan,
                                 const std::vector<std::vector<double>>& embeddings) {
    if (plan.weights.size() != plan.causal_positions.size() + 1)
        throw ShapeError("causal_mixup: weight/participant count mismatch");
    const std::vector<double>& env = embeddings.at(plan.env_pos);
    std::vector<double> out(env.size(), 0.0);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = plan.weights[0] * env[j];
    for (std::size_t i = 0; i < plan.causal_positions.size(); ++i) {
        const std::vector<double>& c = embeddings.at(plan.causal_positions[i]);
        if (c.size() != out.size()) throw ShapeError("causal_mixup: ragged embeddings");
        for (std::size_t j = 0; j < out.size(); ++j) out[j] += plan.weights[i + 1] * c[j];
    }
    return out;
}

VariantResult apply_variant(const VariantConfig& config, const NeighborhoodPartition& part,
                            const std::vector<std::vector<double>>& embeddings,
                            const Tensor& scorer_w, const Tensor& scorer_b) {
    const int m = static_cast<int>(part.importance.size());
    VariantResult out;

    if (config.variant == Variant::kDCat) {
        out.kept_positions = part.causal_set;
        for (int pos : out.kept_positions) out.features.push_back(embeddings.at(pos));
        return out;
    }

    out.kept_positions.resize(m);
    std::iota(out.kept_positions.begin(), out.kept_positions.end(), 0);
    out.features.assign(embeddings.begin(), embeddings.end());
    if (config.variant == Variant::kNCat) return out;

    const WeightMode mode = variant_weight_mode(config.variant);
    for (int env_pos : part.env_set) {
        if (part.causal_set.empty()) break;  // nothing to blend with; pass through
        MixupPlan plan = plan_mixup(part, env_pos, mode, config.r_c, embeddings, scorer_w, scorer_b);
        out.features[env_pos] = causal_mixup(plan, embeddings);
    }
    return out;
}

}  // namespace catgnn
