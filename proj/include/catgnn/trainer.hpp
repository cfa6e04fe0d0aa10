#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "catgnn/graph.hpp"
#include "catgnn/metrics.hpp"
#include "catgnn/model.hpp"

namespace catgnn {

struct TrainConfig {
    double learning_rate = 0.003;
    int batch_size = 256;
    int epochs = 100;
    int early_stop_patience = 10;  // epochs without a validation AUC improvement
    double weight_decay = 1e-4;    // eta in the BCE + eta * ||params||^2 objective
    std::uint64_t seed = 0;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;

    void validate() const;
};

struct EpochStats {
    double train_loss = 0.0;  // masked BCE + L2 term, averaged over batches
    double valid_auc = 0.0;
    double valid_f1 = 0.0;
    double valid_ap = 0.0;
    double seconds = 0.0;
};

struct TrainReport {
    std::vector<EpochStats> epochs;
    int best_epoch = -1;  // 0-based epoch whose parameters are returned
    EvalResult test;
    double final_train_accuracy = 0.0;
    long long total_steps = 0;
    double total_seconds = 0.0;
    std::size_t num_parameters = 0;
};

struct AdamState {
    std::vector<Tensor> m;
    std::vector<Tensor> v;
    long long t = 0;

    static AdamState like(const CatGnnParams& params);
};

// One bias-corrected Adam update, applied in place. The L2 term of the
// objective enters as 2 * weight_decay * theta added to each gradient.
void adam_step(CatGnnParams& params, const std::vector<Tensor>& grads, AdamState& state,
               const TrainConfig& config);

// Semi-supervised training over mini-batches of labeled train nodes. Only
// labels of the train split are visible to the model input; validation/test
// nodes enter as unlabeled neighbors. Returns the parameters of the best
// validation-AUC epoch.
std::pair<CatGnnParams, TrainReport> train(const MultiRelationGraph& graph,
                                           const DatasetSplit& split, const ModelConfig& model_config,
                                           const TrainConfig& train_config);

}  // namespace catgnn
