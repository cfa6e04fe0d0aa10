#include "catgnn/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include "catgnn/kernels.hpp"
#include "catgnn/rng.hpp"

namespace catgnn {

void TrainConfig::validate() const {
    if (learning_rate <= 0.0) throw InvalidInput("train: learning_rate must be positive");
    if (batch_size < 1) throw InvalidInput("train: batch_size must be >= 1");
    if (epochs < 1) throw InvalidInput("train: epochs must be >= 1");
    if (early_stop_patience < 1) throw InvalidInput("train: early_stop_patience must be >= 1");
    if (weight_decay < 0.0) throw InvalidInput("train: weight_decay must be >= 0");
    if (adam_beta1 < 0.0 || adam_beta1 >= 1.0 || adam_beta2 < 0.0 || adam_beta2 >= 1.0 ||
        adam_eps <= 0.0)
        throw InvalidInput("train: bad Adam constants");
}

AdamState AdamState::like(const CatGnnParams& params) {
    AdamState s;
    for (const Tensor* p : params.all()) {
        s.m.push_back(Tensor::zeros(p->rows, p->cols));
        s.v.push_back(Tensor::zeros(p->rows, p->cols));
    }
    return s;
}

void adam_step(CatGnnParams& params, const std::vector<Tensor>& grads, AdamState& state,
               const TrainConfig& config) {
    auto ts = params.all();
    if (grads.size() != ts.size() || state.m.size() != ts.size())
        throw ShapeError("adam_step: parameter/gradient/state count mismatch");
    ++state.t;
    const double bc1 = 1.0 - std::pow(config.adam_beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(config.adam_beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < ts.size(); ++i) {
        Tensor& theta = *ts[i];
        if (grads[i].rows != theta.rows || grads[i].cols != theta.cols)
            throw ShapeError("adam_step: gradient shape mismatch");
        auto& m = *state.m[i].data;
        auto& v = *state.v[i].data;
        auto& g = *grads[i].data;
        auto& w = *theta.data;
        for (std::size_t j = 0; j < w.size(); ++j) {
            const double grad = g[j] + 2.0 * config.weight_decay * w[j];
            m[j] = config.adam_beta1 * m[j] + (1.0 - config.adam_beta1) * grad;
            v[j] = config.adam_beta2 * v[j] + (1.0 - config.adam_beta2) * grad * grad;
            const double m_hat = m[j] / bc1;
            const double v_hat = v[j] / bc2;
            w[j] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.adam_eps);
        }
    }
}

namespace {

double l2_of(const CatGnnParams& params) {
    double total = 0.0;
    for (const Tensor* p : params.all()) total += kernels::dot(p->ptr(), p->ptr(), p->size());
    return total;
}

std::vector<int> labels_as_int(const MultiRelationGraph& graph, std::span<const int> ids) {
    std::vector<int> out;
    out.reserve(ids.size());
    for (int v : ids) out.push_back(graph.label(v) == Label::kFraud ? 1 : 0);
    return out;
}

}  // namespace

std::pair<CatGnnParams, TrainReport> train(const MultiRelationGraph& graph,
                                           const DatasetSplit& split, const ModelConfig& model_config,
                                           const TrainConfig& train_config) {
    model_config.validate();
    train_config.validate();
    if (split.train_ids.empty()) throw InvalidSplit("train: no training nodes");
    for (int v : split.train_ids)
        if (graph.label(v) == Label::kUnlabeled)
            throw InvalidSplit("train: unlabeled node " + std::to_string(v) + " in train split");

    // the model may only condition on train labels
    std::vector<Label> visible(graph.num_nodes(), Label::kUnlabeled);
    for (int v : split.train_ids) visible[v] = graph.label(v);
    const MultiRelationGraph view = graph.relabeled(std::move(visible));

    CatGnnParams params = CatGnnParams::init(graph.feat_dim(), model_config,
                                             mix_seed(train_config.seed, 17));
    AdamState adam = AdamState::like(params);
    std::mt19937_64 shuffle_rng(mix_seed(train_config.seed, 23));

    TrainReport report;
    report.num_parameters = params.num_parameters();

    const bool has_valid = [&] {
        int pos = 0, neg = 0;
        for (int v : split.valid_ids) {
            if (graph.label(v) == Label::kFraud) ++pos;
            if (graph.label(v) == Label::kBenign) ++neg;
        }
        return pos > 0 && neg > 0;
    }();

    CatGnnParams best = params.clone();
    double best_auc = -1.0;
    int epochs_since_best = 0;
    std::vector<int> order = split.train_ids;

    const auto t_start = std::chrono::steady_clock::now();
    for (int epoch = 0; epoch < train_config.epochs; ++epoch) {
        const auto e_start = std::chrono::steady_clock::now();
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        double loss_sum = 0.0;
        int batches = 0;
        for (std::size_t start = 0; start < order.size(); start += train_config.batch_size) {
            const std::size_t count =
                std::min<std::size_t>(train_config.batch_size, order.size() - start);
            const std::span<const int> batch(order.data() + start, count);
            Tape tape;
            CatGnnParams live = params.tracked(tape);
            Tensor logits;
            try {
                logits = forward(view, batch, live, model_config, true,
                                 mix_seed(train_config.seed,
                                          (static_cast<std::uint64_t>(epoch) << 24) | batches));
            } catch (const NumericsError& e) {
                throw NumericsError("epoch " + std::to_string(epoch) + " batch " +
                                    std::to_string(batches) + ": " + e.what());
            }
            std::vector<double> targets(count);
            for (std::size_t i = 0; i < count; ++i)
                targets[i] = graph.label(batch[i]) == Label::kFraud ? 1.0 : 0.0;
            Tensor loss = ops::bce_with_logits(
                logits, Tensor(static_cast<int>(count), 1, std::move(targets)),
                std::vector<std::uint8_t>(count, 1));
            tape.backward(loss);

            std::vector<Tensor> grads;
            for (Tensor* p : live.all()) grads.push_back(tape.grad(*p));
            adam_step(params, grads, adam, train_config);
            ++report.total_steps;
            ++batches;
            loss_sum += loss.item() + train_config.weight_decay * l2_of(live);
        }

        EpochStats stats;
        stats.train_loss = loss_sum / std::max(1, batches);
        if (has_valid) {
            const auto scores = predict_scores(view, split.valid_ids, params, model_config,
                                               train_config.batch_size);
            const auto truth = labels_as_int(graph, split.valid_ids);
            stats.valid_auc = roc_auc(scores, truth);
            stats.valid_f1 = f1_macro(scores, truth, 0.5);
            stats.valid_ap = average_precision(scores, truth);
        }
        stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - e_start).count();
        report.epochs.push_back(stats);

        if (!has_valid) {
            best = params.clone();
            report.best_epoch = epoch;
            continue;
        }
        if (stats.valid_auc > best_auc) {
            best_auc = stats.valid_auc;
            best = params.clone();
            report.best_epoch = epoch;
            epochs_since_best = 0;
        } else if (++epochs_since_best >= train_config.early_stop_patience) {
            break;
        }
    }
    report.total_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();

    // final metrics with the best parameters
    if (!split.test_ids.empty()) {
        const auto scores = predict_scores(view, split.test_ids, best, model_config,
                                           train_config.batch_size);
        const auto truth = labels_as_int(graph, split.test_ids);
        report.test = evaluate_scores(scores, truth);
    }
    {
        const auto scores = predict_scores(view, split.train_ids, best, model_config,
                                           train_config.batch_size);
        int correct = 0;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            const int pred = scores[i] >= 0.5 ? 1 : 0;
            correct += pred == (graph.label(split.train_ids[i]) == Label::kFraud ? 1 : 0);
        }
        report.final_train_accuracy = static_cast<double>(correct) / scores.size();
    }
    return {std::move(best), std::move(report)};
}

}  // namespace catgnn
