#include "catgnn/metrics.hpp"

#include <algorithm>
#include <numeric>

namespace catgnn {

namespace {

void check_binary(std::span<const int> labels) {
    for (int y : labels)
        if (y != 0 && y != 1) throw InvalidInput("metrics: labels must be 0/1");
}

}  // namespace

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw InvalidInput("roc_auc: length mismatch");
    check_binary(labels);
    const int n = static_cast<int>(scores.size());
    int n_pos = 0;
    for (int y : labels) n_pos += y;
    const int n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) throw UndefinedMetric("roc_auc: needs both classes");

    // average ranks with midrank tie handling
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return scores[a] < scores[b]; });
    std::vector<double> rank(n);
    int i = 0;
    while (i < n) {
        int j = i;
        while (j + 1 < n && scores[idx[j + 1]] == scores[idx[i]]) ++j;
        const double mid = 0.5 * (i + j) + 1.0;  // ranks are 1-based
        for (int k = i; k <= j; ++k) rank[idx[k]] = mid;
        i = j + 1;
    }
    double rank_sum_pos = 0.0;
    for (int k = 0; k < n; ++k)
        if (labels[k] == 1) rank_sum_pos += rank[k];
    return (rank_sum_pos - 0.5 * n_pos * (n_pos + 1.0)) / (static_cast<double>(n_pos) * n_neg);
}

double f1_macro(std::span<const double> scores, std::span<const int> labels, double threshold) {
    if (scores.size() != labels.size() || scores.empty())
        throw InvalidInput("f1_macro: bad input lengths");
    check_binary(labels);
    auto f1_for = [&](int positive_class) {
        int tp = 0, fp = 0, fn = 0;
        for (std::size_t k = 0; k < scores.size(); ++k) {
            const int pred_fraud = scores[k] >= threshold ? 1 : 0;
            const int pred = positive_class == 1 ? pred_fraud : 1 - pred_fraud;
            const int truth = positive_class == 1 ? labels[k] : 1 - labels[k];
            if (pred == 1 && truth == 1) ++tp;
            else if (pred == 1) ++fp;
            else if (truth == 1) ++fn;
        }
        const double p = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
        const double r = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
        return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
    };
    return 0.5 * (f1_for(1) + f1_for(0));
}

double average_precision(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size() || scores.empty())
        throw InvalidInput("average_precision: bad input lengths");
    check_binary(labels);
    int n_pos = 0;
    for (int y : labels) n_pos += y;
    if (n_pos == 0) throw UndefinedMetric("average_precision: no positives");

    const int n = static_cast<int>(scores.size());
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return scores[a] > scores[b]; });

    double ap = 0.0;
    int tp = 0;
    for (int rank = 0; rank < n; ++rank) {
        if (labels[idx[rank]] != 1) continue;
        ++tp;
        const double precision = static_cast<double>(tp) / (rank + 1);
        ap += precision / n_pos;  // recall step is 1/n_pos at each hit
    }
    return ap;
}

EvalResult evaluate_scores(std::span<const double> scores, std::span<const int> labels,
                           double threshold) {
    EvalResult r;
    r.threshold = threshold;
    for (int y : labels) (y == 1 ? r.n_pos : r.n_neg)++;
    r.auc = roc_auc(scores, labels);
    r.f1_macro = f1_macro(scores, labels, threshold);
    r.ap = average_precision(scores, labels);
    std::vector<double> sorted(scores.begin(), scores.end());
    std::sort(sorted.begin(), sorted.end());
    r.score_ties = std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end();
    return r;
}

}  // namespace catgnn
