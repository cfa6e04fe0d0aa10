#pragma once

#include <span>
#include <vector>

#include "catgnn/error.hpp"

namespace catgnn {

struct EvalResult {
    double auc = 0.0;
    double f1_macro = 0.0;
    double ap = 0.0;
    int n_pos = 0;
    int n_neg = 0;
    double threshold = 0.5;
    bool score_ties = false;  // AP ranking hit equal scores; ties broken by input order
};

// Tie-aware rank statistic: mean over (pos, neg) pairs of
// [score_p > score_n] + 0.5 [score_p == score_n]. Needs both classes present.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

// Macro mean of the per-class F1 of fraud-as-positive and benign-as-positive.
// A class with P + R = 0 contributes 0. Predictions are score >= threshold.
double f1_macro(std::span<const double> scores, std::span<const int> labels, double threshold);

// Step-wise average precision over the score-descending ranking; ties keep
// input order. Needs at least one positive.
double average_precision(std::span<const double> scores, std::span<const int> labels);

EvalResult evaluate_scores(std::span<const double> scores, std::span<const int> labels,
                           double threshold = 0.5);

}  // namespace catgnn
