#include "catgnn/splitting.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <tuple>

namespace catgnn {

namespace {

// largest-remainder apportionment of n into three parts
std::array<int, 3> apportion(int n, double train_ratio, double valid_ratio) {
    const std::array<double, 3> want = {train_ratio * n, valid_ratio * n,
                                        (1.0 - train_ratio - valid_ratio) * n};
    std::array<int, 3> got;
    std::array<double, 3> rem;
    int assigned = 0;
    for (int i = 0; i < 3; ++i) {
        got[i] = static_cast<int>(std::floor(want[i]));
        rem[i] = want[i] - got[i];
        assigned += got[i];
    }
    while (assigned < n) {
        int best = 0;
        for (int i = 1; i < 3; ++i)
            if (rem[i] > rem[best]) best = i;
        ++got[best];
        rem[best] = -1.0;
        ++assigned;
    }
    return got;
}

}  // namespace

DatasetSplit stratified_split(std::span<const Label> labels, double train_ratio,
                              double valid_ratio, std::uint64_t seed) {
    if (train_ratio <= 0.0 || valid_ratio < 0.0 || train_ratio + valid_ratio > 1.0)
        throw InvalidInput("stratified_split: bad ratios");
    std::mt19937_64 rng(seed);
    DatasetSplit split;
    for (Label cls : {Label::kBenign, Label::kFraud}) {
        std::vector<int> ids;
        for (int v = 0; v < static_cast<int>(labels.size()); ++v)
            if (labels[v] == cls) ids.push_back(v);
        std::shuffle(ids.begin(), ids.end(), rng);
        const auto counts = apportion(static_cast<int>(ids.size()), train_ratio, valid_ratio);
        split.train_ids.insert(split.train_ids.end(), ids.begin(), ids.begin() + counts[0]);
        split.valid_ids.insert(split.valid_ids.end(), ids.begin() + counts[0],
                               ids.begin() + counts[0] + counts[1]);
        split.test_ids.insert(split.test_ids.end(), ids.begin() + counts[0] + counts[1], ids.end());
    }
    std::sort(split.train_ids.begin(), split.train_ids.end());
    std::sort(split.valid_ids.begin(), split.valid_ids.end());
    std::sort(split.test_ids.begin(), split.test_ids.end());
    return split;
}

DatasetSplit temporal_split(std::span<const Label> labels, std::span<const std::int64_t> times,
                            double train_quantile, double valid_fraction) {
    if (labels.size() != times.size()) throw InvalidInput("temporal_split: length mismatch");
    if (train_quantile <= 0.0 || train_quantile >= 1.0)
        throw InvalidInput("temporal_split: train_quantile must be in (0, 1)");
    if (valid_fraction < 0.0 || valid_fraction >= train_quantile)
        throw InvalidInput("temporal_split: valid_fraction must be in [0, train_quantile)");

    // order labeled nodes by (time, id); the leading train_quantile fraction
    // is train, with its trailing valid_fraction (of all labeled nodes) as
    // validation
    std::vector<int> ids;
    for (int v = 0; v < static_cast<int>(labels.size()); ++v)
        if (labels[v] != Label::kUnlabeled) ids.push_back(v);
    std::sort(ids.begin(), ids.end(), [&](int a, int b) {
        return std::tie(times[a], a) < std::tie(times[b], b);
    });
    const int n = static_cast<int>(ids.size());
    const int n_train_total = static_cast<int>(std::floor(train_quantile * n));
    const int n_valid = static_cast<int>(std::floor(valid_fraction * n));
    const int n_train = n_train_total - n_valid;

    DatasetSplit split;
    split.train_ids.assign(ids.begin(), ids.begin() + n_train);
    split.valid_ids.assign(ids.begin() + n_train, ids.begin() + n_train_total);
    split.test_ids.assign(ids.begin() + n_train_total, ids.end());
    std::sort(split.train_ids.begin(), split.train_ids.end());
    std::sort(split.valid_ids.begin(), split.valid_ids.end());
    std::sort(split.test_ids.begin(), split.test_ids.end());
    return split;
}

}  // namespace catgnn
