#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "catgnn/graph.hpp"

namespace catgnn {

// Stratified split of the labeled nodes at the given ratios. Within each
// class the node ids are shuffled with `seed` and apportioned by largest
// remainder, so split sizes match round(ratio * n_class) up to +-1.
DatasetSplit stratified_split(std::span<const Label> labels, double train_ratio,
                              double valid_ratio, std::uint64_t seed);

// Time-ordered split for transaction graphs: nodes whose timestamp falls
// below the train quantile of the time range go to train (minus a trailing
// valid_fraction of them, by time), the rest to test. Only labeled nodes are
// returned.
DatasetSplit temporal_split(std::span<const Label> labels, std::span<const std::int64_t> times,
                            double train_quantile, double valid_fraction);

}  // namespace catgnn
