#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "catgnn/io.hpp"
#include "catgnn/metrics.hpp"
#include "catgnn/model.hpp"
#include "catgnn/synthetic.hpp"
#include "catgnn/trainer.hpp"

namespace catgnn {

inline constexpr const char* kVersion = "catgnn 0.1.0";

struct DatasetSpec {
    std::string kind = "synthetic";  // synthetic | csv | generic
    // synthetic
    SynthConfig synth;
    std::uint64_t data_seed = 7;
    // csv (transaction log -> temporal graph)
    std::string csv_path;
    ColumnMapping mapping;
    std::int64_t window = 7 * 86400;
    int max_neighbors = 16;
    int categorical_buckets = 32;
    // generic (pre-built graph files)
    std::string features_path;
    std::string labels_path;
    std::vector<std::string> edge_paths;
    std::string split_path;  // optional explicit split for generic graphs
    // split policy for csv/generic datasets
    std::string split_policy = "stratified";  // stratified | temporal
    double train_ratio = 0.4;
    double valid_ratio = 0.2;
    double time_quantile = 0.7;          // temporal policy: train fraction of the time order
    double temporal_valid_fraction = 0.15;
    std::uint64_t split_seed = 1;
};

struct ExperimentSpec {
    DatasetSpec dataset;
    ModelConfig model;
    TrainConfig train;
    std::vector<Variant> variants = {Variant::kPL};
    std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
    std::string out_dir = "results";

    void validate() const;
    static ExperimentSpec from_json_file(const std::string& path);
};

// Builds the graph and split described by the spec (generation, CSV
// ingestion or generic files).
std::pair<MultiRelationGraph, DatasetSplit> materialize_dataset(const DatasetSpec& spec);

struct MetricsRow {
    std::string variant;
    bool has_axis = false;
    double axis_value = 0.0;
    double auc_mean = 0.0, auc_std = 0.0;
    double f1_mean = 0.0, f1_std = 0.0;
    double ap_mean = 0.0, ap_std = 0.0;
    std::vector<EvalResult> per_seed;
};

// Trains every variant over every seed, writes checkpoints, report.json and
// metrics.csv under spec.out_dir, and returns the per-variant rows.
std::vector<MetricsRow> cmd_train(const ExperimentSpec& spec);

// Sensitivity sweep over env_ratio or train_ratio; one row per grid value
// per variant, written to the same file set.
std::vector<MetricsRow> cmd_sweep(const ExperimentSpec& spec, const std::string& axis,
                                  const std::vector<double>& grid);

struct BenchReport {
    double no_intervention_seconds = 0.0;
    double intervention_seconds = 0.0;
    double overhead_pct = 0.0;
    long long no_intervention_steps = 0;
    long long intervention_steps = 0;
    std::uint64_t seed = 0;
};

// Wall-clock comparison of full training with causal intervention (PL)
// against the no-intervention ablation on the same data and seed. The spec
// must request exactly the {PL, N_CAT} pair.
BenchReport cmd_bench(const ExperimentSpec& spec);

// Writes generic-graph files plus a split file; the output round-trips
// through load_generic_graph.
void cmd_generate(const SynthConfig& config, std::uint64_t seed, const std::string& out_dir);

// Test-split metrics of a stored checkpoint on the spec's dataset.
EvalResult cmd_evaluate(const std::string& checkpoint_path, const DatasetSpec& dataset);

// CSV helper shared by train/sweep (exposed for tests): fixed %.6f float
// format so identical runs produce byte-identical files.
std::string metrics_csv(const std::vector<MetricsRow>& rows);

}  // namespace catgnn
