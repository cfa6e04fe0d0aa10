#include "catgnn/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "catgnn/rng.hpp"
#include "catgnn/splitting.hpp"
#include "json.hpp"

namespace catgnn {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json to_json(const SynthConfig& c) {
    return {{"num_nodes", c.num_nodes},
            {"fraud_ratio", c.fraud_ratio},
            {"camouflage_ratio", c.camouflage_ratio},
            {"hidden_ratio", c.hidden_ratio},
            {"feat_dim", c.feat_dim},
            {"num_relations", c.num_relations},
            {"avg_degree", c.avg_degree},
            {"class_sep", c.class_sep},
            {"noise_dims", c.noise_dims},
            {"test_shift", c.test_shift},
            {"train_ratio", c.train_ratio},
            {"valid_ratio", c.valid_ratio}};
}

void from_json(const json& j, SynthConfig& c) {
    c.num_nodes = j.value("num_nodes", c.num_nodes);
    c.fraud_ratio = j.value("fraud_ratio", c.fraud_ratio);
    c.camouflage_ratio = j.value("camouflage_ratio", c.camouflage_ratio);
    c.hidden_ratio = j.value("hidden_ratio", c.hidden_ratio);
    c.feat_dim = j.value("feat_dim", c.feat_dim);
    c.num_relations = j.value("num_relations", c.num_relations);
    c.avg_degree = j.value("avg_degree", c.avg_degree);
    c.class_sep = j.value("class_sep", c.class_sep);
    c.noise_dims = j.value("noise_dims", c.noise_dims);
    c.test_shift = j.value("test_shift", c.test_shift);
    c.train_ratio = j.value("train_ratio", c.train_ratio);
    c.valid_ratio = j.value("valid_ratio", c.valid_ratio);
}

json to_json(const ModelConfig& c) {
    return {{"hidden_dim", c.hidden_dim},
            {"num_heads", c.num_heads},
            {"dropout", c.dropout},
            {"leaky_slope", c.leaky_slope},
            {"variant", variant_name(c.variant)},
            {"r_e", c.r_e},
            {"r_c", c.r_c},
            {"fixed_env_count", c.fixed_env_count},
            {"env_rounding", c.env_rounding == EnvRounding::kFloor ? "floor" : "ceil"},
            {"depth", c.depth}};
}

void from_json(const json& j, ModelConfig& c) {
    c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
    c.num_heads = j.value("num_heads", c.num_heads);
    c.dropout = j.value("dropout", c.dropout);
    c.leaky_slope = j.value("leaky_slope", c.leaky_slope);
    if (j.contains("variant")) c.variant = variant_from_name(j.at("variant"));
    c.r_e = j.value("r_e", c.r_e);
    c.r_c = j.value("r_c", c.r_c);
    c.fixed_env_count = j.value("fixed_env_count", c.fixed_env_count);
    if (j.contains("env_rounding"))
        c.env_rounding = j.at("env_rounding") == "ceil" ? EnvRounding::kCeil : EnvRounding::kFloor;
    c.depth = j.value("depth", c.depth);
}

json to_json(const TrainConfig& c) {
    return {{"learning_rate", c.learning_rate},
            {"batch_size", c.batch_size},
            {"epochs", c.epochs},
            {"early_stop_patience", c.early_stop_patience},
            {"weight_decay", c.weight_decay},
            {"seed", c.seed},
            {"adam_beta1", c.adam_beta1},
            {"adam_beta2", c.adam_beta2},
            {"adam_eps", c.adam_eps}};
}

void from_json(const json& j, TrainConfig& c) {
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.epochs = j.value("epochs", c.epochs);
    c.early_stop_patience = j.value("early_stop_patience", c.early_stop_patience);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.seed = j.value("seed", c.seed);
    c.adam_beta1 = j.value("adam_beta1", c.adam_beta1);
    c.adam_beta2 = j.value("adam_beta2", c.adam_beta2);
    c.adam_eps = j.value("adam_eps", c.adam_eps);
}

json to_json(const DatasetSpec& d) {
    return {{"kind", d.kind},
            {"synth", to_json(d.synth)},
            {"data_seed", d.data_seed},
            {"csv_path", d.csv_path},
            {"mapping",
             {{"time", d.mapping.time},
              {"source", d.mapping.source},
              {"target", d.mapping.target},
              {"amount", d.mapping.amount},
              {"location", d.mapping.location},
              {"type", d.mapping.txn_type},
              {"label", d.mapping.label}}},
            {"window", d.window},
            {"max_neighbors", d.max_neighbors},
            {"categorical_buckets", d.categorical_buckets},
            {"features_path", d.features_path},
            {"labels_path", d.labels_path},
            {"edge_paths", d.edge_paths},
            {"split_path", d.split_path},
            {"split_policy", d.split_policy},
            {"train_ratio", d.train_ratio},
            {"valid_ratio", d.valid_ratio},
            {"time_quantile", d.time_quantile},
            {"temporal_valid_fraction", d.temporal_valid_fraction},
            {"split_seed", d.split_seed}};
}

void from_json(const json& j, DatasetSpec& d) {
    d.kind = j.value("kind", d.kind);
    if (j.contains("synth")) from_json(j.at("synth"), d.synth);
    d.data_seed = j.value("data_seed", d.data_seed);
    d.csv_path = j.value("csv_path", d.csv_path);
    if (j.contains("mapping")) {
        const json& m = j.at("mapping");
        d.mapping.time = m.value("time", d.mapping.time);
        d.mapping.source = m.value("source", d.mapping.source);
        d.mapping.target = m.value("target", d.mapping.target);
        d.mapping.amount = m.value("amount", d.mapping.amount);
        d.mapping.location = m.value("location", d.mapping.location);
        d.mapping.txn_type = m.value("type", d.mapping.txn_type);
        d.mapping.label = m.value("label", d.mapping.label);
    }
    d.window = j.value("window", d.window);
    d.max_neighbors = j.value("max_neighbors", d.max_neighbors);
    d.categorical_buckets = j.value("categorical_buckets", d.categorical_buckets);
    d.features_path = j.value("features_path", d.features_path);
    d.labels_path = j.value("labels_path", d.labels_path);
    d.edge_paths = j.value("edge_paths", d.edge_paths);
    d.split_path = j.value("split_path", d.split_path);
    d.split_policy = j.value("split_policy", d.split_policy);
    d.train_ratio = j.value("train_ratio", d.train_ratio);
    d.valid_ratio = j.value("valid_ratio", d.valid_ratio);
    d.time_quantile = j.value("time_quantile", d.time_quantile);
    d.temporal_valid_fraction = j.value("temporal_valid_fraction", d.temporal_valid_fraction);
    d.split_seed = j.value("split_seed", d.split_seed);
}

json spec_echo(const ExperimentSpec& spec) {
    json variants = json::array();
    for (Variant v : spec.variants) variants.push_back(variant_name(v));
    return {{"dataset", to_json(spec.dataset)}, {"model", to_json(spec.model)},
            {"train", to_json(spec.train)},     {"variants", variants},
            {"seeds", spec.seeds},              {"out_dir", spec.out_dir}};
}

json to_json(const EvalResult& r) {
    return {{"auc", r.auc},     {"f1_macro", r.f1_macro}, {"ap", r.ap},
            {"n_pos", r.n_pos}, {"n_neg", r.n_neg},       {"threshold", r.threshold},
            {"score_ties", r.score_ties}};
}

json to_json(const TrainReport& r) {
    json epochs = json::array();
    for (const EpochStats& e : r.epochs)
        epochs.push_back({{"train_loss", e.train_loss},
                          {"valid_auc", e.valid_auc},
                          {"valid_f1", e.valid_f1},
                          {"valid_ap", e.valid_ap},
                          {"seconds", e.seconds}});
    return {{"epochs", epochs},
            {"best_epoch", r.best_epoch},
            {"test", to_json(r.test)},
            {"final_train_accuracy", r.final_train_accuracy},
            {"total_steps", r.total_steps},
            {"total_seconds", r.total_seconds},
            {"num_parameters", r.num_parameters}};
}

struct Stats {
    double mean = 0.0;
    double stdev = 0.0;
};

Stats mean_std(const std::vector<double>& xs) {
    Stats s;
    if (xs.empty()) return s;
    for (double x : xs) s.mean += x;
    s.mean /= static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double acc = 0.0;
        for (double x : xs) acc += (x - s.mean) * (x - s.mean);
        s.stdev = std::sqrt(acc / static_cast<double>(xs.size() - 1));
    }
    return s;
}

MetricsRow summarize(const std::string& variant, const std::vector<EvalResult>& per_seed) {
    std::vector<double> auc, f1, ap;
    for (const auto& r : per_seed) {
        auc.push_back(r.auc);
        f1.push_back(r.f1_macro);
        ap.push_back(r.ap);
    }
    MetricsRow row;
    row.variant = variant;
    row.per_seed = per_seed;
    const Stats a = mean_std(auc), f = mean_std(f1), p = mean_std(ap);
    row.auc_mean = a.mean;
    row.auc_std = a.stdev;
    row.f1_mean = f.mean;
    row.f1_std = f.stdev;
    row.ap_mean = p.mean;
    row.ap_std = p.stdev;
    return row;
}

std::string fixed6(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

json variant_config_echo(const ExperimentSpec& spec, Variant v) {
    json e = {{"variant", variant_name(v)}, {"r_c", spec.model.r_c}};
    if (variant_uses_fixed_count(v)) e["fixed_env_count"] = spec.model.fixed_env_count;
    else e["r_e"] = spec.model.r_e;
    if (variant_uses_mixup(v))
        e["weight_mode"] =
            variant_weight_mode(v) == WeightMode::kLearned ? "learned" : "importance";
    return e;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << text;
}

// One (variant, seed) training run on a prepared dataset.
EvalResult run_one(const MultiRelationGraph& graph, const DatasetSplit& split,
                   const ExperimentSpec& spec, Variant variant, std::uint64_t seed,
                   TrainReport* report_out, CatGnnParams* params_out) {
    ModelConfig mc = spec.model;
    mc.variant = variant;
    TrainConfig tc = spec.train;
    tc.seed = seed;
    auto [params, report] = train(graph, split, mc, tc);
    const EvalResult test = report.test;
    if (params_out) *params_out = std::move(params);
    if (report_out) *report_out = std::move(report);
    return test;
}

}  // namespace

void ExperimentSpec::validate() const {
    model.validate();
    train.validate();
    if (variants.empty()) throw InvalidInput("spec: no variants requested");
    if (seeds.empty()) throw InvalidInput("spec: no seeds requested");
    if (out_dir.empty()) throw InvalidInput("spec: out_dir required");
    if (dataset.kind != "synthetic" && dataset.kind != "csv" && dataset.kind != "generic")
        throw InvalidInput("spec: dataset.kind must be synthetic|csv|generic");
    if (dataset.kind == "csv" && dataset.csv_path.empty())
        throw InvalidInput("spec: csv dataset needs csv_path");
    if (dataset.kind == "generic" &&
        (dataset.features_path.empty() || dataset.labels_path.empty() || dataset.edge_paths.empty()))
        throw InvalidInput("spec: generic dataset needs features/labels/edge paths");
    if (dataset.split_policy != "stratified" && dataset.split_policy != "temporal")
        throw InvalidInput("spec: split_policy must be stratified|temporal");
}

ExperimentSpec ExperimentSpec::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open spec " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ParseError("spec " + path + ": " + e.what());
    }
    ExperimentSpec spec;
    if (j.contains("dataset")) from_json(j.at("dataset"), spec.dataset);
    if (j.contains("model")) from_json(j.at("model"), spec.model);
    if (j.contains("train")) from_json(j.at("train"), spec.train);
    if (j.contains("variants")) {
        spec.variants.clear();
        for (const auto& v : j.at("variants")) spec.variants.push_back(variant_from_name(v));
    }
    if (j.contains("seeds")) spec.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    spec.out_dir = j.value("out_dir", spec.out_dir);
    return spec;
}

std::pair<MultiRelationGraph, DatasetSplit> materialize_dataset(const DatasetSpec& spec) {
    if (spec.kind == "synthetic") return generate_synthetic(spec.synth, spec.data_seed);

    if (spec.kind == "csv") {
        const auto records = load_transactions_csv(spec.csv_path, spec.mapping);
        MultiRelationGraph graph = build_temporal_graph(records, spec.window, spec.max_neighbors,
                                                        spec.categorical_buckets);
        DatasetSplit split;
        if (spec.split_policy == "temporal") {
            std::vector<std::int64_t> times;
            times.reserve(records.size());
            for (const auto& r : records) times.push_back(r.time);
            split = temporal_split(graph.labels(), times, spec.time_quantile,
                                   spec.temporal_valid_fraction);
        } else {
            split = stratified_split(graph.labels(), spec.train_ratio, spec.valid_ratio,
                                     spec.split_seed);
        }
        return {std::move(graph), std::move(split)};
    }

    MultiRelationGraph graph =
        load_generic_graph(spec.features_path, spec.labels_path, spec.edge_paths);
    DatasetSplit split = spec.split_path.empty()
                             ? stratified_split(graph.labels(), spec.train_ratio,
                                                spec.valid_ratio, spec.split_seed)
                             : load_split(spec.split_path);
    return {std::move(graph), std::move(split)};
}

std::string metrics_csv(const std::vector<MetricsRow>& rows) {
    std::string out = "variant,axis,auc_mean,auc_std,f1_mean,f1_std,ap_mean,ap_std\n";
    for (const auto& r : rows) {
        out += r.variant;
        out += ',';
        if (r.has_axis) out += fixed6(r.axis_value);
        out += ',' + fixed6(r.auc_mean) + ',' + fixed6(r.auc_std) + ',' + fixed6(r.f1_mean) + ',' +
               fixed6(r.f1_std) + ',' + fixed6(r.ap_mean) + ',' + fixed6(r.ap_std) + '\n';
    }
    return out;
}

std::vector<MetricsRow> cmd_train(const ExperimentSpec& spec) {
    spec.validate();
    fs::create_directories(spec.out_dir);
    auto [graph, split] = materialize_dataset(spec.dataset);

    std::vector<MetricsRow> rows;
    json reports = json::object();
    for (Variant v : spec.variants) {
        std::vector<EvalResult> per_seed;
        json variant_reports = json::array();
        for (std::uint64_t seed : spec.seeds) {
            TrainReport report;
            CatGnnParams params;
            run_one(graph, split, spec, v, seed, &report, &params);
            per_seed.push_back(report.test);
            ModelConfig mc = spec.model;
            mc.variant = v;
            params.save(spec.out_dir + "/checkpoint_" + variant_name(v) + "_s" +
                            std::to_string(seed) + ".json",
                        mc);
            json jr = to_json(report);
            jr["seed"] = seed;
            variant_reports.push_back(std::move(jr));
        }
        reports[variant_name(v)] = {{"config", variant_config_echo(spec, v)},
                                    {"runs", std::move(variant_reports)}};
        rows.push_back(summarize(variant_name(v), per_seed));
    }

    json report = {{"version", kVersion},
                   {"spec", spec_echo(spec)},
                   {"seeds", spec.seeds},
                   {"split_sizes",
                    {{"train", split.train_ids.size()},
                     {"valid", split.valid_ids.size()},
                     {"test", split.test_ids.size()}}},
                   {"variants", std::move(reports)}};
    write_text(spec.out_dir + "/report.json", report.dump(2) + "\n");
    write_text(spec.out_dir + "/metrics.csv", metrics_csv(rows));
    return rows;
}

std::vector<MetricsRow> cmd_sweep(const ExperimentSpec& spec, const std::string& axis,
                                  const std::vector<double>& grid) {
    spec.validate();
    if (grid.empty()) throw InvalidInput("sweep: empty grid");
    if (axis != "env_ratio" && axis != "train_ratio")
        throw InvalidInput("sweep: axis must be env_ratio|train_ratio");
    for (double g : grid) {
        if (axis == "env_ratio" && (g < 0.0 || g > 1.0))
            throw InvalidInput("sweep: env_ratio values must be in [0, 1]");
        if (axis == "train_ratio" && (g <= 0.0 || g >= 1.0))
            throw InvalidInput("sweep: train_ratio values must be in (0, 1)");
    }
    fs::create_directories(spec.out_dir);

    std::vector<MetricsRow> rows;
    json points = json::array();
    for (double value : grid) {
        ExperimentSpec point = spec;
        if (axis == "env_ratio") {
            point.model.r_e = value;
        } else {
            point.dataset.synth.train_ratio = value;
            point.dataset.train_ratio = value;
            const double room = 1.0 - value;
            if (point.dataset.synth.valid_ratio >= room)
                point.dataset.synth.valid_ratio = room / 2.0;
            if (point.dataset.valid_ratio >= room) point.dataset.valid_ratio = room / 2.0;
        }
        auto [graph, split] = materialize_dataset(point.dataset);
        for (Variant v : point.variants) {
            std::vector<EvalResult> per_seed;
            for (std::uint64_t seed : point.seeds) {
                TrainReport report;
                run_one(graph, split, point, v, seed, &report, nullptr);
                per_seed.push_back(report.test);
            }
            MetricsRow row = summarize(variant_name(v), per_seed);
            row.has_axis = true;
            row.axis_value = value;
            rows.push_back(std::move(row));
            json pj = {{"axis", axis},
                       {"value", value},
                       {"variant", variant_name(v)},
                       {"config", variant_config_echo(point, v)}};
            pj["auc_mean"] = rows.back().auc_mean;
            points.push_back(std::move(pj));
        }
    }

    json report = {{"version", kVersion},
                   {"spec", spec_echo(spec)},
                   {"axis", axis},
                   {"grid", grid},
                   {"seeds", spec.seeds},
                   {"points", std::move(points)}};
    write_text(spec.out_dir + "/report.json", report.dump(2) + "\n");
    write_text(spec.out_dir + "/metrics.csv", metrics_csv(rows));
    return rows;
}

BenchReport cmd_bench(const ExperimentSpec& spec) {
    spec.validate();
    {
        std::vector<std::string> names;
        for (Variant v : spec.variants) names.push_back(variant_name(v));
        std::sort(names.begin(), names.end());
        if (names != std::vector<std::string>{"N_CAT", "PL"})
            throw InvalidInput("bench: compares exactly the {PL, N_CAT} pair");
    }
    fs::create_directories(spec.out_dir);
    auto [graph, split] = materialize_dataset(spec.dataset);

    BenchReport bench;
    bench.seed = spec.seeds.front();
    auto timed = [&](Variant v, long long& steps) {
        const auto start = std::chrono::steady_clock::now();
        TrainReport report;
        run_one(graph, split, spec, v, bench.seed, &report, nullptr);
        steps = report.total_steps;
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };
    bench.no_intervention_seconds = timed(Variant::kNCat, bench.no_intervention_steps);
    bench.intervention_seconds = timed(Variant::kPL, bench.intervention_steps);
    bench.overhead_pct = 100.0 * (bench.intervention_seconds - bench.no_intervention_seconds) /
                         bench.no_intervention_seconds;

    json report = {{"version", kVersion},
                   {"spec", spec_echo(spec)},
                   {"seed", bench.seed},
                   {"no_intervention_seconds", bench.no_intervention_seconds},
                   {"intervention_seconds", bench.intervention_seconds},
                   {"overhead_pct", bench.overhead_pct},
                   {"no_intervention_steps", bench.no_intervention_steps},
                   {"intervention_steps", bench.intervention_steps}};
    write_text(spec.out_dir + "/bench.json", report.dump(2) + "\n");
    return bench;
}

void cmd_generate(const SynthConfig& config, std::uint64_t seed, const std::string& out_dir) {
    fs::create_directories(out_dir);
    auto [graph, split] = generate_synthetic(config, seed);
    std::vector<std::string> edge_paths;
    for (int r = 0; r < graph.num_relations(); ++r)
        edge_paths.push_back(out_dir + "/edges_" + std::to_string(r) + ".csv");
    save_generic_graph(graph, out_dir + "/features.csv", out_dir + "/labels.csv", edge_paths);
    save_split(split, out_dir + "/split.csv");

    json manifest = {{"version", kVersion},
                     {"synth", to_json(config)},
                     {"seed", seed},
                     {"num_nodes", graph.num_nodes()},
                     {"num_relations", graph.num_relations()},
                     {"adjacency_entries", graph.total_adjacency_entries()}};
    write_text(out_dir + "/manifest.json", manifest.dump(2) + "\n");
}

EvalResult cmd_evaluate(const std::string& checkpoint_path, const DatasetSpec& dataset) {
    ModelConfig mc;
    CatGnnParams params = CatGnnParams::load(checkpoint_path, mc);
    auto [graph, split] = materialize_dataset(dataset);
    if (split.test_ids.empty()) throw InvalidSplit("evaluate: empty test split");

    std::vector<Label> visible(graph.num_nodes(), Label::kUnlabeled);
    for (int v : split.train_ids) visible[v] = graph.label(v);
    const MultiRelationGraph view = graph.relabeled(std::move(visible));

    const auto scores = predict_scores(view, split.test_ids, params, mc);
    std::vector<int> truth;
    truth.reserve(split.test_ids.size());
    for (int v : split.test_ids) truth.push_back(graph.label(v) == Label::kFraud ? 1 : 0);
    return evaluate_scores(scores, truth);
}

}  // namespace catgnn
