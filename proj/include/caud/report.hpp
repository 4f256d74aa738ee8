#pragma once

#include <chrono>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "caud/cpa.hpp"
#include "caud/dataset.hpp"
#include "caud/mine.hpp"
#include "caud/registry.hpp"
#include "caud/version.hpp"

#include "json.hpp"

namespace caud {

using nlohmann::json;

// Architecture presets from the audit protocol: a 2x100 probe network and a
// 4x600 workhorse.
enum class NetSize { small, big };

inline const char* net_size_name(NetSize n) { return n == NetSize::small ? "small" : "big"; }

inline NetSize parse_net_size(const std::string& s) {
    if (s == "small") return NetSize::small;
    if (s == "big") return NetSize::big;
    throw UsageError("net size must be 'small' or 'big', got '" + s + "'");
}

inline std::pair<std::size_t, std::size_t> net_dims(NetSize n) {
    return n == NetSize::small ? std::make_pair<std::size_t, std::size_t>(2, 100)
                               : std::make_pair<std::size_t, std::size_t>(4, 600);
}

// Scale presets. Desk scale trades the protocol's sample and epoch counts
// down to a single-core budget; full scale is the protocol as published.
// Learning rates differ because plain SGD needs a larger step to converge
// within the shorter desk horizon.
struct ScalePreset {
    std::size_t n_train;
    std::size_t n_test;
    std::size_t epochs;
    std::size_t batch_size;
    double mine_learning_rate;
    double cpa_learning_rate;
    const char* tag;

    static ScalePreset desk() { return {20000, 4000, 200, 2000, 0.02, 0.1, "desk"}; }
    static ScalePreset full() { return {100000, 20000, 1000, 10000, 1e-4, 1e-4, "full"}; }
};

struct AuditRequest {
    std::string scheme;
    SchemeOptions scheme_options;
    ScalePreset scale = ScalePreset::desk();
    NetSize net = NetSize::small;
    std::uint64_t seed = 1;
    bool run_mine = true;
    bool run_cpa = true;
    std::size_t marginal_repeats = 1;
    std::optional<double> mine_lr_override;
    std::optional<double> cpa_lr_override;
    std::optional<std::size_t> epochs_override;
    std::optional<std::size_t> batch_override;
    double stabilizer_coeff = 0.1;

    TrainConfig train_config(bool for_mine) const {
        TrainConfig cfg;
        cfg.epochs = epochs_override.value_or(scale.epochs);
        cfg.batch_size = batch_override.value_or(scale.batch_size);
        cfg.learning_rate = for_mine
                                ? mine_lr_override.value_or(scale.mine_learning_rate)
                                : cpa_lr_override.value_or(scale.cpa_learning_rate);
        auto [layers, width] = net_dims(net);
        cfg.hidden_layers = layers;
        cfg.hidden_width = width;
        cfg.seed = seed;
        cfg.stabilizer_coeff = stabilizer_coeff;
        return cfg;
    }
};

struct AuditOutcome {
    json report;
    std::optional<MiResult> mi;
    std::optional<GameResult> game;
    std::optional<Verdict> game_verdict;
    std::vector<CpaEpochEntry> cpa_trace;
    double train_accuracy_last = 0.0;
};

// Fixed implementation choices that make numbers interpretable across runs;
// echoed into every report.
inline json design_decision_flags() {
    return {{"optimizer", "plain-sgd"},
            {"weight_init", "uniform-sqrt6-over-fanin"},
            {"rng", "splitmix64-counter"},
            {"bits_mapping", "0/1"},
            {"marginal_sampling", "in-batch-permutation"},
            {"epoch_aggregation", "mean-of-batch-estimates"},
            {"short_batch", "dropped"},
            {"mi_report", "unstabilized-dv-final-net"},
            {"tie_rule", "guess-0-at-threshold"},
            {"decision_threshold", 0.5},
            {"oaep_hash", "sha256"},
            {"des_rand_padding", "prepended-64bit-block-cbc-fixed-iv"},
            {"huncc_code", "seeded-invertible"},
            {"precision", "float64"}};
}

namespace detail {

inline json confusion_to_json(const GameResult& g) {
    return json::array({json::array({g.confusion[0][0], g.confusion[0][1]}),
                        json::array({g.confusion[1][0], g.confusion[1][1]})});
}

} // namespace detail

inline json mi_result_to_json(const AuditRequest& req, const MiResult& mi) {
    const TrainConfig cfg = req.train_config(true);
    return {{"scheme", req.scheme},
            {"test_mi_nats", mi.test_mi_nats},
            {"best_train_mi_nats", mi.trace.best_train_mi},
            {"last_train_mi_nats", mi.trace.last_train_mi},
            {"dataset_fingerprint", mi.dataset_fingerprint},
            {"marginal_repeats", req.marginal_repeats},
            {"config",
             {{"epochs", cfg.epochs},
              {"batch_size", cfg.batch_size},
              {"learning_rate", cfg.learning_rate},
              {"stabilizer_coeff", cfg.stabilizer_coeff},
              {"hidden_layers", cfg.hidden_layers},
              {"hidden_width", cfg.hidden_width},
              {"seed", cfg.seed}}}};
}

inline json game_result_to_json(const AuditRequest& req, const GameResult& g, Verdict v,
                                const json& fault_flags) {
    return {{"scheme", req.scheme},
            {"fault_flags", fault_flags},
            {"net_size", net_size_name(req.net)},
            {"trials", g.trials},
            {"correct", g.correct},
            {"accuracy", g.accuracy},
            {"confusion", detail::confusion_to_json(g)},
            {"verdict", verdict_name(v)},
            {"seeds", {{"master", req.seed}}}};
}

// One full audit of one scheme: deterministic dataset build, optional MI
// estimation, optional IND-CPA game, all folded into a reproducible report.
inline AuditOutcome run_audit(const AuditRequest& req) {
    const auto start = std::chrono::steady_clock::now();
    auto scheme = make_scheme(req.scheme, req.scheme_options);
    scheme->keygen(0, req.seed);

    DatasetSpec spec;
    spec.n_train = req.scale.n_train;
    spec.n_test = req.scale.n_test;
    spec.seed = req.seed;
    auto [train, test] = build_sampleset(spec, *scheme);

    AuditOutcome out;
    out.report["toolkit"] = {{"name", "caudit"}, {"version", kVersion}};
    out.report["scheme"] = req.scheme;
    out.report["fault_flags"] = scheme->fault_flags();
    out.report["net"] = {{"size", net_size_name(req.net)},
                         {"hidden_layers", net_dims(req.net).first},
                         {"hidden_width", net_dims(req.net).second}};
    out.report["scale"] = {{"tag", req.scale.tag},
                           {"n_train", spec.n_train},
                           {"n_test", spec.n_test}};
    out.report["seeds"] = {{"master", req.seed}};
    out.report["dataset"] = {{"plaintext_bits", train.plaintext_bits},
                             {"ciphertext_bits", train.ciphertext_bits},
                             {"fingerprint_train", dataset_fingerprint(train)},
                             {"fingerprint_test", dataset_fingerprint(test)}};
    out.report["design_decisions"] = design_decision_flags();

    if (req.run_mine) {
        MineRun run = train_mi(train, req.train_config(true));
        MiResult mi;
        mi.test_mi_nats = evaluate_mi(run.net, test, req.seed, req.marginal_repeats);
        mi.trace = std::move(run.trace);
        mi.config = req.train_config(true);
        mi.dataset_fingerprint = out.report["dataset"]["fingerprint_train"];
        out.report["mi_result"] = mi_result_to_json(req, mi);
        out.mi = std::move(mi);
    }
    if (req.run_cpa) {
        CpaModel model = train_classifier(train, req.train_config(false));
        GameResult game = run_game(model, test);
        Verdict v = verdict(game);
        out.report["game_result"] = game_result_to_json(req, game, v, scheme->fault_flags());
        out.report["game_result"]["train_accuracy"] = model.trace.back().train_accuracy;
        out.report["game_result"]["train_bce_nats"] = model.trace.back().train_bce_nats;
        out.train_accuracy_last = model.trace.back().train_accuracy;
        out.cpa_trace = std::move(model.trace);
        out.game = game;
        out.game_verdict = v;
    }
    out.report["wall_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

inline void write_mi_trace_csv(const MiTrainingTrace& trace, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw FormatError("cannot open trace file " + path);
    os << "epoch,train_mi_nats,stabilized_objective,seconds\n";
    for (const auto& e : trace.epochs)
        os << e.epoch << ',' << e.train_mi_nats << ',' << e.stabilized_objective << ','
           << e.seconds << '\n';
}

inline void write_cpa_trace_csv(const std::vector<CpaEpochEntry>& trace,
                                const std::string& path) {
    std::ofstream os(path);
    if (!os) throw FormatError("cannot open trace file " + path);
    os << "epoch,train_bce_nats,train_accuracy\n";
    for (const auto& e : trace)
        os << e.epoch << ',' << e.train_bce_nats << ',' << e.train_accuracy << '\n';
}

// ---------------------------------------------------------------------------
// Minimal structural validator for the report schema shipped in-repo.
// Supports the subset the schema uses: type, required, properties, items,
// enum. Returns human-readable problems; empty means valid.

inline void validate_against_schema(const json& schema, const json& instance,
                                    const std::string& where,
                                    std::vector<std::string>& problems) {
    if (schema.contains("type")) {
        const std::string type = schema["type"];
        bool ok = (type == "object" && instance.is_object()) ||
                  (type == "array" && instance.is_array()) ||
                  (type == "string" && instance.is_string()) ||
                  (type == "number" && instance.is_number()) ||
                  (type == "integer" && instance.is_number_integer()) ||
                  (type == "boolean" && instance.is_boolean());
        if (!ok) {
            problems.push_back(where + ": expected " + type);
            return;
        }
    }
    if (schema.contains("enum")) {
        bool found = false;
        for (const auto& candidate : schema["enum"])
            if (candidate == instance) found = true;
        if (!found) problems.push_back(where + ": value not in enum");
    }
    if (schema.contains("required"))
        for (const auto& key : schema["required"])
            if (!instance.contains(key.get<std::string>()))
                problems.push_back(where + ": missing required key '" +
                                   key.get<std::string>() + "'");
    if (schema.contains("properties") && instance.is_object())
        for (const auto& [key, sub] : schema["properties"].items())
            if (instance.contains(key))
                validate_against_schema(sub, instance[key], where + "." + key, problems);
    if (schema.contains("items") && instance.is_array())
        for (std::size_t i = 0; i < instance.size(); ++i)
            validate_against_schema(schema["items"], instance[i],
                                    where + "[" + std::to_string(i) + "]", problems);
}

inline std::vector<std::string> validate_report(const json& schema, const json& report) {
    std::vector<std::string> problems;
    validate_against_schema(schema, report, "report", problems);
    return problems;
}

} // namespace caud
