#pragma once

#include <atomic>
#include <cstdio>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "caud/report.hpp"

namespace caud {

// One row of a published results table: what the paper reports for the
// scheme and what band the desk-scale reproduction must land in to count as
// a pass. Rows without a band (the MI point estimates) are reported
// unchecked; their published values are seed- and scale-sensitive.
struct ReproduceRow {
    std::string scheme;
    bool run_mine = false;
    bool run_cpa = false;
    std::optional<double> paper_mi_small;
    std::optional<double> paper_mi_big;
    std::optional<double> paper_acc_small;  // fractions, not percent
    std::optional<double> paper_acc_big;
    std::optional<double> mi_min;           // desk band on test MI
    std::optional<double> mi_abs_max;       // |MI| bound for secure schemes
    std::optional<double> acc_min;
    std::optional<double> acc_max;
};

struct RowOutcome {
    ReproduceRow row;
    json report;
    std::optional<double> test_mi;
    std::optional<double> accuracy;
    std::optional<Verdict> game_verdict;
    MiTrainingTrace mi_trace;
    std::vector<CpaEpochEntry> cpa_trace;
    bool checked = false;
    bool passed = true;
    std::string failure;
    std::string error;
};

// Ordering assertions attached to a table (used by the MI table, where point
// values are not gated but relative order is).
struct OrderingCheck {
    std::string bigger;
    std::string smaller;
    double margin = 0.02;
};

struct TableSpec {
    int number;
    std::string title;
    std::vector<ReproduceRow> rows;
    std::vector<OrderingCheck> orderings;
};

inline TableSpec table_spec(int table) {
    TableSpec t;
    t.number = table;
    switch (table) {
        case 1:
            // The 16-bit baselines admit rare unavoidable errors: a uniform
            // class-1 plaintext that comes up all-zero encrypts to the exact
            // class-0 ciphertext (probability ~3% per 2000-row split). The
            // band allows those; the acceptance suite additionally checks
            // accuracy == 1 - (collision count)/trials exactly.
            t.title = "Test set baselines";
            t.rows = {
                {"identity", true, true, 9.17, {}, 1.00, {}, 5.0, {}, 0.999, 1.0},
                {"otp", true, true, 0.0092, {}, 0.5036, {}, {}, 0.05, 0.47, 0.53},
                {"xor_const", true, true, 5.16, {}, 1.00, {}, 3.0, {}, 0.999, 1.0},
            };
            t.orderings = {{"identity", "otp", 0.02}};
            break;
        case 2:
            t.title = "Test set MI estimates";
            t.rows = {
                {"des", true, false, 0.733, 1.916, {}, {}, {}, {}, {}, {}},
                {"des_rand", true, false, 0.138, 1.795, {}, {}, {}, {}, {}, {}},
                {"aes_ecb", true, false, 0.0621, 0.7068, {}, {}, {}, {}, {}, {}},
                {"aes_ctr", true, false, 0.0335, 0.263, {}, {}, {}, {}, {}, {}},
                {"rsa_plain", true, false, 0.7285, 1.481, {}, {}, {}, {}, {}, {}},
                {"rsa_oaep", true, false, 0.0421, 1.342, {}, {}, {}, {}, {}, {}},
            };
            t.orderings = {{"des", "aes_ctr", 0.02},
                           {"des", "des_rand", 0.02},
                           {"aes_ecb", "aes_ctr", 0.02}};
            break;
        case 3:
            t.title = "IND-CPA classification accuracy";
            t.rows = {
                {"des", false, true, {}, {}, 1.00, 1.00, {}, {}, 0.99, {}},
                {"des_rand", false, true, {}, {}, 0.5032, 0.5003, {}, {}, 0.45, 0.55},
                {"aes_ecb", false, true, {}, {}, 1.00, 1.00, {}, {}, 0.99, {}},
                {"aes_ctr", false, true, {}, {}, 0.4998, 0.5051, {}, {}, 0.45, 0.55},
                {"aes_ctr_faulted", false, true, {}, {}, 0.7525, 0.9892, {}, {}, 0.70, {}},
                {"rsa_plain", false, true, {}, {}, 1.00, 1.00, {}, {}, 0.99, {}},
                {"rsa_oaep", false, true, {}, {}, 0.502, 0.4945, {}, {}, 0.45, 0.55},
                {"rsa_oaep_faulted", false, true, {}, {}, 0.6123, 0.995, {}, {}, 0.60, {}},
            };
            break;
        case 4:
            t.title = "HUNCC cryptanalysis";
            t.rows = {
                {"huncc", true, true, 0.822, 2.137, 1.00, 1.00, {}, {}, 0.99, {}},
                {"huncc_individual", true, true, 0.201, 1.782, 0.4909, 0.5001, {}, {}, 0.45,
                 0.55},
            };
            break;
        default:
            throw UsageError("reproduce: table must be 1, 2, 3 or 4");
    }
    return t;
}

inline void check_row_bands(RowOutcome& out) {
    const ReproduceRow& row = out.row;
    auto fail = [&](const std::string& why) {
        out.passed = false;
        if (!out.failure.empty()) out.failure += "; ";
        out.failure += why;
    };
    if (row.mi_min || row.mi_abs_max || row.acc_min || row.acc_max) out.checked = true;
    if (row.mi_min && out.test_mi && *out.test_mi < *row.mi_min)
        fail("test MI " + std::to_string(*out.test_mi) + " < " + std::to_string(*row.mi_min));
    if (row.mi_abs_max && out.test_mi && std::abs(*out.test_mi) > *row.mi_abs_max)
        fail("|test MI| " + std::to_string(std::abs(*out.test_mi)) + " > " +
             std::to_string(*row.mi_abs_max));
    if (row.acc_min && out.accuracy && *out.accuracy < *row.acc_min)
        fail("accuracy " + std::to_string(*out.accuracy) + " < " +
             std::to_string(*row.acc_min));
    if (row.acc_max && out.accuracy && *out.accuracy > *row.acc_max)
        fail("accuracy " + std::to_string(*out.accuracy) + " > " +
             std::to_string(*row.acc_max));
}

// Fault periods keep the construction aligned across splits: test sample j
// lands on a keystream/padding slot already seen during training. At full
// scale the period is the training-set size, as published. Desk periods are
// shorter so each slot recurs during training; the OAEP period is shorter
// still because the probe network memorizes 1024-bit patterns far more
// slowly than 128-bit ones.
inline SchemeOptions reproduce_scheme_options(const std::string& scheme,
                                              const ScalePreset& scale) {
    SchemeOptions opt;
    const bool full = std::string(scale.tag) == "full";
    opt.faults.ctr_reset_period = full ? scale.n_train : scale.n_train / 10;
    opt.faults.reuse_oaep_seed_period = full ? scale.n_train : scale.n_train / 20;
    (void)scheme;
    return opt;
}

struct TableOutcome {
    TableSpec spec;
    std::vector<RowOutcome> rows;
    std::vector<std::pair<OrderingCheck, bool>> orderings;
    bool all_passed = true;
    bool any_error = false;
};

// Runs every row of a table, optionally as parallel jobs. Each job is
// internally deterministic; rows never share mutable state.
inline TableOutcome run_table(int table, const ScalePreset& scale, NetSize net,
                              std::uint64_t seed, std::size_t jobs,
                              const std::function<void(const RowOutcome&)>& on_row = {}) {
    TableOutcome out;
    out.spec = table_spec(table);
    out.rows.resize(out.spec.rows.size());

    std::atomic<std::size_t> next{0};
    std::mutex emit_mutex;
    auto worker = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= out.spec.rows.size()) return;
            RowOutcome& slot = out.rows[i];
            slot.row = out.spec.rows[i];
            try {
                AuditRequest req;
                req.scheme = slot.row.scheme;
                req.scheme_options = reproduce_scheme_options(slot.row.scheme, scale);
                req.scale = scale;
                req.net = net;
                req.seed = seed;
                req.run_mine = slot.row.run_mine;
                req.run_cpa = slot.row.run_cpa;
                AuditOutcome audit = run_audit(req);
                slot.report = std::move(audit.report);
                if (audit.mi) {
                    slot.test_mi = audit.mi->test_mi_nats;
                    slot.mi_trace = std::move(audit.mi->trace);
                }
                if (audit.game) slot.accuracy = audit.game->accuracy;
                slot.cpa_trace = std::move(audit.cpa_trace);
                slot.game_verdict = audit.game_verdict;
                check_row_bands(slot);
            } catch (const std::exception& e) {
                slot.passed = false;
                slot.error = e.what();
            }
            if (on_row) {
                std::lock_guard<std::mutex> lock(emit_mutex);
                on_row(slot);
            }
        }
    };
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t j = 0; j < std::min(jobs, out.spec.rows.size()); ++j)
            pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    for (const auto& check : out.spec.orderings) {
        std::optional<double> big, small;
        for (const auto& r : out.rows) {
            if (r.row.scheme == check.bigger) big = r.test_mi;
            if (r.row.scheme == check.smaller) small = r.test_mi;
        }
        bool ok = big && small && *big > *small + check.margin;
        out.orderings.emplace_back(check, ok);
        if (!ok) out.all_passed = false;
    }
    for (const auto& r : out.rows) {
        if (!r.error.empty()) out.any_error = true;
        if (!r.passed) out.all_passed = false;
    }
    return out;
}

} // namespace caud
