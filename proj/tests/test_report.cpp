#include "doctest.h"

#include <fstream>

#include "caud/report.hpp"
#include "caud/reproduce.hpp"

using namespace caud;

TEST_SUITE_BEGIN("report");

namespace {

AuditRequest tiny_request(const std::string& scheme) {
    AuditRequest req;
    req.scheme = scheme;
    // Small but with >= 1000 test challenges so the game verdict is defined.
    req.scale = {1024, 1000, 3, 256, 0.05, 0.2, "desk"};
    req.net = NetSize::small;
    req.seed = 7;
    return req;
}

json load_schema() {
    std::ifstream is(std::string(CAUD_SCHEMA_DIR) + "/audit_report.schema.json");
    REQUIRE(is.good());
    return json::parse(is);
}

} // namespace

TEST_CASE("run_audit produces a schema-valid self-describing report") {
    AuditOutcome out = run_audit(tiny_request("identity"));
    const json& r = out.report;
    CHECK(r["scheme"] == "identity");
    CHECK(r["net"]["hidden_layers"] == 2);
    CHECK(r["net"]["hidden_width"] == 100);
    CHECK(r["seeds"]["master"] == 7);
    CHECK(r["dataset"]["fingerprint_train"] != r["dataset"]["fingerprint_test"]);
    CHECK(r.contains("mi_result"));
    CHECK(r.contains("game_result"));
    CHECK(r["wall_seconds"].get<double>() > 0.0);

    json schema = load_schema();
    CHECK(validate_report(schema["definitions"]["audit_report"], r).empty());
    CHECK(validate_report(schema["definitions"]["mi_result"], r["mi_result"]).empty());
    CHECK(validate_report(schema["definitions"]["game_result"], r["game_result"]).empty());
}

TEST_CASE("schema validator flags structural problems") {
    json schema = load_schema();
    const json& game_schema = schema["definitions"]["game_result"];
    AuditOutcome out = run_audit(tiny_request("identity"));
    json broken = out.report["game_result"];
    broken.erase("accuracy");
    broken["verdict"] = "MAYBE";
    auto problems = validate_report(game_schema, broken);
    REQUIRE(problems.size() == 2);
}

TEST_CASE("reports are reproducible metric for metric") {
    AuditRequest req = tiny_request("xor_const");
    AuditOutcome a = run_audit(req);
    AuditOutcome b = run_audit(req);
    CHECK(a.mi->test_mi_nats == b.mi->test_mi_nats);
    CHECK(a.game->accuracy == b.game->accuracy);
    CHECK(a.report["dataset"] == b.report["dataset"]);
    CHECK(a.report["mi_result"] == b.report["mi_result"]);
}

TEST_CASE("net presets match the audit protocol sizes") {
    CHECK(net_dims(NetSize::small) == std::make_pair<std::size_t, std::size_t>(2, 100));
    CHECK(net_dims(NetSize::big) == std::make_pair<std::size_t, std::size_t>(4, 600));
    CHECK(parse_net_size("big") == NetSize::big);
    CHECK_THROWS_AS(parse_net_size("huge"), UsageError);
    ScalePreset full = ScalePreset::full();
    CHECK(full.n_train == 100000);
    CHECK(full.n_test == 20000);
    CHECK(full.epochs == 1000);
    CHECK(full.batch_size == 10000);
    CHECK(full.mine_learning_rate == 1e-4);
}

TEST_CASE("table specs cover the published rows") {
    CHECK(table_spec(1).rows.size() == 3);
    CHECK(table_spec(2).rows.size() == 6);
    CHECK(table_spec(2).orderings.size() == 3);
    CHECK(table_spec(3).rows.size() == 8);
    CHECK(table_spec(4).rows.size() == 2);
    CHECK_THROWS_AS(table_spec(5), UsageError);

    // Paper reference values spot-checked against the published tables.
    const auto& t3 = table_spec(3).rows;
    CHECK(t3[4].scheme == "aes_ctr_faulted");
    CHECK(*t3[4].paper_acc_small == doctest::Approx(0.7525));
    CHECK(*t3[4].paper_acc_big == doctest::Approx(0.9892));
    const auto& t4 = table_spec(4).rows;
    CHECK(*t4[0].paper_mi_big == doctest::Approx(2.137));
    CHECK(*t4[1].paper_acc_small == doctest::Approx(0.4909));
}

TEST_CASE("band checks catch out-of-range rows") {
    RowOutcome out;
    out.row = table_spec(1).rows[1];  // otp: |MI| <= 0.05, acc in [0.47, 0.53]
    out.test_mi = 0.2;
    out.accuracy = 0.6;
    check_row_bands(out);
    CHECK(out.checked);
    CHECK_FALSE(out.passed);
    RowOutcome ok;
    ok.row = out.row;
    ok.test_mi = -0.01;
    ok.accuracy = 0.5;
    check_row_bands(ok);
    CHECK(ok.passed);
}

TEST_CASE("parallel table jobs reproduce the serial results") {
    ScalePreset tiny{1024, 1000, 2, 256, 0.05, 0.2, "desk"};
    TableOutcome serial = run_table(1, tiny, NetSize::small, 11, 1);
    TableOutcome parallel = run_table(1, tiny, NetSize::small, 11, 2);
    REQUIRE(serial.rows.size() == parallel.rows.size());
    for (std::size_t i = 0; i < serial.rows.size(); ++i) {
        CHECK(serial.rows[i].error.empty());
        CHECK(serial.rows[i].test_mi == parallel.rows[i].test_mi);
        CHECK(serial.rows[i].accuracy == parallel.rows[i].accuracy);
        CHECK(serial.rows[i].report["dataset"] == parallel.rows[i].report["dataset"]);
    }
}

TEST_CASE("trace CSV writers emit the documented columns") {
    MiTrainingTrace trace;
    trace.epochs = {{0, 1.5, 1.4, 0.1}, {1, 2.0, 1.9, 0.2}};
    write_mi_trace_csv(trace, "trace_mi_test.csv");
    std::ifstream is("trace_mi_test.csv");
    std::string header;
    std::getline(is, header);
    CHECK(header == "epoch,train_mi_nats,stabilized_objective,seconds");
    std::string row;
    std::getline(is, row);
    CHECK(row.substr(0, 2) == "0,");
    is.close();
    std::remove("trace_mi_test.csv");

    std::vector<CpaEpochEntry> cpa_trace = {{0, 0.7, 0.5, 0.1}};
    write_cpa_trace_csv(cpa_trace, "trace_cpa_test.csv");
    std::ifstream is2("trace_cpa_test.csv");
    std::getline(is2, header);
    CHECK(header == "epoch,train_bce_nats,train_accuracy");
    is2.close();
    std::remove("trace_cpa_test.csv");
}

TEST_SUITE_END();
