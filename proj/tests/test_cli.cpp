#include "doctest.h"

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"

#include "caud/dataset.hpp"
#include "caud/report.hpp"

using namespace caud;
namespace fs = std::filesystem;

TEST_SUITE_BEGIN("cli");

namespace {

struct RunResult {
    int exit_code;
    std::string output;
};

RunResult run_cli(const std::string& args) {
    std::string cmd = std::string(CAUD_CLI_PATH) + " " + args + " 2>&1";
    std::array<char, 512> buf{};
    std::string output;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    while (fgets(buf.data(), buf.size(), pipe)) output += buf.data();
    int status = pclose(pipe);
    return {WEXITSTATUS(status), output};
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("caudit_cli_test_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str(const std::string& name) const { return (path / name).string(); }
};

} // namespace

TEST_CASE("selftest passes and exits zero") {
    RunResult r = run_cli("selftest");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("FAIL") == std::string::npos);
    CHECK(r.output.find("aes-128 known answer") != std::string::npos);
}

TEST_CASE("gen writes both splits, prints fingerprints, and is deterministic") {
    TempDir tmp;
    std::string args = "gen --scheme identity --bits 16 --train 64 --test 16 --seed 5 --out " +
                       tmp.str("ds");
    RunResult r1 = run_cli(args);
    REQUIRE(r1.exit_code == 0);
    CHECK(r1.output.find("fingerprint=") != std::string::npos);
    SampleSet train = load_sampleset(tmp.str("ds_train.cads"));
    CHECK(train.rows() == 64);
    CHECK(train.scheme_name == "identity");
    SampleSet test = load_sampleset(tmp.str("ds_test.cads"));
    CHECK(test.split == Split::test);

    RunResult r2 = run_cli(args);
    CHECK(r2.output == r1.output);

    // Fault flag plumbed through to generation.
    RunResult rf = run_cli("gen --scheme aes_ctr_faulted --ctr-period 32 --train 64 "
                           "--test 16 --seed 5 --out " + tmp.str("f"));
    REQUIRE(rf.exit_code == 0);
    SampleSet ftrain = load_sampleset(tmp.str("f_train.cads"));
    // The fault mode is recorded in the header via the scheme name.
    CHECK(ftrain.scheme_name == "aes_ctr_faulted");
    // index 0 and index 32 share a keystream: xor of ciphertexts equals xor
    // of plaintexts.
    Bytes x0 = ftrain.plaintexts.row_bytes_copy(0), c0 = ftrain.ciphertexts.row_bytes_copy(0);
    Bytes x32 = ftrain.plaintexts.row_bytes_copy(32),
          c32 = ftrain.ciphertexts.row_bytes_copy(32);
    CHECK(xor_bytes(c0, c32) == xor_bytes(x0, x32));
}

TEST_CASE("unknown scheme is a usage error with the registry listed") {
    RunResult r = run_cli("gen --scheme rot13");
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("unknown scheme") != std::string::npos);
    CHECK(r.output.find("aes_ctr_faulted") != std::string::npos);
}

TEST_CASE("mine and cpa run on generated files and emit valid JSON and traces") {
    TempDir tmp;
    REQUIRE(run_cli("gen --scheme identity --train 512 --test 1000 --seed 9 --out " +
                    tmp.str("id"))
                .exit_code == 0);

    RunResult mine = run_cli("mine " + tmp.str("id") +
                             " --epochs 3 --batch 128 --lr 0.05 --seed 9 --out " +
                             tmp.str("mi.json") + " --trace " + tmp.str("mi.csv"));
    REQUIRE(mine.exit_code == 0);
    std::ifstream mj(tmp.str("mi.json"));
    nlohmann::json mi = nlohmann::json::parse(mj);
    CHECK(mi["scheme"] == "identity");
    CHECK(mi["config"]["epochs"] == 3);
    CHECK(mi["test_mi_nats"].is_number());
    {
        std::ifstream ss(std::string(CAUD_SCHEMA_DIR) + "/audit_report.schema.json");
        nlohmann::json schema = nlohmann::json::parse(ss);
        CHECK(validate_report(schema["definitions"]["mi_result"], mi).empty());
    }
    std::ifstream mcsv(tmp.str("mi.csv"));
    std::string header;
    std::getline(mcsv, header);
    CHECK(header == "epoch,train_mi_nats,stabilized_objective,seconds");

    RunResult cpa = run_cli("cpa " + tmp.str("id") +
                            " --epochs 3 --batch 128 --lr 0.3 --seed 9 --out " +
                            tmp.str("cpa.json") + " --trace " + tmp.str("cpa.csv"));
    REQUIRE(cpa.exit_code == 0);
    std::ifstream cj(tmp.str("cpa.json"));
    nlohmann::json game = nlohmann::json::parse(cj);
    CHECK(game["trials"] == 1000);
    CHECK((game["verdict"] == "BROKEN" || game["verdict"] == "SECURE-CONSISTENT"));
    CHECK(game["confusion"].size() == 2);
    {
        std::ifstream ss(std::string(CAUD_SCHEMA_DIR) + "/audit_report.schema.json");
        nlohmann::json schema = nlohmann::json::parse(ss);
        CHECK(validate_report(schema["definitions"]["game_result"], game).empty());
    }

    // Determinism across reruns: identical result JSON.
    RunResult mine2 = run_cli("mine " + tmp.str("id") +
                              " --epochs 3 --batch 128 --lr 0.05 --seed 9 --out " +
                              tmp.str("mi2.json"));
    REQUIRE(mine2.exit_code == 0);
    std::ifstream mj1(tmp.str("mi.json")), mj2(tmp.str("mi2.json"));
    std::string s1((std::istreambuf_iterator<char>(mj1)), std::istreambuf_iterator<char>());
    std::string s2((std::istreambuf_iterator<char>(mj2)), std::istreambuf_iterator<char>());
    CHECK(s1 == s2);
}

TEST_CASE("missing dataset file is a format/usage failure") {
    RunResult r = run_cli("mine /nonexistent/prefix --epochs 1");
    CHECK(r.exit_code == 2);
}

TEST_CASE("reproduce rejects unknown tables") {
    RunResult r = run_cli("reproduce --table 7");
    CHECK(r.exit_code == 2);
}

TEST_CASE("numeric failures exit with code 3") {
    TempDir tmp;
    REQUIRE(run_cli("gen --scheme identity --train 256 --test 64 --seed 4 --out " +
                    tmp.str("nf"))
                .exit_code == 0);
    // A divergent learning rate drives the DV loss non-finite within a few
    // steps; the run must abort with the numeric exit code.
    RunResult r = run_cli("mine " + tmp.str("nf") +
                          " --epochs 50 --batch 64 --lr 1e9 --seed 4 --out " +
                          tmp.str("x.json"));
    CHECK(r.exit_code == 3);
    CHECK(r.output.find("numeric failure") != std::string::npos);
}

TEST_CASE("CAUD_SEED env var sets the default seed") {
    TempDir tmp;
    std::string gen_args = "gen --scheme identity --train 64 --test 16 --out ";
    RunResult env_run = run_cli("gen --scheme identity --train 64 --test 16 --seed 77 --out " +
                                tmp.str("a"));
    REQUIRE(env_run.exit_code == 0);
    std::string cmd = std::string("CAUD_SEED=77 ") + CAUD_CLI_PATH + " " + gen_args +
                      tmp.str("b") + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::array<char, 256> buf{};
    std::string output;
    while (fgets(buf.data(), buf.size(), pipe)) output += buf.data();
    REQUIRE(WEXITSTATUS(pclose(pipe)) == 0);

    std::ifstream fa(tmp.str("a_train.cads"), std::ios::binary);
    std::ifstream fb(tmp.str("b_train.cads"), std::ios::binary);
    std::string da((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
    std::string db((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
    CHECK(da == db);
}

TEST_CASE("config file provides defaults that flags override") {
    TempDir tmp;
    {
        std::ofstream cfg(tmp.str("caudit.cfg"));
        cfg << "[gen]\nseed=123\ntrain=64\ntest=16\nscheme=identity\n";
    }
    RunResult from_cfg = run_cli("--config " + tmp.str("caudit.cfg") + " gen --out " +
                                 tmp.str("c"));
    REQUIRE(from_cfg.exit_code == 0);
    RunResult from_flags =
        run_cli("gen --scheme identity --train 64 --test 16 --seed 123 --out " + tmp.str("d"));
    REQUIRE(from_flags.exit_code == 0);
    std::ifstream fc(tmp.str("c_train.cads"), std::ios::binary);
    std::ifstream fd(tmp.str("d_train.cads"), std::ios::binary);
    std::string dc((std::istreambuf_iterator<char>(fc)), std::istreambuf_iterator<char>());
    std::string dd((std::istreambuf_iterator<char>(fd)), std::istreambuf_iterator<char>());
    CHECK(dc == dd);

    // Flag wins over the file.
    RunResult overridden = run_cli("--config " + tmp.str("caudit.cfg") +
                                   " gen --seed 999 --out " + tmp.str("e"));
    REQUIRE(overridden.exit_code == 0);
    std::ifstream fe(tmp.str("e_train.cads"), std::ios::binary);
    std::string de((std::istreambuf_iterator<char>(fe)), std::istreambuf_iterator<char>());
    CHECK(de != dc);
}

TEST_SUITE_END();
