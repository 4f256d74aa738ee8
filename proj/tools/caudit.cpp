// caudit - cryptosystem security-audit toolkit command line.
//
// Subcommands:
//   gen        build train/test sample-set files for a scheme
//   mine       estimate MI leakage of a dataset with the neural estimator
//   cpa        train the IND-CPA classifier and play the guessing game
//   reproduce  run a published results table end to end
//   selftest   known-answer, field-axiom and gradient-oracle checks

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "caud/oracle.hpp"
#include "caud/report.hpp"
#include "caud/reproduce.hpp"

using namespace caud;

namespace {

std::uint64_t default_seed() {
    if (const char* env = std::getenv("CAUD_SEED")) {
        char* end = nullptr;
        unsigned long long v = std::strtoull(env, &end, 10);
        if (end && *end == '\0') return static_cast<std::uint64_t>(v);
        throw UsageError("CAUD_SEED must be an unsigned integer");
    }
    return 1;
}

struct SchemeFlags {
    std::size_t bits = 16;
    std::size_t rsa_bits = 1024;
    std::size_t rsa_msg_bits = 128;
    std::uint64_t ctr_period = 100000;
    std::uint64_t oaep_period = 100000;
    std::size_t huncc_channels = 8;
    std::size_t huncc_channel_bytes = 16;
    std::size_t huncc_encrypted = 1;
    std::string huncc_inner = "aes_ctr";
    std::uint64_t huncc_matrix_seed = 0xC0DEDC0DEULL;
    std::size_t huncc_j_star = 1;

    void attach(CLI::App* cmd) {
        cmd->add_option("--bits", bits, "plaintext width for the baseline schemes")
            ->capture_default_str();
        cmd->add_option("--rsa-bits", rsa_bits, "RSA modulus width")->capture_default_str();
        cmd->add_option("--rsa-msg-bits", rsa_msg_bits, "RSA message width")
            ->capture_default_str();
        cmd->add_option("--ctr-period", ctr_period,
                        "counter reset period for aes_ctr_faulted")
            ->capture_default_str();
        cmd->add_option("--oaep-period", oaep_period,
                        "padding-seed reuse period for rsa_oaep_faulted")
            ->capture_default_str();
        cmd->add_option("--huncc-channels,--huncc.n_channels", huncc_channels,
                        "huncc.n_channels")
            ->capture_default_str();
        cmd->add_option("--huncc-channel-bytes,--huncc.channel_bytes", huncc_channel_bytes,
                        "huncc.channel_bytes")
            ->capture_default_str();
        cmd->add_option("--huncc-encrypted,--huncc.encrypted_channels", huncc_encrypted,
                        "huncc.encrypted_channels")
            ->capture_default_str();
        cmd->add_option("--huncc-inner,--huncc.inner_scheme", huncc_inner,
                        "huncc.inner_scheme")
            ->capture_default_str();
        cmd->add_option("--huncc-matrix-seed,--huncc.matrix_seed", huncc_matrix_seed,
                        "huncc.matrix_seed")
            ->capture_default_str();
        cmd->add_option("--huncc-j-star,--huncc.j_star", huncc_j_star, "huncc.j_star (1-based)")
            ->capture_default_str();
    }

    SchemeOptions resolve() const {
        SchemeOptions opt;
        opt.baseline_bits = bits;
        opt.rsa_modulus_bits = rsa_bits;
        opt.rsa_message_bits = rsa_msg_bits;
        opt.faults.ctr_reset_period = ctr_period;
        opt.faults.reuse_oaep_seed_period = oaep_period;
        opt.huncc.n_channels = huncc_channels;
        opt.huncc.channel_bytes = huncc_channel_bytes;
        opt.huncc.encrypted_channels = huncc_encrypted;
        opt.huncc.inner_scheme = huncc_inner;
        opt.huncc.matrix_seed = huncc_matrix_seed;
        opt.huncc.j_star = huncc_j_star;
        return opt;
    }
};

struct TrainFlags {
    std::string net = "small";
    bool full = false;
    double lr = 0.0;  // 0: preset default
    std::size_t epochs = 0;
    std::size_t batch = 0;
    double stabilizer = 0.1;
    std::size_t marginal_repeats = 1;

    void attach(CLI::App* cmd, bool with_marginal) {
        cmd->add_option("--net", net, "network size: small (2x100) or big (4x600)")
            ->capture_default_str()
            ->check(CLI::IsMember({"small", "big"}));
        cmd->add_flag("--full", full,
                      "full protocol scale: 1000 epochs, batch 10000, lr 1e-4");
        cmd->add_option("--lr", lr, "learning rate override");
        cmd->add_option("--epochs", epochs, "epoch count override");
        cmd->add_option("--batch", batch, "batch size override");
        cmd->add_option("--stabilizer", stabilizer, "variance stabilizer coefficient")
            ->capture_default_str();
        if (with_marginal)
            cmd->add_option("--marginal-repeats", marginal_repeats,
                            "marginal permutations averaged at evaluation")
                ->capture_default_str();
    }

    TrainConfig resolve(bool for_mine, std::uint64_t seed, std::size_t train_rows) const {
        ScalePreset preset = full ? ScalePreset::full() : ScalePreset::desk();
        TrainConfig cfg;
        cfg.epochs = epochs ? epochs : preset.epochs;
        cfg.batch_size = batch ? batch : preset.batch_size;
        cfg.learning_rate =
            lr > 0.0 ? lr
                     : (for_mine ? preset.mine_learning_rate : preset.cpa_learning_rate);
        auto [layers, width] = net_dims(parse_net_size(net));
        cfg.hidden_layers = layers;
        cfg.hidden_width = width;
        cfg.seed = seed;
        cfg.stabilizer_coeff = stabilizer;
        if (cfg.batch_size > train_rows) cfg.batch_size = train_rows;
        return cfg;
    }
};

void write_json(const json& j, const std::string& path) {
    if (path.empty() || path == "-") {
        std::cout << j.dump(2) << "\n";
        return;
    }
    std::ofstream os(path);
    if (!os) throw FormatError("cannot open output file " + path);
    os << j.dump(2) << "\n";
}

SampleSet load_split(const std::string& prefix, const std::string& explicit_path,
                     Split expected) {
    std::string path = explicit_path;
    if (path.empty()) {
        if (prefix.empty())
            throw UsageError("give a dataset prefix or --train-file/--test-file paths");
        path = prefix + (expected == Split::train ? "_train.cads" : "_test.cads");
    }
    SampleSet set = load_sampleset(path);
    if (set.split != expected)
        throw FormatError(path + ": split tag does not match its role");
    return set;
}

int cmd_gen(const std::string& scheme_name, const SchemeFlags& flags, std::size_t n_train,
            std::size_t n_test, std::uint64_t seed, std::string out_prefix) {
    auto scheme = make_scheme(scheme_name, flags.resolve());
    scheme->keygen(0, seed);
    DatasetSpec spec;
    spec.n_train = n_train;
    spec.n_test = n_test;
    spec.seed = seed;
    auto [train, test] = build_sampleset(spec, *scheme);
    if (out_prefix.empty()) out_prefix = scheme_name;
    const std::string train_path = out_prefix + "_train.cads";
    const std::string test_path = out_prefix + "_test.cads";
    save_sampleset(train, train_path);
    save_sampleset(test, test_path);
    std::printf("%s  rows=%zu  fingerprint=%s\n", train_path.c_str(), train.rows(),
                dataset_fingerprint(train).c_str());
    std::printf("%s  rows=%zu  fingerprint=%s\n", test_path.c_str(), test.rows(),
                dataset_fingerprint(test).c_str());
    return 0;
}

int cmd_mine(const std::string& prefix, const std::string& train_path,
             const std::string& test_path, const TrainFlags& flags, std::uint64_t seed,
             const std::string& out, const std::string& trace_path) {
    SampleSet train = load_split(prefix, train_path, Split::train);
    SampleSet test = load_split(prefix, test_path, Split::test);
    TrainConfig cfg = flags.resolve(true, seed, train.rows());

    MineRun run = train_mi(train, cfg);
    MiResult mi;
    mi.test_mi_nats = evaluate_mi(run.net, test, seed, flags.marginal_repeats);
    mi.trace = run.trace;
    mi.config = cfg;
    mi.dataset_fingerprint = dataset_fingerprint(train);

    AuditRequest req;  // reused only for its JSON assembly
    req.scheme = train.scheme_name;
    req.seed = seed;
    req.net = parse_net_size(flags.net);
    req.marginal_repeats = flags.marginal_repeats;
    req.mine_lr_override = cfg.learning_rate;
    req.epochs_override = cfg.epochs;
    req.batch_override = cfg.batch_size;
    req.stabilizer_coeff = cfg.stabilizer_coeff;
    json result = mi_result_to_json(req, mi);
    result["design_decisions"] = design_decision_flags();
    write_json(result, out);
    if (!trace_path.empty()) write_mi_trace_csv(run.trace, trace_path);
    std::fprintf(stderr, "test MI: %.6f nats (best train %.6f, last train %.6f)\n",
                 mi.test_mi_nats, mi.trace.best_train_mi, mi.trace.last_train_mi);
    return 0;
}

int cmd_cpa(const std::string& prefix, const std::string& train_path,
            const std::string& test_path, const TrainFlags& flags, std::uint64_t seed,
            const std::string& out, const std::string& trace_path) {
    SampleSet train = load_split(prefix, train_path, Split::train);
    SampleSet test = load_split(prefix, test_path, Split::test);
    TrainConfig cfg = flags.resolve(false, seed, train.rows());

    CpaModel model = train_classifier(train, cfg);
    GameResult game = run_game(model, test);
    Verdict v = verdict(game);

    AuditRequest req;
    req.scheme = train.scheme_name;
    req.seed = seed;
    req.net = parse_net_size(flags.net);
    json result = game_result_to_json(req, game, v, json::object());
    result["train_accuracy"] = model.trace.back().train_accuracy;
    result["train_bce_nats"] = model.trace.back().train_bce_nats;
    result["dataset_fingerprint"] = dataset_fingerprint(train);
    result["design_decisions"] = design_decision_flags();
    write_json(result, out);
    if (!trace_path.empty()) write_cpa_trace_csv(model.trace, trace_path);
    std::fprintf(stderr, "accuracy: %.4f over %zu challenges -> %s\n", game.accuracy,
                 game.trials, verdict_name(v));
    return 0;
}

int cmd_reproduce(int table, bool full, const std::string& net, std::uint64_t seed,
                  std::size_t jobs, const std::string& outdir) {
    ScalePreset scale = full ? ScalePreset::full() : ScalePreset::desk();
    NetSize net_size = parse_net_size(net);
    std::filesystem::create_directories(outdir);
    // Parallel rows stay internally single-threaded; results are identical
    // for any thread count either way.
    if (jobs > 1) setenv("CAUD_THREADS", "1", /*overwrite=*/0);

    TableSpec spec = table_spec(table);
    std::printf("Table %d: %s (%s scale, net=%s, seed=%llu)\n", table, spec.title.c_str(),
                scale.tag, net.c_str(), static_cast<unsigned long long>(seed));
    std::printf("%-18s %-16s %-16s %-20s %s\n", "scheme", "paper", "reproduced", "band",
                "result");

    auto fmt = [](double v, int prec) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
        return std::string(buf);
    };

    auto print_row = [&](const RowOutcome& r) {
        std::string paper, reproduced, band, result;
        const bool use_small = net_size == NetSize::small;
        if (r.row.run_mine) {
            auto p = use_small ? r.row.paper_mi_small : r.row.paper_mi_big;
            if (p) paper += fmt(*p, 3);
            if (r.test_mi) reproduced += fmt(*r.test_mi, 3);
            if (r.row.mi_min) band += "MI>=" + fmt(*r.row.mi_min, 1);
            if (r.row.mi_abs_max) band += "|MI|<=" + fmt(*r.row.mi_abs_max, 2);
        }
        if (r.row.run_cpa) {
            auto p = use_small ? r.row.paper_acc_small : r.row.paper_acc_big;
            if (p) {
                if (!paper.empty()) paper += "/";
                paper += fmt(*p * 100, 1) + "%";
            }
            if (r.accuracy) {
                if (!reproduced.empty()) reproduced += "/";
                reproduced += fmt(*r.accuracy * 100, 1) + "%";
            }
            if (r.row.acc_min || r.row.acc_max) {
                if (!band.empty()) band += " ";
                band += "acc[" + (r.row.acc_min ? fmt(*r.row.acc_min, 2) : "") + "," +
                        (r.row.acc_max ? fmt(*r.row.acc_max, 2) : "") + "]";
            }
        }
        if (!r.error.empty())
            result = "ERROR: " + r.error;
        else if (!r.checked)
            result = "reported";
        else
            result = r.passed ? "PASS" : "FAIL: " + r.failure;
        std::printf("%-18s %-16s %-16s %-20s %s\n", r.row.scheme.c_str(), paper.c_str(),
                    reproduced.c_str(), band.c_str(), result.c_str());
        std::fflush(stdout);
        if (r.error.empty()) {
            std::string base = outdir + "/table" + std::to_string(table) + "_" + r.row.scheme;
            std::ofstream os(base + ".json");
            os << r.report.dump(2) << "\n";
            if (!r.mi_trace.epochs.empty())
                write_mi_trace_csv(r.mi_trace, base + "_mi_trace.csv");
            if (!r.cpa_trace.empty()) write_cpa_trace_csv(r.cpa_trace, base + "_cpa_trace.csv");
        }
    };

    TableOutcome outcome = run_table(table, scale, net_size, seed, jobs, print_row);
    for (const auto& [check, ok] : outcome.orderings)
        std::printf("ordering: MI(%s) > MI(%s) + %.2f nats: %s\n", check.bigger.c_str(),
                    check.smaller.c_str(), check.margin, ok ? "PASS" : "FAIL");
    if (outcome.any_error) return 3;
    return outcome.all_passed ? 0 : 1;
}

int cmd_selftest() {
    int failures = 0;
    auto check = [&](const char* name, bool ok) {
        std::printf("%-44s %s\n", name, ok ? "PASS" : "FAIL");
        if (!ok) ++failures;
    };

    {
        Aes128 aes(from_hex("000102030405060708090a0b0c0d0e0f"));
        check("aes-128 known answer (FIPS 197 C.1)",
              to_hex(aes.encrypt_block(from_hex("00112233445566778899aabbccddeeff"))) ==
                  "69c4e0d86a7b0430d8cdb78070b4c55a");
    }
    {
        Des des(from_hex("133457799bbcdff1"));
        check("des known answer",
              to_hex(des.encrypt_block(from_hex("0123456789abcdef"))) == "85e813540f0ab405");
    }
    check("sha-256 known answer",
          sha256_hex(Bytes{'a', 'b', 'c'}) ==
              "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    {
        bool ok = gf256::mul(0x53, 0xCA) == 0x01;
        for (int x = 1; x < 256 && ok; ++x)
            ok = gf256::mul(static_cast<std::uint8_t>(x),
                            gf256::inv(static_cast<std::uint8_t>(x))) == 1;
        Rng rng(99);
        for (int t = 0; t < 10000 && ok; ++t) {
            auto a = static_cast<std::uint8_t>(rng.next_u64());
            auto b = static_cast<std::uint8_t>(rng.next_u64());
            auto c = static_cast<std::uint8_t>(rng.next_u64());
            ok = gf256::mul(a, gf256::add(b, c)) ==
                 gf256::add(gf256::mul(a, b), gf256::mul(a, c));
        }
        check("gf(2^8) inverse table and axioms", ok);
    }
    {
        RsaKey key;
        key.n = BigUint(3233);
        key.e = BigUint(17);
        key.d = BigUint(413);
        key.modulus_bits = 12;
        check("rsa textbook vector (65^17 mod 3233)",
              BigUint::from_bytes_be(rsa_encrypt_plain(key, Bytes{0x00, 0x41})).low_u64() ==
                  2790);
    }
    {
        auto scheme = make_scheme("huncc");
        scheme->keygen(0, 7);
        bool ok = true;
        Rng rng(8);
        for (std::uint64_t i = 0; i < 20 && ok; ++i) {
            Bytes m = random_bytes(rng.next_u64(), 128);
            ok = scheme->decrypt(scheme->encrypt(m, i), i) == m;
        }
        check("huncc encode/decode roundtrip", ok);
    }
    {
        bool ok = true;
        for (int trial = 0; trial < 10 && ok; ++trial) {
            Rng rng(derive_seed(0x5E1F7E57, trial));
            MlpNetwork net = make_network(3, 1, 6,
                                          trial % 2 ? OutputActivation::sigmoid
                                                    : OutputActivation::linear,
                                          rng.next_u64());
            for (double& b : net.biases[0]) b = 0.5;
            oracle::LossProbe probe;
            probe.kind = trial % 2 ? oracle::LossKind::bce : oracle::LossKind::dv;
            probe.joint_batch = Matrix(5, 3);
            for (double& v : probe.joint_batch.data()) v = 0.2 * rng.next_double();
            if (probe.kind == oracle::LossKind::dv) {
                probe.marginal_batch = Matrix(5, 3);
                for (double& v : probe.marginal_batch.data()) v = 0.2 * rng.next_double();
            } else {
                probe.labels.resize(5);
                for (auto& l : probe.labels) l = rng.next_u64() % 2 ? 1.0 : 0.0;
            }
            ok = oracle::finite_diff_check(net, probe, 1e-4) < 1e-4;
        }
        check("gradient oracle (10 cases)", ok);
    }
    {
        auto scheme = make_scheme("identity");
        scheme->keygen(0, 3);
        DatasetSpec spec;
        spec.n_train = 64;
        spec.n_test = 16;
        spec.seed = 3;
        auto [train, test] = build_sampleset(spec, *scheme);
        std::string blob = serialize_sampleset(train);
        SampleSet back = deserialize_sampleset(
            reinterpret_cast<const std::uint8_t*>(blob.data()), blob.size());
        check("sample-set serialization roundtrip", serialize_sampleset(back) == blob);
    }
    std::printf("%s\n", failures == 0 ? "selftest: all checks passed"
                                      : "selftest: FAILURES present");
    return failures == 0 ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"caudit - ML-based cryptosystem security audit toolkit"};
    app.require_subcommand(1);
    // key=value config file; subcommand options live in a [gen]/[mine]/...
    // section. Flags take precedence over file values, which take precedence
    // over defaults.
    app.set_config("--config", "", "key=value config file (see README)");

    std::uint64_t seed = 0;
    bool seed_set = false;
    auto add_seed = [&](CLI::App* cmd) {
        cmd->add_option("--seed", seed, "master seed (default: CAUD_SEED or 1)")
            ->each([&](const std::string&) { seed_set = true; });
    };

    auto* gen = app.add_subcommand("gen", "generate train/test sample-set files");
    std::string gen_scheme;
    SchemeFlags gen_flags;
    std::size_t gen_train = 0, gen_test = 0;
    bool gen_full = false;
    std::string gen_out;
    gen->add_option("--scheme", gen_scheme, "scheme name from the registry")->required();
    gen_flags.attach(gen);
    gen->add_option("--train", gen_train, "training rows (default by scale)");
    gen->add_option("--test", gen_test, "test rows (default by scale)");
    gen->add_flag("--full", gen_full, "full protocol scale (100000/20000 rows)");
    gen->add_option("--out", gen_out, "output path prefix (default: scheme name)");
    add_seed(gen);

    auto* mine = app.add_subcommand("mine", "neural MI estimation on a dataset");
    std::string mine_prefix, mine_train, mine_test, mine_out = "-", mine_trace;
    TrainFlags mine_flags;
    mine->add_option("dataset", mine_prefix,
                     "dataset path prefix (expects <prefix>_train.cads/_test.cads)");
    mine->add_option("--train-file", mine_train, "explicit training sample-set file");
    mine->add_option("--test-file", mine_test, "explicit test sample-set file");
    mine_flags.attach(mine, true);
    mine->add_option("--out", mine_out, "result JSON path ('-' for stdout)")
        ->capture_default_str();
    mine->add_option("--trace", mine_trace, "per-epoch trace CSV path");
    add_seed(mine);

    auto* cpa = app.add_subcommand("cpa", "IND-CPA classifier game on a dataset");
    std::string cpa_prefix, cpa_train, cpa_test, cpa_out = "-", cpa_trace;
    TrainFlags cpa_flags;
    cpa->add_option("dataset", cpa_prefix,
                    "dataset path prefix (expects <prefix>_train.cads/_test.cads)");
    cpa->add_option("--train-file", cpa_train, "explicit training sample-set file");
    cpa->add_option("--test-file", cpa_test, "explicit test sample-set file");
    cpa_flags.attach(cpa, false);
    cpa->add_option("--out", cpa_out, "result JSON path ('-' for stdout)")
        ->capture_default_str();
    cpa->add_option("--trace", cpa_trace, "per-epoch trace CSV path");
    add_seed(cpa);

    auto* rep = app.add_subcommand("reproduce", "run a published results table");
    int rep_table = 0;
    bool rep_full = false;
    std::string rep_net = "small";
    std::size_t rep_jobs = 1;
    std::string rep_outdir = "reproduce_out";
    rep->add_option("--table", rep_table, "table number: 1, 2, 3 or 4")
        ->required()
        ->check(CLI::Range(1, 4));
    rep->add_flag("--full", rep_full, "full protocol scale");
    rep->add_option("--net", rep_net, "network size")
        ->capture_default_str()
        ->check(CLI::IsMember({"small", "big"}));
    rep->add_option("--jobs", rep_jobs, "parallel row jobs")->capture_default_str();
    rep->add_option("--outdir", rep_outdir, "directory for row report JSONs")
        ->capture_default_str();
    add_seed(rep);

    app.add_subcommand("selftest", "known-answer and oracle checks");

    try {
        app.parse(argc, argv);
        if (!seed_set) seed = default_seed();

        if (gen->parsed()) {
            ScalePreset preset = gen_full ? ScalePreset::full() : ScalePreset::desk();
            if (gen_train == 0) gen_train = preset.n_train;
            if (gen_test == 0) gen_test = preset.n_test;
            return cmd_gen(gen_scheme, gen_flags, gen_train, gen_test, seed, gen_out);
        }
        if (mine->parsed())
            return cmd_mine(mine_prefix, mine_train, mine_test, mine_flags, seed, mine_out,
                            mine_trace);
        if (cpa->parsed())
            return cmd_cpa(cpa_prefix, cpa_train, cpa_test, cpa_flags, seed, cpa_out,
                           cpa_trace);
        if (rep->parsed())
            return cmd_reproduce(rep_table, rep_full, rep_net, seed, rep_jobs, rep_outdir);
        return cmd_selftest();
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numeric failure: %s\n", e.what());
        return 3;
    } catch (const UsageError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return 2;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return 2;
    } catch (const FormatError& e) {
        std::fprintf(stderr, "format error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
