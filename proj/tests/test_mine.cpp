#include "doctest.h"

#include <cmath>
#include <set>

#include "caud/mine.hpp"
#include "caud/registry.hpp"

using namespace caud;

TEST_SUITE_BEGIN("mine");

namespace {

// Synthetic set: X uniform over `bits`, Y = X, labels alternate (unused by
// the estimator).
SampleSet synthetic_identity(std::size_t rows, std::size_t bits, std::uint64_t seed) {
    SampleSet set;
    set.scheme_name = "synthetic";
    set.plaintext_bits = bits;
    set.ciphertext_bits = bits;
    set.plaintexts = gen_plaintexts(PlaintextKind::uniform, rows, bits, seed);
    set.ciphertexts = set.plaintexts;
    set.labels.resize(rows);
    for (std::size_t r = 0; r < rows; ++r) set.labels[r] = r % 2;
    set.split = Split::train;
    set.seed = seed;
    return set;
}

} // namespace

TEST_CASE("pair_batches: joint concatenation and marginal bijection") {
    Rng data_rng(1);
    Matrix x(5, 2), y(5, 3);
    for (double& v : x.data()) v = data_rng.next_double();
    for (double& v : y.data()) v = data_rng.next_double();

    Rng rng(2);
    auto [joint, marginal] = pair_batches(x, y, rng);
    REQUIRE(joint.rows() == 5);
    REQUIRE(joint.cols() == 5);
    for (std::size_t i = 0; i < 5; ++i) {
        for (std::size_t c = 0; c < 2; ++c) {
            CHECK(joint(i, c) == x(i, c));
            CHECK(marginal(i, c) == x(i, c));
        }
        for (std::size_t c = 0; c < 3; ++c) CHECK(joint(i, 2 + c) == y(i, c));
    }
    // Multiset of marginal y rows equals the original rows.
    std::multiset<std::vector<double>> original, permuted;
    for (std::size_t i = 0; i < 5; ++i) {
        original.insert({y(i, 0), y(i, 1), y(i, 2)});
        permuted.insert({marginal(i, 2), marginal(i, 3), marginal(i, 4)});
    }
    CHECK(original == permuted);

    // Seeded determinism.
    Rng rng2(2);
    auto [j2, m2] = pair_batches(x, y, rng2);
    CHECK(m2.data() == marginal.data());

    // Batch of one: identity pairing.
    Matrix x1(1, 2), y1(1, 3);
    Rng rng3(3);
    auto [j1, m1] = pair_batches(x1, y1, rng3);
    CHECK(j1.data() == m1.data());

    Matrix bad(4, 3);
    Rng rng4(4);
    CHECK_THROWS_AS(pair_batches(x, bad, rng4), UsageError);
}

TEST_CASE("constant critic evaluates to exactly zero") {
    SampleSet set = synthetic_identity(64, 4, 10);
    MlpNetwork net = make_network(8, 2, 8, OutputActivation::linear, 11);
    for (auto& w : net.weights)
        for (double& v : w.data()) v = 0.0;
    CHECK(evaluate_mi(net, set, 12) == 0.0);
}

TEST_CASE("DV estimate is invariant to constant score shifts") {
    SampleSet set = synthetic_identity(128, 4, 13);
    MlpNetwork net = make_network(8, 1, 10, OutputActivation::linear, 14);
    double base = evaluate_mi(net, set, 15);
    // Shifting the output bias shifts every score by the same constant.
    MlpNetwork shifted = net;
    shifted.biases.back()[0] += 5.0;
    double moved = evaluate_mi(shifted, set, 15);
    CHECK(std::abs(moved - base) < 1e-9);
}

TEST_CASE("training is deterministic per seed and records a full trace") {
    SampleSet set = synthetic_identity(256, 4, 16);
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.batch_size = 64;
    cfg.learning_rate = 0.05;
    cfg.hidden_layers = 1;
    cfg.hidden_width = 16;
    cfg.seed = 17;
    MineRun a = train_mi(set, cfg);
    MineRun b = train_mi(set, cfg);
    REQUIRE(a.trace.epochs.size() == 5);
    for (std::size_t e = 0; e < 5; ++e) {
        CHECK(a.trace.epochs[e].train_mi_nats == b.trace.epochs[e].train_mi_nats);
        CHECK(a.trace.epochs[e].stabilized_objective ==
              b.trace.epochs[e].stabilized_objective);
    }
    for (std::size_t l = 0; l < a.net.layer_count(); ++l)
        CHECK(a.net.weights[l].data() == b.net.weights[l].data());
    CHECK(a.trace.best_train_mi >= a.trace.last_train_mi - 1e-12);
    CHECK(evaluate_mi(a.net, set, 18) == evaluate_mi(b.net, set, 18));
}

TEST_CASE("short final batches are dropped") {
    SampleSet set = synthetic_identity(100, 4, 19);
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.batch_size = 30;  // 3 full batches, 10 rows dropped
    cfg.hidden_layers = 1;
    cfg.hidden_width = 8;
    cfg.seed = 20;
    MineRun run = train_mi(set, cfg);
    CHECK(run.trace.epochs.size() == 1);

    TrainConfig too_big = cfg;
    too_big.batch_size = 101;
    CHECK_THROWS_AS(train_mi(set, too_big), UsageError);
}

TEST_CASE("evaluate_mi checks widths and repeats") {
    SampleSet set = synthetic_identity(32, 4, 21);
    MlpNetwork wrong = make_network(10, 1, 4, OutputActivation::linear, 22);
    CHECK_THROWS_AS(evaluate_mi(wrong, set, 23), UsageError);
    MlpNetwork net = make_network(8, 1, 4, OutputActivation::linear, 24);
    CHECK_THROWS_AS(evaluate_mi(net, set, 25, 0), UsageError);
    // Averaging over repeats is deterministic too.
    CHECK(evaluate_mi(net, set, 26, 3) == evaluate_mi(net, set, 26, 3));
}

TEST_SUITE_END();
