#include "doctest.h"

#include <cstdio>
#include <set>

#include "caud/dataset.hpp"
#include "caud/registry.hpp"

using namespace caud;

TEST_SUITE_BEGIN("dataset");

TEST_CASE("gen_plaintexts: zero kind, determinism, per-position balance") {
    BitMatrix zeros = gen_plaintexts(PlaintextKind::zero, 3, 8, 99);
    for (std::size_t r = 0; r < 3; ++r) CHECK(zeros.row_is_zero(r));

    BitMatrix a = gen_plaintexts(PlaintextKind::uniform, 1000, 128, 7);
    BitMatrix b = gen_plaintexts(PlaintextKind::uniform, 1000, 128, 7);
    CHECK(a.storage() == b.storage());
    CHECK(gen_plaintexts(PlaintextKind::uniform, 10, 128, 8).storage() !=
          BitMatrix(gen_plaintexts(PlaintextKind::uniform, 10, 128, 7)).storage());

    // Binomial bound: per-bit ones fraction within [0.494, 0.506] at n=100000.
    BitMatrix big = gen_plaintexts(PlaintextKind::uniform, 100000, 128, 21);
    for (std::size_t bit = 0; bit < 128; ++bit) {
        std::size_t ones = 0;
        for (std::size_t r = 0; r < big.rows(); ++r) ones += big.get(r, bit);
        double frac = static_cast<double>(ones) / 100000.0;
        REQUIRE(frac >= 0.494);
        REQUIRE(frac <= 0.506);
    }
}

TEST_CASE("build_sampleset: identity scheme mirrors plaintexts") {
    auto scheme = make_scheme("identity");
    scheme->keygen(0, 5);
    DatasetSpec spec;
    spec.n_train = 200;
    spec.n_test = 40;
    spec.seed = 5;
    auto [train, test] = build_sampleset(spec, *scheme);
    CHECK(train.rows() == 200);
    CHECK(test.rows() == 40);
    for (std::size_t r = 0; r < train.rows(); ++r)
        CHECK(train.plaintexts.rows_equal(r, train.ciphertexts, r));
    train.validate();
    test.validate();
}

TEST_CASE("build_sampleset: interleaved balanced classes, zero rows are class 0") {
    auto scheme = make_scheme("xor_const");
    scheme->keygen(0, 6);
    DatasetSpec spec;
    spec.n_train = 100;
    spec.n_test = 20;
    spec.seed = 6;
    auto [train, test] = build_sampleset(spec, *scheme);
    auto* xs = dynamic_cast<XorConstScheme*>(scheme.get());
    for (std::size_t r = 0; r < train.rows(); ++r) {
        CHECK(train.labels[r] == (r % 2));
        if (train.labels[r] == 0) {
            CHECK(train.plaintexts.row_is_zero(r));
            // 0 xor K = K.
            CHECK(train.ciphertexts.row_bytes_copy(r) == xs->key());
        }
    }
}

TEST_CASE("build_sampleset: defaults match the dataset protocol scale") {
    auto scheme = make_scheme("identity");
    scheme->keygen(0, 1);
    DatasetSpec spec;  // 100000 / 20000 defaults
    spec.seed = 1;
    auto [train, test] = build_sampleset(spec, *scheme);
    CHECK(train.rows() == 100000);
    CHECK(test.rows() == 20000);
    std::size_t train_ones = 0, test_ones = 0;
    for (auto l : train.labels) train_ones += l;
    for (auto l : test.labels) test_ones += l;
    CHECK(train_ones == 50000);
    CHECK(test_ones == 10000);
}

TEST_CASE("train and test uniform rows never collide for widths >= 64") {
    auto scheme = make_scheme("aes_ecb");
    scheme->keygen(0, 8);
    DatasetSpec spec;
    spec.n_train = 5000;
    spec.n_test = 1000;
    spec.seed = 8;
    auto [train, test] = build_sampleset(spec, *scheme);
    std::set<Bytes> train_rows;
    for (std::size_t r = 0; r < train.rows(); ++r)
        if (train.labels[r] == 1) train_rows.insert(train.plaintexts.row_bytes_copy(r));
    for (std::size_t r = 0; r < test.rows(); ++r)
        if (test.labels[r] == 1)
            REQUIRE(train_rows.count(test.plaintexts.row_bytes_copy(r)) == 0);
}

TEST_CASE("regeneration is bit-identical") {
    SchemeOptions opt;
    auto s1 = make_scheme("aes_ctr", opt);
    auto s2 = make_scheme("aes_ctr", opt);
    s1->keygen(0, 99);
    s2->keygen(0, 99);
    DatasetSpec spec;
    spec.n_train = 300;
    spec.n_test = 100;
    spec.seed = 12;
    auto [tr1, te1] = build_sampleset(spec, *s1);
    auto [tr2, te2] = build_sampleset(spec, *s2);
    CHECK(serialize_sampleset(tr1) == serialize_sampleset(tr2));
    CHECK(serialize_sampleset(te1) == serialize_sampleset(te2));
    CHECK(dataset_fingerprint(tr1) == dataset_fingerprint(tr2));
    CHECK(dataset_fingerprint(tr1) != dataset_fingerprint(te1));
}

TEST_CASE("file roundtrip is lossless and the size formula holds") {
    auto scheme = make_scheme("des_rand");
    scheme->keygen(0, 31);
    DatasetSpec spec;
    spec.n_train = 128;
    spec.n_test = 64;
    spec.seed = 31;
    auto [train, test] = build_sampleset(spec, *scheme);

    std::string path = "dataset_roundtrip_test.cads";
    save_sampleset(train, path);
    SampleSet back = load_sampleset(path);
    CHECK(serialize_sampleset(back) == serialize_sampleset(train));
    CHECK(back.scheme_name == train.scheme_name);
    CHECK(back.split == Split::train);
    std::remove(path.c_str());

    // Header is 4 + 4 + 4 + name + 4 + 4 + 8 + 1 + 8 bytes; payload is
    // rows * (pt_bytes + ct_bytes + 1).
    std::string blob = serialize_sampleset(train);
    std::size_t header = 37 + train.scheme_name.size();
    std::size_t payload = train.rows() * (bytes_for_bits(train.plaintext_bits) +
                                          bytes_for_bits(train.ciphertext_bits) + 1);
    CHECK(blob.size() == header + payload);
}

TEST_CASE("corrupted files are rejected") {
    auto scheme = make_scheme("identity");
    scheme->keygen(0, 2);
    DatasetSpec spec;
    spec.n_train = 10;
    spec.n_test = 4;
    spec.seed = 2;
    auto [train, test] = build_sampleset(spec, *scheme);
    std::string blob = serialize_sampleset(train);

    std::string bad_magic = blob;
    bad_magic[0] = 'X';
    CHECK_THROWS_AS(deserialize_sampleset(
                        reinterpret_cast<const std::uint8_t*>(bad_magic.data()),
                        bad_magic.size()),
                    FormatError);

    CHECK_THROWS_AS(deserialize_sampleset(
                        reinterpret_cast<const std::uint8_t*>(blob.data()), blob.size() - 3),
                    FormatError);

    std::string trailing = blob + "zz";
    CHECK_THROWS_AS(deserialize_sampleset(
                        reinterpret_cast<const std::uint8_t*>(trailing.data()),
                        trailing.size()),
                    FormatError);
}

TEST_CASE("spec validation") {
    DatasetSpec odd;
    odd.n_train = 101;
    CHECK_THROWS_AS(odd.validate(), UsageError);
    DatasetSpec odd_test;
    odd_test.n_test = 7;
    CHECK_THROWS_AS(odd_test.validate(), UsageError);
}

TEST_SUITE_END();
