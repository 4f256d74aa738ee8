#include "doctest.h"

#include <set>

#include "caud/rng.hpp"

using namespace caud;

TEST_SUITE_BEGIN("rng");

TEST_CASE("stream is a pure function of seed and position") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    CHECK(stream_at(42, 7) == stream_at(42, 7));
    CHECK(stream_at(42, 7) != stream_at(42, 8));
    CHECK(stream_at(42, 7) != stream_at(43, 7));
}

TEST_CASE("derived seeds separate streams") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t tag = 0; tag < 64; ++tag) seen.insert(derive_seed(99, tag));
    CHECK(seen.size() == 64);
    CHECK(derive_seed(99, 1, 5) != derive_seed(99, 1, 6));
    CHECK(derive_seed(99, 1, 5) != derive_seed(99, 2, 5));
}

TEST_CASE("doubles live in [0,1) and look uniform") {
    Rng rng(7);
    double sum = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        double v = rng.next_double();
        REQUIRE(v >= 0.0);
        REQUIRE(v < 1.0);
        sum += v;
    }
    CHECK(sum / n == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("random_permutation is a bijection and seeded") {
    Rng rng(3);
    auto perm = random_permutation(257, rng);
    std::set<std::size_t> values(perm.begin(), perm.end());
    CHECK(values.size() == 257);
    CHECK(*values.begin() == 0);
    CHECK(*values.rbegin() == 256);

    Rng rng2(3);
    CHECK(random_permutation(257, rng2) == perm);

    Rng rng3(4);
    auto one = random_permutation(1, rng3);
    CHECK(one == std::vector<std::size_t>{0});
}

TEST_SUITE_END();
