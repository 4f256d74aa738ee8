#include "doctest.h"

#include "caud/des.hpp"

using namespace caud;

TEST_SUITE_BEGIN("des");

TEST_CASE("classic published vector") {
    Des des(from_hex("133457799bbcdff1"));
    Bytes ct = des.encrypt_block(from_hex("0123456789abcdef"));
    CHECK(to_hex(ct) == "85e813540f0ab405");
    CHECK(to_hex(des.decrypt_block(ct)) == "0123456789abcdef");
}

TEST_CASE("FIPS 81 style vector") {
    // Key 0123456789abcdef, plaintext "Now is t".
    Des des(from_hex("0123456789abcdef"));
    CHECK(to_hex(des.encrypt_block(from_hex("4e6f772069732074"))) == "3fa40e8a984d4815");
}

TEST_CASE("all-zero key and block") {
    Des des(from_hex("0000000000000000"));
    CHECK(to_hex(des.encrypt_block(from_hex("0000000000000000"))) == "8ca64de9c1b123a7");
}

TEST_CASE("roundtrip over random blocks") {
    Des des(from_hex("0e329232ea6d0d73"));
    for (std::uint64_t trial = 0; trial < 500; ++trial) {
        std::uint64_t block = trial * 0x9E3779B97F4A7C15ULL;
        CHECK(des.decrypt_block(des.encrypt_block(block)) == block);
    }
}

TEST_CASE("key width is checked") {
    CHECK_THROWS_AS(Des(Bytes(7, 0)), UsageError);
}

TEST_SUITE_END();
