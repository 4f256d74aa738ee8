#pragma once

#include <cstdint>
#include <cstddef>

#include "caud/bigint.hpp"
#include "caud/bits.hpp"
#include "caud/errors.hpp"
#include "caud/rng.hpp"
#include "caud/sha256.hpp"

namespace caud {

struct RsaKey {
    BigUint n;
    BigUint e;
    BigUint d;
    BigUint lambda;  // lcm(p-1, q-1); kept so e*d = 1 (mod lambda) is checkable
    std::size_t modulus_bits = 0;

    std::size_t modulus_bytes() const { return (modulus_bits + 7) / 8; }
};

inline constexpr std::uint64_t kRsaPublicExponent = 65537;

// Seeded key generation: two primes of modulus_bits/2, d = e^-1 mod
// lambda(n). Deterministic for a fixed seed.
inline RsaKey rsa_keygen(std::size_t modulus_bits, std::uint64_t seed) {
    if (modulus_bits < 64 || modulus_bits % 2 != 0)
        throw ConfigError("rsa_keygen: modulus_bits must be even and >= 64");
    Rng rng(derive_seed(seed, stream_tag::keygen));
    BigUint p = generate_prime(modulus_bits / 2, kRsaPublicExponent, rng);
    BigUint q = generate_prime(modulus_bits / 2, kRsaPublicExponent, rng);
    while (q == p) q = generate_prime(modulus_bits / 2, kRsaPublicExponent, rng);
    RsaKey key;
    key.n = p * q;
    key.e = BigUint(kRsaPublicExponent);
    BigUint p1 = p - BigUint(1);
    BigUint q1 = q - BigUint(1);
    key.lambda = (p1 * q1) / BigUint::gcd(p1, q1);
    key.d = BigUint::mod_inverse(key.e, key.lambda);
    key.modulus_bits = key.n.bit_length();
    if (key.modulus_bits != modulus_bits)
        throw ConfigError("rsa_keygen: modulus came out at " +
                          std::to_string(key.modulus_bits) + " bits");
    return key;
}

// Textbook RSA on big-endian byte strings. Deterministic by construction.
inline Bytes rsa_encrypt_plain(const RsaKey& key, const Bytes& message) {
    BigUint m = BigUint::from_bytes_be(message);
    if (m >= key.n) throw UsageError("rsa_encrypt_plain: message >= modulus");
    return BigUint::mod_pow(m, key.e, key.n).to_bytes_be(key.modulus_bytes());
}

inline Bytes rsa_decrypt_plain(const RsaKey& key, const Bytes& ciphertext, std::size_t out_len) {
    BigUint c = BigUint::from_bytes_be(ciphertext);
    if (c >= key.n) throw UsageError("rsa_decrypt_plain: ciphertext >= modulus");
    return BigUint::mod_pow(c, key.d, key.n).to_bytes_be(out_len);
}

// EME-OAEP (RFC 8017) with SHA-256 and an empty label. The padding seed is
// supplied by the caller, which is what makes seed-reuse faults expressible.
inline constexpr std::size_t kOaepHashLen = 32;

inline Bytes oaep_encode(const Bytes& message, const Bytes& pad_seed, std::size_t k) {
    if (pad_seed.size() != kOaepHashLen)
        throw UsageError("oaep_encode: pad seed must be 32 bytes");
    if (k < 2 * kOaepHashLen + 2 || message.size() > k - 2 * kOaepHashLen - 2)
        throw UsageError("oaep_encode: message too long for modulus");
    Bytes l_hash = sha256(Bytes{});
    Bytes db;
    db.reserve(k - kOaepHashLen - 1);
    db.insert(db.end(), l_hash.begin(), l_hash.end());
    db.resize(k - kOaepHashLen - 1 - message.size() - 1, 0x00);
    db.push_back(0x01);
    db.insert(db.end(), message.begin(), message.end());

    Bytes db_mask = mgf1_sha256(pad_seed, db.size());
    Bytes masked_db = xor_bytes(db, db_mask);
    Bytes seed_mask = mgf1_sha256(masked_db, kOaepHashLen);
    Bytes masked_seed = xor_bytes(pad_seed, seed_mask);

    Bytes em;
    em.reserve(k);
    em.push_back(0x00);
    em.insert(em.end(), masked_seed.begin(), masked_seed.end());
    em.insert(em.end(), masked_db.begin(), masked_db.end());
    return em;
}

inline Bytes oaep_decode(const Bytes& em) {
    if (em.size() < 2 * kOaepHashLen + 2 || em[0] != 0x00)
        throw FormatError("oaep_decode: malformed encoding");
    Bytes masked_seed(em.begin() + 1, em.begin() + 1 + kOaepHashLen);
    Bytes masked_db(em.begin() + 1 + kOaepHashLen, em.end());
    Bytes seed_mask = mgf1_sha256(masked_db, kOaepHashLen);
    Bytes seed = xor_bytes(masked_seed, seed_mask);
    Bytes db_mask = mgf1_sha256(seed, masked_db.size());
    Bytes db = xor_bytes(masked_db, db_mask);
    Bytes l_hash = sha256(Bytes{});
    for (std::size_t i = 0; i < kOaepHashLen; ++i)
        if (db[i] != l_hash[i]) throw FormatError("oaep_decode: label hash mismatch");
    std::size_t i = kOaepHashLen;
    while (i < db.size() && db[i] == 0x00) ++i;
    if (i == db.size() || db[i] != 0x01) throw FormatError("oaep_decode: missing separator");
    return Bytes(db.begin() + i + 1, db.end());
}

inline Bytes rsa_encrypt_oaep(const RsaKey& key, const Bytes& message, const Bytes& pad_seed) {
    Bytes em = oaep_encode(message, pad_seed, key.modulus_bytes());
    BigUint m = BigUint::from_bytes_be(em);
    if (m >= key.n) throw UsageError("rsa_encrypt_oaep: encoded message >= modulus");
    return BigUint::mod_pow(m, key.e, key.n).to_bytes_be(key.modulus_bytes());
}

inline Bytes rsa_decrypt_oaep(const RsaKey& key, const Bytes& ciphertext) {
    BigUint c = BigUint::from_bytes_be(ciphertext);
    if (c >= key.n) throw UsageError("rsa_decrypt_oaep: ciphertext >= modulus");
    Bytes em = BigUint::mod_pow(c, key.d, key.n).to_bytes_be(key.modulus_bytes());
    return oaep_decode(em);
}

} // namespace caud
