#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "caud/aes.hpp"
#include "caud/bits.hpp"
#include "caud/des.hpp"
#include "caud/errors.hpp"
#include "caud/rng.hpp"
#include "caud/rsa.hpp"

#include "json.hpp"

namespace caud {

// Deliberate misuse knobs: counter reset for CTR modes and padding-seed
// reuse for OAEP. Absent means unfaulted.
struct FaultConfig {
    std::optional<std::uint64_t> ctr_reset_period;
    std::optional<std::uint64_t> reuse_oaep_seed_period;

    void validate() const {
        if (ctr_reset_period && *ctr_reset_period < 1)
            throw UsageError("FaultConfig: ctr_reset_period must be >= 1");
        if (reuse_oaep_seed_period && *reuse_oaep_seed_period < 1)
            throw UsageError("FaultConfig: reuse_oaep_seed_period must be >= 1");
    }
};

// Behavioral interface for an encryption scheme under audit. Schemes are
// pure functions of (key material, plaintext, sample index); all per-sample
// randomness is derived from the index so encryption is replayable and
// parallelizable.
class CipherScheme {
public:
    virtual ~CipherScheme() = default;

    virtual std::string name() const = 0;
    virtual std::size_t plaintext_bits() const = 0;
    virtual std::size_t ciphertext_bits() const = 0;
    virtual bool deterministic() const = 0;

    // kappa = 0 selects the scheme default security parameter.
    virtual void keygen(std::uint32_t kappa, std::uint64_t seed) = 0;

    virtual Bytes encrypt(const Bytes& plaintext, std::uint64_t sample_index) const = 0;

    virtual bool has_decrypt() const { return false; }
    virtual Bytes decrypt(const Bytes&, std::uint64_t) const {
        throw UsageError(name() + ": no decryptor implemented");
    }

    // Plaintext for a label-0 row. The standard protocol uses the all-zero
    // message; the individual-secrecy datasets override this.
    virtual Bytes class0_plaintext(std::uint64_t /*row_seed*/) const {
        return Bytes(bytes_for_bits(plaintext_bits()), 0x00);
    }
    virtual bool class0_all_zero() const { return true; }

    virtual nlohmann::json fault_flags() const { return nlohmann::json::object(); }

    std::size_t plaintext_bytes() const { return bytes_for_bits(plaintext_bits()); }
    std::size_t ciphertext_bytes() const { return bytes_for_bits(ciphertext_bits()); }

protected:
    void require_plaintext_width(const Bytes& m) const {
        if (m.size() != plaintext_bytes())
            throw UsageError(name() + ": plaintext must be " +
                             std::to_string(plaintext_bytes()) + " bytes");
    }
    void require_keyed(bool keyed) const {
        if (!keyed) throw UsageError(name() + ": keygen() not called");
    }
};

// --------------------------------------------------------------------------
// Baselines: identity, one-time pad, constant XOR.

class IdentityScheme final : public CipherScheme {
public:
    explicit IdentityScheme(std::size_t bits = 16) : bits_(bits) {
        if (bits_ == 0) throw ConfigError("identity: width must be positive");
    }
    std::string name() const override { return "identity"; }
    std::size_t plaintext_bits() const override { return bits_; }
    std::size_t ciphertext_bits() const override { return bits_; }
    bool deterministic() const override { return true; }
    void keygen(std::uint32_t, std::uint64_t) override {}
    Bytes encrypt(const Bytes& m, std::uint64_t) const override {
        require_plaintext_width(m);
        return m;
    }
    bool has_decrypt() const override { return true; }
    Bytes decrypt(const Bytes& c, std::uint64_t) const override { return c; }

private:
    std::size_t bits_;
};

class OtpScheme final : public CipherScheme {
public:
    explicit OtpScheme(std::size_t bits = 16) : bits_(bits) {
        if (bits_ == 0) throw ConfigError("otp: width must be positive");
    }
    std::string name() const override { return "otp"; }
    std::size_t plaintext_bits() const override { return bits_; }
    std::size_t ciphertext_bits() const override { return bits_; }
    bool deterministic() const override { return false; }
    void keygen(std::uint32_t, std::uint64_t seed) override {
        pad_seed_ = derive_seed(seed, stream_tag::otp_pad);
        keyed_ = true;
    }
    Bytes encrypt(const Bytes& m, std::uint64_t index) const override {
        require_keyed(keyed_);
        require_plaintext_width(m);
        Bytes out = xor_bytes(m, pad(index));
        out.back() &= tail_mask(bits_);
        return out;
    }
    bool has_decrypt() const override { return true; }
    Bytes decrypt(const Bytes& c, std::uint64_t index) const override {
        return encrypt(c, index);
    }

private:
    Bytes pad(std::uint64_t index) const {
        return random_bytes(derive_seed(pad_seed_, index), bytes_for_bits(bits_));
    }
    std::size_t bits_;
    std::uint64_t pad_seed_ = 0;
    bool keyed_ = false;
};

class XorConstScheme final : public CipherScheme {
public:
    explicit XorConstScheme(std::size_t bits = 16) : bits_(bits) {
        if (bits_ == 0) throw ConfigError("xor_const: width must be positive");
    }
    std::string name() const override { return "xor_const"; }
    std::size_t plaintext_bits() const override { return bits_; }
    std::size_t ciphertext_bits() const override { return bits_; }
    bool deterministic() const override { return true; }
    void keygen(std::uint32_t, std::uint64_t seed) override {
        key_ = random_bytes(derive_seed(seed, stream_tag::keygen), bytes_for_bits(bits_));
        key_.back() &= tail_mask(bits_);
        keyed_ = true;
    }
    Bytes encrypt(const Bytes& m, std::uint64_t) const override {
        require_keyed(keyed_);
        require_plaintext_width(m);
        return xor_bytes(m, key_);
    }
    bool has_decrypt() const override { return true; }
    Bytes decrypt(const Bytes& c, std::uint64_t index) const override {
        return encrypt(c, index);
    }
    const Bytes& key() const { return key_; }

private:
    std::size_t bits_;
    Bytes key_;
    bool keyed_ = false;
};

// --------------------------------------------------------------------------
// AES-128 in ECB and CTR modes over single 128-bit messages.

class AesEcbScheme final : public CipherScheme {
public:
    std::string name() const override { return "aes_ecb"; }
    std::size_t plaintext_bits() const override { return 128; }
    std::size_t ciphertext_bits() const override { return 128; }
    bool deterministic() const override { return true; }
    void keygen(std::uint32_t kappa, std::uint64_t seed) override {
        if (kappa != 0 && kappa != 128) throw ConfigError("aes_ecb: kappa must be 128");
        aes_.emplace(random_bytes(derive_seed(seed, stream_tag::keygen), 16));
    }
    Bytes encrypt(const Bytes& m, std::uint64_t) const override {
        require_keyed(aes_.has_value());
        require_plaintext_width(m);
        return aes_->encrypt_block(m);
    }
    bool has_decrypt() const override { return true; }
    Bytes decrypt(const Bytes& c, std::uint64_t) const override {
        require_keyed(aes_.has_value());
        return aes_->decrypt_block(c);
    }

private:
    std::optional<Aes128> aes_;
};

// Keystream block = AES(IV || counter) with a fixed 64-bit IV per key; the
// counter is the sample index, or index mod p under the reset fault.
class AesCtrScheme final : public CipherScheme {
public:
    explicit AesCtrScheme(std::optional<std::uint64_t> ctr_reset_period = std::nullopt)
        : period_(ctr_reset_period) {
        if (period_ && *period_ < 1) throw UsageError("aes_ctr: period must be >= 1");
    }
    std::string name() const override { return period_ ? "aes_ctr_faulted" : "aes_ctr"; }
    std::size_t plaintext_bits() const override { return 128; }
    std::size_t ciphertext_bits() const override { return 128; }
    bool deterministic() const override { return false; }
    void keygen(std::uint32_t kappa, std::uint64_t seed) override {
        if (kappa != 0 && kappa != 128) throw ConfigError("aes_ctr: kappa must be 128");
        std::uint64_t ks = derive_seed(seed, stream_tag::keygen);
        aes_.emplace(random_bytes(ks, 16));
        iv_ = random_bytes(derive_seed(ks, 1), 8);
    }
    Bytes encrypt(const Bytes& m, std::uint64_t index) const override {
        require_keyed(aes_.has_value());
        require_plaintext_width(m);
        return xor_bytes(m, keystream(index));
    }
    bool has_decrypt() const override { return true; }
    Bytes decrypt(const Bytes& c, std::uint64_t index) const override {
        return encrypt(c, index);
    }
    Bytes keystream(std::uint64_t index) const {
        require_keyed(aes_.has_value());
        std::uint64_t counter = period_ ? index % *period_ : index;
        Bytes block(16);
        for (int i = 0; i < 8; ++i) block[i] = iv_[i];
        for (int i = 0; i < 8; ++i)
            block[8 + i] = static_cast<std::uint8_t>(counter >> (56 - 8 * i));
        return aes_->encrypt_block(block);
    }
    nlohmann::json fault_flags() const override {
        nlohmann::json j = nlohmann::json::object();
        if (period_) j["ctr_reset_period"] = *period_;
        return j;
    }

private:
    std::optional<std::uint64_t> period_;
    std::optional<Aes128> aes_;
    Bytes iv_;
};

// --------------------------------------------------------------------------
// DES: standard deterministic mode and the randomized variant that prepends
// a fresh 64-bit block under CBC chaining with a fixed IV.

class DesScheme final : public CipherScheme {
public:
    std::string name() const override { return "des"; }
    std::size_t plaintext_bits() const override { return 64; }
    std::size_t ciphertext_bits() const override { return 64; }
    bool deterministic() const override { return true; }
    void keygen(std::uint32_t, std::uint64_t seed) override {
        des_.emplace(random_bytes(derive_seed(seed, stream_tag::keygen), 8));
    }
    Bytes encrypt(const Bytes& m, std::uint64_t) const override {
        require_keyed(des_.has_value());
        require_plaintext_width(m);
        return des_->encrypt_block(m);
    }
    bool has_decrypt() const override { return true; }
    Bytes decrypt(const Bytes& c, std::uint64_t) const override {
        require_keyed(des_.has_value());
        return des_->decrypt_block(c);
    }

private:
    std::optional<Des> des_;
};

class DesRandScheme final : public CipherScheme {
public:
    std::string name() const override { return "des_rand"; }
    std::size_t plaintext_bits() const override { return 64; }
    std::size_t ciphertext_bits() const override { return 128; }
    bool deterministic() const override { return false; }
    void keygen(std::uint32_t, std::uint64_t seed) override {
        std::uint64_t ks = derive_seed(seed, stream_tag::keygen);
        des_.emplace(random_bytes(ks, 8));
        iv_ = random_bytes(derive_seed(ks, 1), 8);
        pad_seed_ = derive_seed(seed, stream_tag::des_rand_block);
        keyed_ = true;
    }
    Bytes encrypt(const Bytes& m, std::uint64_t index) const override {
        require_keyed(keyed_);
        require_plaintext_width(m);
        Bytes random_block = random_bytes(derive_seed(pad_seed_, index), 8);
        Bytes c1 = des_->encrypt_block(xor_bytes(random_block, iv_));
        Bytes c2 = des_->encrypt_block(xor_bytes(m, c1));
        Bytes out;
        out.reserve(16);
        out.insert(out.end(), c1.begin(), c1.end());
        out.insert(out.end(), c2.begin(), c2.end());
        return out;
    }
    bool has_decrypt() const override { return true; }
    Bytes decrypt(const Bytes& c, std::uint64_t) const override {
        require_keyed(keyed_);
        if (c.size() != 16) throw UsageError("des_rand: ciphertext must be 16 bytes");
        Bytes c1(c.begin(), c.begin() + 8);
        Bytes c2(c.begin() + 8, c.end());
        return xor_bytes(des_->decrypt_block(c2), c1);
    }

private:
    std::optional<Des> des_;
    Bytes iv_;
    std::uint64_t pad_seed_ = 0;
    bool keyed_ = false;
};

// --------------------------------------------------------------------------
// RSA: textbook (deterministic) and OAEP with SHA-256. The OAEP padding
// seed is fresh per sample unless the reuse fault maps index -> index mod p.

class RsaPlainScheme final : public CipherScheme {
public:
    explicit RsaPlainScheme(std::size_t modulus_bits = 1024, std::size_t message_bits = 128)
        : modulus_bits_(modulus_bits), message_bits_(message_bits) {
        if (message_bits_ == 0 || message_bits_ % 8 != 0)
            throw ConfigError("rsa_plain: message bits must be a positive multiple of 8");
        if (message_bits_ >= modulus_bits_)
            throw ConfigError("rsa_plain: message must be narrower than the modulus");
    }
    std::string name() const override { return "rsa_plain"; }
    std::size_t plaintext_bits() const override { return message_bits_; }
    std::size_t ciphertext_bits() const override { return key_ ? key_->modulus_bytes() * 8
                                                               : ((modulus_bits_ + 7) / 8) * 8; }
    bool deterministic() const override { return true; }
    void keygen(std::uint32_t kappa, std::uint64_t seed) override {
        key_ = rsa_keygen(kappa == 0 ? modulus_bits_ : kappa, seed);
        modulus_bits_ = key_->modulus_bits;
    }
    Bytes encrypt(const Bytes& m, std::uint64_t) const override {
        require_keyed(key_.has_value());
        require_plaintext_width(m);
        // Messages are little-endian packed rows; RSA integers are big-endian.
        Bytes be(m.rbegin(), m.rend());
        Bytes ct = rsa_encrypt_plain(*key_, be);
        return Bytes(ct.rbegin(), ct.rend());
    }
    bool has_decrypt() const override { return true; }
    Bytes decrypt(const Bytes& c, std::uint64_t) const override {
        require_keyed(key_.has_value());
        Bytes be(c.rbegin(), c.rend());
        Bytes pt = rsa_decrypt_plain(*key_, be, plaintext_bytes());
        return Bytes(pt.rbegin(), pt.rend());
    }
    const RsaKey& key() const {
        if (!key_) throw UsageError("rsa_plain: keygen() not called");
        return *key_;
    }

private:
    std::size_t modulus_bits_;
    std::size_t message_bits_;
    std::optional<RsaKey> key_;
};

class RsaOaepScheme final : public CipherScheme {
public:
    explicit RsaOaepScheme(std::size_t modulus_bits = 1024, std::size_t message_bits = 128,
                           std::optional<std::uint64_t> reuse_seed_period = std::nullopt)
        : modulus_bits_(modulus_bits), message_bits_(message_bits), period_(reuse_seed_period) {
        if (message_bits_ == 0 || message_bits_ % 8 != 0)
            throw ConfigError("rsa_oaep: message bits must be a positive multiple of 8");
        if (period_ && *period_ < 1) throw UsageError("rsa_oaep: period must be >= 1");
        if (modulus_bits_ / 8 < 2 * kOaepHashLen + 2 + message_bits_ / 8)
            throw ConfigError("rsa_oaep: modulus too small for OAEP payload");
    }
    std::string name() const override { return period_ ? "rsa_oaep_faulted" : "rsa_oaep"; }
    std::size_t plaintext_bits() const override { return message_bits_; }
    std::size_t ciphertext_bits() const override { return key_ ? key_->modulus_bytes() * 8
                                                               : ((modulus_bits_ + 7) / 8) * 8; }
    bool deterministic() const override { return period_ && *period_ == 1; }
    void keygen(std::uint32_t kappa, std::uint64_t seed) override {
        key_ = rsa_keygen(kappa == 0 ? modulus_bits_ : kappa, seed);
        modulus_bits_ = key_->modulus_bits;
        pad_stream_ = derive_seed(seed, stream_tag::oaep_seed);
        keyed_ = true;
    }
    Bytes encrypt(const Bytes& m, std::uint64_t index) const override {
        require_keyed(keyed_);
        require_plaintext_width(m);
        Bytes be(m.rbegin(), m.rend());
        Bytes ct = rsa_encrypt_oaep(*key_, be, pad_seed(index));
        return Bytes(ct.rbegin(), ct.rend());
    }
    bool has_decrypt() const override { return true; }
    Bytes decrypt(const Bytes& c, std::uint64_t) const override {
        require_keyed(keyed_);
        Bytes be(c.rbegin(), c.rend());
        Bytes pt = rsa_decrypt_oaep(*key_, be);
        if (pt.size() != plaintext_bytes())
            throw FormatError("rsa_oaep: decrypted length mismatch");
        return Bytes(pt.rbegin(), pt.rend());
    }
    nlohmann::json fault_flags() const override {
        nlohmann::json j = nlohmann::json::object();
        if (period_) j["reuse_oaep_seed_period"] = *period_;
        return j;
    }

private:
    Bytes pad_seed(std::uint64_t index) const {
        std::uint64_t slot = period_ ? index % *period_ : index;
        return random_bytes(derive_seed(pad_stream_, slot), kOaepHashLen);
    }
    std::size_t modulus_bits_;
    std::size_t message_bits_;
    std::optional<std::uint64_t> period_;
    std::optional<RsaKey> key_;
    std::uint64_t pad_stream_ = 0;
    bool keyed_ = false;
};

} // namespace caud
