#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>

#include "caud/cipher.hpp"
#include "caud/dataset.hpp"
#include "caud/gf256.hpp"

namespace caud {

// Hybrid Universal Network Coding Cryptosystem: n message channels of
// channel_bytes each are mixed column-wise by an invertible matrix over
// GF(2^8); the first c coded channels are then encrypted by a conventional
// inner scheme and the rest travel in clear.

struct HunccConfig {
    std::size_t n_channels = 8;
    std::size_t channel_bytes = 16;
    std::size_t encrypted_channels = 1;
    std::string inner_scheme = "aes_ctr";
    std::uint64_t matrix_seed = 0xC0DEDC0DEULL;
    std::size_t j_star = 1;  // 1-based challenged channel for individual datasets

    void validate() const {
        if (n_channels < 2) throw ConfigError("huncc: need at least 2 channels");
        if (channel_bytes < 1) throw ConfigError("huncc: channel_bytes must be >= 1");
        if (encrypted_channels > n_channels)
            throw ConfigError("huncc: encrypted_channels must be <= n_channels");
        if (j_star < 1 || j_star > n_channels)
            throw UsageError("huncc: j_star out of range");
    }

    std::size_t total_bytes() const { return n_channels * channel_bytes; }
};

struct GenMatrix {
    gf256::SquareMatrix g;
    gf256::SquareMatrix h;  // h * g = identity
};

// Seeded invertible generator matrix; rows are redrawn from the stream until
// the draw is full rank (singular draws are rare, ~0.4% at n = 8).
inline GenMatrix make_generator(std::uint64_t seed, std::size_t n) {
    if (n < 2) throw UsageError("make_generator: n must be >= 2");
    Rng rng(derive_seed(seed, stream_tag::gen_matrix));
    for (int attempt = 0; attempt < 1000; ++attempt) {
        GenMatrix gm;
        gm.g = gf256::SquareMatrix(n);
        for (auto& cell : gm.g.cells) cell = static_cast<std::uint8_t>(rng.next_u64());
        if (gf256::try_invert(gm.g, gm.h)) return gm;
    }
    throw ConfigError("make_generator: no invertible matrix after 1000 attempts");
}

// Stage 1 of the scheme: column-wise coding, X[:,j] = G * M[:,j]. The
// message is laid out with channel i occupying bytes [i*cb, (i+1)*cb).
inline Bytes huncc_code_columns(const Bytes& message, const HunccConfig& cfg,
                                const gf256::SquareMatrix& m) {
    const std::size_t n = cfg.n_channels, cb = cfg.channel_bytes;
    if (message.size() != cfg.total_bytes())
        throw UsageError("huncc: message must be " + std::to_string(cfg.total_bytes()) +
                         " bytes");
    Bytes coded(message.size());
    gf256::Vec col(n);
    for (std::size_t j = 0; j < cb; ++j) {
        for (std::size_t i = 0; i < n; ++i) col[i] = message[i * cb + j];
        gf256::Vec mixed = m.apply(col);
        for (std::size_t i = 0; i < n; ++i) coded[i * cb + j] = mixed[i];
    }
    return coded;
}

// Full encode: coding followed by inner encryption of the first c channel
// payloads. Inner sample indices are kept unique per (sample, channel).
inline Bytes huncc_encode(const Bytes& message, const HunccConfig& cfg, const GenMatrix& gm,
                          const CipherScheme& inner, std::uint64_t sample_index) {
    cfg.validate();
    Bytes coded = huncc_code_columns(message, cfg, gm.g);
    const std::size_t cb = cfg.channel_bytes;
    for (std::size_t i = 0; i < cfg.encrypted_channels; ++i) {
        Bytes channel(coded.begin() + i * cb, coded.begin() + (i + 1) * cb);
        Bytes enc = inner.encrypt(channel, sample_index * cfg.encrypted_channels + i);
        if (enc.size() != cb)
            throw ConfigError("huncc: inner scheme must preserve channel width");
        for (std::size_t b = 0; b < cb; ++b) coded[i * cb + b] = enc[b];
    }
    return coded;
}

inline Bytes huncc_decode(const Bytes& ciphertext, const HunccConfig& cfg, const GenMatrix& gm,
                          const CipherScheme& inner, std::uint64_t sample_index) {
    cfg.validate();
    if (ciphertext.size() != cfg.total_bytes())
        throw UsageError("huncc: ciphertext must be " + std::to_string(cfg.total_bytes()) +
                         " bytes");
    Bytes coded = ciphertext;
    const std::size_t cb = cfg.channel_bytes;
    for (std::size_t i = 0; i < cfg.encrypted_channels; ++i) {
        Bytes channel(coded.begin() + i * cb, coded.begin() + (i + 1) * cb);
        Bytes dec = inner.decrypt(channel, sample_index * cfg.encrypted_channels + i);
        for (std::size_t b = 0; b < cb; ++b) coded[i * cb + b] = dec[b];
    }
    return huncc_code_columns(coded, cfg, gm.h);
}

namespace detail {

inline std::unique_ptr<CipherScheme> make_inner_scheme(const std::string& name,
                                                       std::size_t channel_bits) {
    if (name == "aes_ctr") {
        if (channel_bits != 128)
            throw ConfigError("huncc: aes_ctr inner scheme needs 16-byte channels");
        return std::make_unique<AesCtrScheme>();
    }
    if (name == "otp") return std::make_unique<OtpScheme>(channel_bits);
    if (name == "identity") return std::make_unique<IdentityScheme>(channel_bits);
    throw ConfigError("huncc: unsupported inner scheme '" + name + "'");
}

} // namespace detail

class HunccScheme : public CipherScheme {
public:
    explicit HunccScheme(HunccConfig cfg = {}) : cfg_(std::move(cfg)) {
        cfg_.validate();
        inner_ = detail::make_inner_scheme(cfg_.inner_scheme, cfg_.channel_bytes * 8);
        matrix_ = make_generator(cfg_.matrix_seed, cfg_.n_channels);
    }
    std::string name() const override { return "huncc"; }
    std::size_t plaintext_bits() const override { return cfg_.total_bytes() * 8; }
    std::size_t ciphertext_bits() const override { return cfg_.total_bytes() * 8; }
    bool deterministic() const override {
        return cfg_.encrypted_channels == 0 || inner_->deterministic();
    }
    void keygen(std::uint32_t kappa, std::uint64_t seed) override {
        inner_->keygen(kappa, derive_seed(seed, stream_tag::inner_scheme));
        keyed_ = true;
    }
    Bytes encrypt(const Bytes& m, std::uint64_t index) const override {
        require_keyed(keyed_);
        return huncc_encode(m, cfg_, matrix_, *inner_, index);
    }
    bool has_decrypt() const override { return true; }
    Bytes decrypt(const Bytes& c, std::uint64_t index) const override {
        require_keyed(keyed_);
        return huncc_decode(c, cfg_, matrix_, *inner_, index);
    }
    nlohmann::json fault_flags() const override {
        return {{"code", "seeded-invertible"},
                {"n_channels", cfg_.n_channels},
                {"encrypted_channels", cfg_.encrypted_channels},
                {"inner_scheme", cfg_.inner_scheme}};
    }
    const HunccConfig& config() const { return cfg_; }
    const GenMatrix& generator() const { return matrix_; }

protected:
    HunccConfig cfg_;
    std::unique_ptr<CipherScheme> inner_;
    GenMatrix matrix_;
    bool keyed_ = false;
};

// Individual IND-CPA dataset shaping: a label-0 row zeroes only channel
// j_star and draws the other n-1 channels fresh-uniform, realizing the
// challenger that picks one individual message while the rest stay random.
class HunccIndividualScheme final : public HunccScheme {
public:
    explicit HunccIndividualScheme(HunccConfig cfg = {}) : HunccScheme(std::move(cfg)) {}
    std::string name() const override { return "huncc_individual"; }
    bool class0_all_zero() const override { return false; }
    Bytes class0_plaintext(std::uint64_t row_seed) const override {
        Bytes m = random_bytes(derive_seed(row_seed, stream_tag::class0_row),
                               cfg_.total_bytes());
        const std::size_t cb = cfg_.channel_bytes;
        const std::size_t z = cfg_.j_star - 1;
        for (std::size_t b = 0; b < cb; ++b) m[z * cb + b] = 0x00;
        return m;
    }
};

// Train/test splits for the individual game: label-1 rows draw all n
// channels uniform, label-0 rows zero channel j_star only.
inline std::pair<SampleSet, SampleSet> build_individual_dataset(HunccConfig cfg,
                                                                const DatasetSpec& spec,
                                                                std::size_t j_star) {
    cfg.j_star = j_star;
    cfg.validate();
    HunccIndividualScheme scheme(cfg);
    scheme.keygen(0, spec.seed);
    return build_sampleset(spec, scheme);
}

} // namespace caud
