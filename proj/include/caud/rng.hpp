#pragma once

#include <cstdint>
#include <cstddef>
#include <vector>

namespace caud {

// Counter-based generator built on the SplitMix64 finalizer (Steele, Lea,
// Flood 2014). The i-th output of a stream is a pure function of (seed, i),
// so any row/sample can be regenerated out of order and every language
// binding that follows the same constants reproduces identical streams.

inline constexpr std::uint64_t kSplitMix64Gamma = 0x9E3779B97F4A7C15ULL;

inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// i-th element of the stream keyed by `seed`.
inline std::uint64_t stream_at(std::uint64_t seed, std::uint64_t i) {
    return mix64(seed + (i + 1) * kSplitMix64Gamma);
}

// Derives an independent sub-seed. Stream tags are spaced apart from data
// indices by convention: tags occupy the high range below.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
    return mix64(stream_at(seed, tag) ^ 0xA5A5A5A5A5A5A5A5ULL);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) {
    return derive_seed(derive_seed(seed, tag), index);
}

// Stream tags used across the toolkit. Values are part of the reproducibility
// contract: changing them changes every generated dataset and training run.
namespace stream_tag {
inline constexpr std::uint64_t train_plaintext = 0x01;
inline constexpr std::uint64_t test_plaintext = 0x02;
inline constexpr std::uint64_t keygen = 0x03;
inline constexpr std::uint64_t weight_init = 0x04;
inline constexpr std::uint64_t epoch_shuffle = 0x05;
inline constexpr std::uint64_t marginal_perm = 0x06;
inline constexpr std::uint64_t eval_marginal = 0x07;
inline constexpr std::uint64_t otp_pad = 0x08;
inline constexpr std::uint64_t des_rand_block = 0x09;
inline constexpr std::uint64_t oaep_seed = 0x0A;
inline constexpr std::uint64_t gen_matrix = 0x0B;
inline constexpr std::uint64_t inner_scheme = 0x0C;
inline constexpr std::uint64_t class0_row = 0x0D;
} // namespace stream_tag

class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t next_u64() { return stream_at(seed_, counter_++); }

    // Uniform in [0, 1), 53 bits of precision.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform in [0, bound). Rejection-free modulo is fine here: bound is
    // always tiny relative to 2^64, bias < bound/2^64.
    std::uint64_t next_below(std::uint64_t bound) { return next_u64() % bound; }

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

// Fisher-Yates. Identity permutation for n <= 1.
inline std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng) {
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    for (std::size_t i = n; i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng.next_below(i));
        std::swap(perm[i - 1], perm[j]);
    }
    return perm;
}

} // namespace caud
