#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <utility>

#include "caud/bits.hpp"
#include "caud/cipher.hpp"
#include "caud/errors.hpp"
#include "caud/rng.hpp"
#include "caud/sha256.hpp"

namespace caud {

enum class Split : std::uint8_t { train = 0, test = 1 };

// Labeled plaintext/ciphertext sample matrix for one split. Label 0 rows
// originate from the scheme's class-0 plaintext (all-zero under the standard
// protocol), label 1 rows from fresh uniform plaintexts.
struct SampleSet {
    std::string scheme_name;
    std::size_t plaintext_bits = 0;
    std::size_t ciphertext_bits = 0;
    BitMatrix plaintexts;
    BitMatrix ciphertexts;
    std::vector<std::uint8_t> labels;
    Split split = Split::train;
    std::uint64_t seed = 0;

    std::size_t rows() const { return labels.size(); }

    void validate(bool class0_must_be_zero = true) const {
        if (plaintexts.rows() != rows() || ciphertexts.rows() != rows())
            throw FormatError("SampleSet: inconsistent row counts");
        if (plaintexts.bits() != plaintext_bits || ciphertexts.bits() != ciphertext_bits)
            throw FormatError("SampleSet: width metadata mismatch");
        std::size_t ones = 0;
        for (std::size_t i = 0; i < rows(); ++i) {
            if (labels[i] > 1) throw FormatError("SampleSet: label outside {0,1}");
            ones += labels[i];
            if (class0_must_be_zero && labels[i] == 0 && !plaintexts.row_is_zero(i))
                throw FormatError("SampleSet: label-0 row has nonzero plaintext at row " +
                                  std::to_string(i));
        }
        if (2 * ones != rows())
            throw FormatError("SampleSet: classes not balanced");
    }
};

struct DatasetSpec {
    std::size_t n_train = 100000;
    std::size_t n_test = 20000;
    std::size_t plaintext_bits = 0;  // 0: take the scheme's width
    std::uint64_t seed = 1;

    void validate() const {
        if (n_train < 2 || n_train % 2 != 0)
            throw UsageError("DatasetSpec: n_train must be even and >= 2");
        if (n_test < 2 || n_test % 2 != 0)
            throw UsageError("DatasetSpec: n_test must be even and >= 2");
    }
};

enum class PlaintextKind { uniform, zero };

// Deterministic plaintext block: row r is a pure function of (rng_seed, r),
// so generation is order-independent and parallelizable.
inline BitMatrix gen_plaintexts(PlaintextKind kind, std::size_t count, std::size_t bits,
                                std::uint64_t rng_seed) {
    if (count < 1) throw UsageError("gen_plaintexts: count must be >= 1");
    if (bits < 1) throw UsageError("gen_plaintexts: bits must be >= 1");
    BitMatrix m(count, bits);
    if (kind == PlaintextKind::zero) return m;
    for (std::size_t r = 0; r < count; ++r) m.set_row(r, row_random_bits(rng_seed, r, bits));
    return m;
}

namespace detail {

inline SampleSet build_split(const DatasetSpec& spec, const CipherScheme& scheme, Split split,
                             std::size_t count, std::size_t index_offset,
                             std::uint64_t pt_seed) {
    SampleSet set;
    set.scheme_name = scheme.name();
    set.plaintext_bits = scheme.plaintext_bits();
    set.ciphertext_bits = scheme.ciphertext_bits();
    set.split = split;
    set.seed = spec.seed;
    set.plaintexts = BitMatrix(count, set.plaintext_bits);
    set.ciphertexts = BitMatrix(count, set.ciphertext_bits);
    set.labels.assign(count, 0);

    // Classes interleave: even row = class 0, odd row = class 1, so stateful
    // fault modes (counter reset, padding reuse) hit both classes
    // symmetrically. Encryption runs in ascending global index order.
    for (std::size_t r = 0; r < count; ++r) {
        const std::uint64_t global_index = index_offset + r;
        const bool uniform = (r % 2) == 1;
        set.labels[r] = uniform ? 1 : 0;
        Bytes pt;
        if (uniform) {
            pt = row_random_bits(pt_seed, r, set.plaintext_bits);
        } else {
            pt = scheme.class0_plaintext(derive_seed(pt_seed, stream_tag::class0_row, r));
            if (!pt.empty()) pt.back() &= tail_mask(set.plaintext_bits);
        }
        set.plaintexts.set_row(r, pt);
        Bytes ct;
        try {
            ct = scheme.encrypt(pt, global_index);
        } catch (const std::exception& e) {
            throw NumericError("encryption failed at sample " + std::to_string(global_index) +
                               ": " + e.what());
        }
        set.ciphertexts.set_row(r, ct);
    }
    set.validate(scheme.class0_all_zero());
    return set;
}

} // namespace detail

// Builds train and test splits with one shared key (the scheme must already
// be keyed). Test rows continue the global sample-index sequence after the
// training rows and draw plaintexts from a disjoint derived seed stream.
inline std::pair<SampleSet, SampleSet> build_sampleset(const DatasetSpec& spec,
                                                       const CipherScheme& scheme) {
    spec.validate();
    if (spec.plaintext_bits != 0 && spec.plaintext_bits != scheme.plaintext_bits())
        throw UsageError("build_sampleset: spec width disagrees with scheme width");
    SampleSet train = detail::build_split(
        spec, scheme, Split::train, spec.n_train, 0,
        derive_seed(spec.seed, stream_tag::train_plaintext));
    SampleSet test = detail::build_split(
        spec, scheme, Split::test, spec.n_test, spec.n_train,
        derive_seed(spec.seed, stream_tag::test_plaintext));
    return {std::move(train), std::move(test)};
}

// --------------------------------------------------------------------------
// Sample-set file: magic "CADS", version u32, scheme name (u32 length +
// UTF-8), plaintext_bits u32, ciphertext_bits u32, row count u64, split u8,
// seed u64; then plaintext rows, ciphertext rows (packed bits, little-endian
// within bytes), labels one byte each. All integers little-endian.

inline constexpr std::uint32_t kSampleSetVersion = 1;

namespace detail {

inline void put_u32le(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>(v >> (8 * i)));
}

inline void put_u64le(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>(v >> (8 * i)));
}

struct ByteReader {
    const std::uint8_t* p;
    std::size_t remaining;

    void need(std::size_t n) const {
        if (remaining < n) throw FormatError("sample-set file: truncated");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
        p += 4;
        remaining -= 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
        p += 8;
        remaining -= 8;
        return v;
    }
    std::uint8_t u8() {
        need(1);
        std::uint8_t v = *p;
        ++p;
        --remaining;
        return v;
    }
    void bytes(std::uint8_t* dst, std::size_t n) {
        need(n);
        std::memcpy(dst, p, n);
        p += n;
        remaining -= n;
    }
};

} // namespace detail

inline std::string serialize_sampleset(const SampleSet& set) {
    std::string out;
    out.reserve(64 + set.plaintexts.storage().size() + set.ciphertexts.storage().size() +
                set.labels.size());
    out.append("CADS", 4);
    detail::put_u32le(out, kSampleSetVersion);
    detail::put_u32le(out, static_cast<std::uint32_t>(set.scheme_name.size()));
    out.append(set.scheme_name);
    detail::put_u32le(out, static_cast<std::uint32_t>(set.plaintext_bits));
    detail::put_u32le(out, static_cast<std::uint32_t>(set.ciphertext_bits));
    detail::put_u64le(out, set.rows());
    out.push_back(static_cast<char>(set.split));
    detail::put_u64le(out, set.seed);
    out.append(reinterpret_cast<const char*>(set.plaintexts.storage().data()),
               set.plaintexts.storage().size());
    out.append(reinterpret_cast<const char*>(set.ciphertexts.storage().data()),
               set.ciphertexts.storage().size());
    out.append(reinterpret_cast<const char*>(set.labels.data()), set.labels.size());
    return out;
}

inline SampleSet deserialize_sampleset(const std::uint8_t* data, std::size_t size) {
    detail::ByteReader r{data, size};
    char magic[4];
    r.bytes(reinterpret_cast<std::uint8_t*>(magic), 4);
    if (std::memcmp(magic, "CADS", 4) != 0)
        throw FormatError("sample-set file: bad magic");
    std::uint32_t version = r.u32();
    if (version != kSampleSetVersion)
        throw FormatError("sample-set file: unsupported version " + std::to_string(version));
    SampleSet set;
    std::uint32_t name_len = r.u32();
    r.need(name_len);
    set.scheme_name.assign(reinterpret_cast<const char*>(r.p), name_len);
    r.p += name_len;
    r.remaining -= name_len;
    set.plaintext_bits = r.u32();
    set.ciphertext_bits = r.u32();
    std::uint64_t rows = r.u64();
    std::uint8_t split = r.u8();
    if (split > 1) throw FormatError("sample-set file: bad split tag");
    set.split = static_cast<Split>(split);
    set.seed = r.u64();
    set.plaintexts = BitMatrix(rows, set.plaintext_bits);
    set.ciphertexts = BitMatrix(rows, set.ciphertext_bits);
    r.bytes(set.plaintexts.storage().data(), set.plaintexts.storage().size());
    r.bytes(set.ciphertexts.storage().data(), set.ciphertexts.storage().size());
    set.labels.resize(rows);
    r.bytes(set.labels.data(), set.labels.size());
    if (r.remaining != 0) throw FormatError("sample-set file: trailing bytes");
    return set;
}

inline void save_sampleset(const SampleSet& set, const std::string& path) {
    std::string blob = serialize_sampleset(set);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw FormatError("save_sampleset: cannot open " + path);
    os.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    if (!os) throw FormatError("save_sampleset: write failed for " + path);
}

inline SampleSet load_sampleset(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("load_sampleset: cannot open " + path);
    std::string blob((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    SampleSet set = deserialize_sampleset(
        reinterpret_cast<const std::uint8_t*>(blob.data()), blob.size());
    // Structural checks only; the zero-plaintext class rule depends on the
    // generating scheme and is enforced at build time.
    set.validate(/*class0_must_be_zero=*/false);
    return set;
}

// SHA-256 over the serialized form; identifies a dataset in every report.
inline std::string dataset_fingerprint(const SampleSet& set) {
    std::string blob = serialize_sampleset(set);
    Sha256 h;
    h.update(reinterpret_cast<const std::uint8_t*>(blob.data()), blob.size());
    return to_hex(h.finish());
}

} // namespace caud
