#pragma once

#include <cstdint>
#include <cstddef>
#include <string>
#include <vector>

#include "caud/errors.hpp"
#include "caud/matrix.hpp"
#include "caud/rng.hpp"

namespace caud {

using Bytes = std::vector<std::uint8_t>;

inline std::size_t bytes_for_bits(std::size_t bits) { return (bits + 7) / 8; }

// Mask for the final byte of a packed row; zero for byte-aligned widths.
inline std::uint8_t tail_mask(std::size_t bits) {
    std::size_t rem = bits % 8;
    return rem == 0 ? 0xFF : static_cast<std::uint8_t>((1u << rem) - 1);
}

inline Bytes xor_bytes(const Bytes& a, const Bytes& b) {
    if (a.size() != b.size()) throw UsageError("xor_bytes: length mismatch");
    Bytes out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] ^ b[i];
    return out;
}

// Fills `n` bytes from the counter stream keyed by `seed`.
inline Bytes random_bytes(std::uint64_t seed, std::size_t n) {
    Bytes out(n);
    Rng rng(seed);
    for (std::size_t i = 0; i < n; i += 8) {
        std::uint64_t w = rng.next_u64();
        for (std::size_t j = 0; j < 8 && i + j < n; ++j)
            out[i + j] = static_cast<std::uint8_t>(w >> (8 * j));
    }
    return out;
}

// Fixed-width rows of packed bits, little-endian within each byte: bit j of
// a row lives in byte j/8 at position j%8.
class BitMatrix {
public:
    BitMatrix() = default;
    BitMatrix(std::size_t rows, std::size_t bits)
        : rows_(rows), bits_(bits), stride_(bytes_for_bits(bits)), data_(rows * stride_, 0) {}

    std::size_t rows() const { return rows_; }
    std::size_t bits() const { return bits_; }
    std::size_t row_bytes() const { return stride_; }

    std::uint8_t* row(std::size_t i) { return data_.data() + i * stride_; }
    const std::uint8_t* row(std::size_t i) const { return data_.data() + i * stride_; }

    bool get(std::size_t i, std::size_t j) const {
        return (row(i)[j >> 3] >> (j & 7)) & 1u;
    }
    void set(std::size_t i, std::size_t j, bool v) {
        std::uint8_t& b = row(i)[j >> 3];
        std::uint8_t m = static_cast<std::uint8_t>(1u << (j & 7));
        b = v ? (b | m) : (b & static_cast<std::uint8_t>(~m));
    }

    Bytes row_bytes_copy(std::size_t i) const {
        return Bytes(row(i), row(i) + stride_);
    }
    void set_row(std::size_t i, const Bytes& bytes) {
        if (bytes.size() != stride_) throw UsageError("BitMatrix::set_row: width mismatch");
        std::uint8_t* dst = row(i);
        for (std::size_t b = 0; b < stride_; ++b) dst[b] = bytes[b];
        if (stride_ > 0) dst[stride_ - 1] &= tail_mask(bits_);
    }

    bool row_is_zero(std::size_t i) const {
        const std::uint8_t* r = row(i);
        for (std::size_t b = 0; b < stride_; ++b)
            if (r[b] != 0) return false;
        return true;
    }

    bool rows_equal(std::size_t i, const BitMatrix& other, std::size_t j) const {
        if (bits_ != other.bits_) return false;
        const std::uint8_t* a = row(i);
        const std::uint8_t* b = other.row(j);
        for (std::size_t k = 0; k < stride_; ++k)
            if (a[k] != b[k]) return false;
        return true;
    }

    const std::vector<std::uint8_t>& storage() const { return data_; }
    std::vector<std::uint8_t>& storage() { return data_; }

    // Expands rows [lo, hi) into {0.0, 1.0} reals starting at column
    // `col_offset` of `out`.
    void unpack_rows(std::size_t lo, std::size_t hi, Matrix& out, std::size_t col_offset) const {
        for (std::size_t i = lo; i < hi; ++i) {
            double* dst = out.row(i - lo) + col_offset;
            const std::uint8_t* src = row(i);
            for (std::size_t j = 0; j < bits_; ++j)
                dst[j] = (src[j >> 3] >> (j & 7)) & 1u ? 1.0 : 0.0;
        }
    }

    // Same, but the source row for output row r is rows[lo + r] remapped
    // through an index list (used for shuffled batches and marginal pairing).
    void unpack_indexed(const std::vector<std::size_t>& indices, std::size_t lo, std::size_t hi,
                        Matrix& out, std::size_t col_offset) const {
        for (std::size_t i = lo; i < hi; ++i) {
            double* dst = out.row(i - lo) + col_offset;
            const std::uint8_t* src = row(indices[i]);
            for (std::size_t j = 0; j < bits_; ++j)
                dst[j] = (src[j >> 3] >> (j & 7)) & 1u ? 1.0 : 0.0;
        }
    }

private:
    std::size_t rows_ = 0;
    std::size_t bits_ = 0;
    std::size_t stride_ = 0;
    std::vector<std::uint8_t> data_;
};

// Uniform random row content for row `row_index` of the stream keyed by
// `seed`. Independent of generation order.
inline Bytes row_random_bits(std::uint64_t seed, std::uint64_t row_index, std::size_t bits) {
    Bytes out = random_bytes(derive_seed(seed, 0x100, row_index), bytes_for_bits(bits));
    if (!out.empty()) out.back() &= tail_mask(bits);
    return out;
}

inline std::string to_hex(const Bytes& b) {
    static const char* digits = "0123456789abcdef";
    std::string s;
    s.reserve(b.size() * 2);
    for (std::uint8_t v : b) {
        s.push_back(digits[v >> 4]);
        s.push_back(digits[v & 0xF]);
    }
    return s;
}

inline Bytes from_hex(const std::string& s) {
    if (s.size() % 2 != 0) throw UsageError("from_hex: odd length");
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        throw UsageError("from_hex: bad digit");
    };
    Bytes out(s.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = static_cast<std::uint8_t>(nibble(s[2 * i]) << 4 | nibble(s[2 * i + 1]));
    return out;
}

} // namespace caud
