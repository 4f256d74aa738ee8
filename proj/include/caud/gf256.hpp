#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "caud/errors.hpp"
#include "caud/rng.hpp"

namespace caud::gf256 {

// GF(2^8) arithmetic with the AES reduction polynomial x^8+x^4+x^3+x+1
// (0x11B). Addition is XOR; multiplication is carry-less with reduction.

inline constexpr std::uint16_t kModulus = 0x11B;

inline constexpr std::uint8_t add(std::uint8_t a, std::uint8_t b) {
    return a ^ b;
}

inline constexpr std::uint8_t mul(std::uint8_t a, std::uint8_t b) {
    std::uint16_t acc = 0;
    std::uint16_t aa = a;
    for (int bit = 0; bit < 8; ++bit) {
        if (b & (1u << bit)) acc ^= static_cast<std::uint16_t>(aa << bit);
    }
    for (int bit = 15; bit >= 8; --bit) {
        if (acc & (1u << bit)) acc ^= static_cast<std::uint16_t>(kModulus << (bit - 8));
    }
    return static_cast<std::uint8_t>(acc);
}

// a^(2^8 - 2); the zero element has no inverse.
inline std::uint8_t inv(std::uint8_t a) {
    if (a == 0) throw UsageError("gf256::inv: zero has no inverse");
    std::uint8_t result = 1;
    std::uint8_t base = a;
    int e = 254;
    while (e > 0) {
        if (e & 1) result = mul(result, base);
        base = mul(base, base);
        e >>= 1;
    }
    return result;
}

using Vec = std::vector<std::uint8_t>;

// Square matrix over GF(2^8), row-major.
struct SquareMatrix {
    std::size_t n = 0;
    Vec cells;

    SquareMatrix() = default;
    explicit SquareMatrix(std::size_t dim) : n(dim), cells(dim * dim, 0) {}

    std::uint8_t& at(std::size_t r, std::size_t c) { return cells[r * n + c]; }
    std::uint8_t at(std::size_t r, std::size_t c) const { return cells[r * n + c]; }

    static SquareMatrix identity(std::size_t dim) {
        SquareMatrix m(dim);
        for (std::size_t i = 0; i < dim; ++i) m.at(i, i) = 1;
        return m;
    }

    Vec apply(const Vec& v) const {
        if (v.size() != n) throw UsageError("SquareMatrix::apply: dimension mismatch");
        Vec out(n, 0);
        for (std::size_t r = 0; r < n; ++r) {
            std::uint8_t acc = 0;
            for (std::size_t c = 0; c < n; ++c) acc = add(acc, mul(at(r, c), v[c]));
            out[r] = acc;
        }
        return out;
    }

    SquareMatrix multiply(const SquareMatrix& other) const {
        if (other.n != n) throw UsageError("SquareMatrix::multiply: dimension mismatch");
        SquareMatrix out(n);
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < n; ++c) {
                std::uint8_t acc = 0;
                for (std::size_t k = 0; k < n; ++k)
                    acc = add(acc, mul(at(r, k), other.at(k, c)));
                out.at(r, c) = acc;
            }
        return out;
    }
};

// Gauss-Jordan inverse; returns false when the matrix is singular.
inline bool try_invert(const SquareMatrix& m, SquareMatrix& out) {
    const std::size_t n = m.n;
    SquareMatrix a = m;
    out = SquareMatrix::identity(n);
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        while (pivot < n && a.at(pivot, col) == 0) ++pivot;
        if (pivot == n) return false;
        if (pivot != col) {
            for (std::size_t c = 0; c < n; ++c) {
                std::swap(a.at(pivot, c), a.at(col, c));
                std::swap(out.at(pivot, c), out.at(col, c));
            }
        }
        std::uint8_t piv_inv = inv(a.at(col, col));
        for (std::size_t c = 0; c < n; ++c) {
            a.at(col, c) = mul(a.at(col, c), piv_inv);
            out.at(col, c) = mul(out.at(col, c), piv_inv);
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col || a.at(r, col) == 0) continue;
            std::uint8_t factor = a.at(r, col);
            for (std::size_t c = 0; c < n; ++c) {
                a.at(r, c) = add(a.at(r, c), mul(factor, a.at(col, c)));
                out.at(r, c) = add(out.at(r, c), mul(factor, out.at(col, c)));
            }
        }
    }
    return true;
}

} // namespace caud::gf256
