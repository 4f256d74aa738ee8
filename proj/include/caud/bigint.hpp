#pragma once

#include <algorithm>
#include <cstdint>
#include <cstddef>
#include <string>
#include <vector>

#include "caud/bits.hpp"
#include "caud/errors.hpp"
#include "caud/rng.hpp"

namespace caud {

// Arbitrary-precision unsigned integer on 32-bit digits (little-endian digit
// order), sized for RSA moduli up to a few thousand bits. Just the
// operations the toolkit needs: schoolbook multiply, Knuth division,
// modular exponentiation and inverse.
class BigUint {
public:
    BigUint() = default;

    explicit BigUint(std::uint64_t v) {
        if (v != 0) digits_.push_back(static_cast<std::uint32_t>(v));
        if (v >> 32) digits_.push_back(static_cast<std::uint32_t>(v >> 32));
    }

    static BigUint from_bytes_be(const Bytes& bytes) {
        BigUint out;
        for (std::uint8_t b : bytes) {
            out = out.shifted_left(8);
            if (b != 0 || !out.digits_.empty()) {
                if (out.digits_.empty()) out.digits_.push_back(0);
                out.digits_[0] |= b;
            }
        }
        out.trim();
        return out;
    }

    Bytes to_bytes_be(std::size_t width) const {
        Bytes out(width, 0);
        for (std::size_t i = 0; i < width; ++i) {
            std::size_t digit = i / 4;
            if (digit >= digits_.size()) break;
            out[width - 1 - i] = static_cast<std::uint8_t>(digits_[digit] >> (8 * (i % 4)));
        }
        // A value wider than the requested buffer is a caller bug.
        if (bit_length() > width * 8)
            throw UsageError("BigUint::to_bytes_be: value does not fit width");
        return out;
    }

    bool is_zero() const { return digits_.empty(); }
    bool is_odd() const { return !digits_.empty() && (digits_[0] & 1u); }

    std::size_t bit_length() const {
        if (digits_.empty()) return 0;
        std::uint32_t top = digits_.back();
        std::size_t bits = (digits_.size() - 1) * 32;
        while (top) {
            ++bits;
            top >>= 1;
        }
        return bits;
    }

    bool bit(std::size_t i) const {
        std::size_t d = i / 32;
        if (d >= digits_.size()) return false;
        return (digits_[d] >> (i % 32)) & 1u;
    }

    void set_bit(std::size_t i) {
        std::size_t d = i / 32;
        if (d >= digits_.size()) digits_.resize(d + 1, 0);
        digits_[d] |= 1u << (i % 32);
    }

    std::uint64_t low_u64() const {
        std::uint64_t v = digits_.empty() ? 0 : digits_[0];
        if (digits_.size() > 1) v |= static_cast<std::uint64_t>(digits_[1]) << 32;
        return v;
    }

    static int compare(const BigUint& a, const BigUint& b) {
        if (a.digits_.size() != b.digits_.size())
            return a.digits_.size() < b.digits_.size() ? -1 : 1;
        for (std::size_t i = a.digits_.size(); i-- > 0;) {
            if (a.digits_[i] != b.digits_[i]) return a.digits_[i] < b.digits_[i] ? -1 : 1;
        }
        return 0;
    }

    friend bool operator==(const BigUint& a, const BigUint& b) { return compare(a, b) == 0; }
    friend bool operator!=(const BigUint& a, const BigUint& b) { return compare(a, b) != 0; }
    friend bool operator<(const BigUint& a, const BigUint& b) { return compare(a, b) < 0; }
    friend bool operator<=(const BigUint& a, const BigUint& b) { return compare(a, b) <= 0; }
    friend bool operator>(const BigUint& a, const BigUint& b) { return compare(a, b) > 0; }
    friend bool operator>=(const BigUint& a, const BigUint& b) { return compare(a, b) >= 0; }

    friend BigUint operator+(const BigUint& a, const BigUint& b) {
        BigUint out;
        out.digits_.resize(std::max(a.digits_.size(), b.digits_.size()) + 1, 0);
        std::uint64_t carry = 0;
        for (std::size_t i = 0; i < out.digits_.size(); ++i) {
            std::uint64_t sum = carry;
            if (i < a.digits_.size()) sum += a.digits_[i];
            if (i < b.digits_.size()) sum += b.digits_[i];
            out.digits_[i] = static_cast<std::uint32_t>(sum);
            carry = sum >> 32;
        }
        out.trim();
        return out;
    }

    // Requires a >= b.
    friend BigUint operator-(const BigUint& a, const BigUint& b) {
        if (a < b) throw UsageError("BigUint: subtraction underflow");
        BigUint out;
        out.digits_.resize(a.digits_.size(), 0);
        std::int64_t borrow = 0;
        for (std::size_t i = 0; i < a.digits_.size(); ++i) {
            std::int64_t diff = static_cast<std::int64_t>(a.digits_[i]) - borrow -
                                (i < b.digits_.size() ? b.digits_[i] : 0);
            borrow = diff < 0 ? 1 : 0;
            if (diff < 0) diff += 1LL << 32;
            out.digits_[i] = static_cast<std::uint32_t>(diff);
        }
        out.trim();
        return out;
    }

    friend BigUint operator*(const BigUint& a, const BigUint& b) {
        if (a.is_zero() || b.is_zero()) return BigUint();
        BigUint out;
        out.digits_.assign(a.digits_.size() + b.digits_.size(), 0);
        for (std::size_t i = 0; i < a.digits_.size(); ++i) {
            std::uint64_t carry = 0;
            std::uint64_t av = a.digits_[i];
            for (std::size_t j = 0; j < b.digits_.size(); ++j) {
                std::uint64_t cur = out.digits_[i + j] + av * b.digits_[j] + carry;
                out.digits_[i + j] = static_cast<std::uint32_t>(cur);
                carry = cur >> 32;
            }
            out.digits_[i + b.digits_.size()] = static_cast<std::uint32_t>(carry);
        }
        out.trim();
        return out;
    }

    BigUint shifted_left(std::size_t bits) const {
        if (is_zero() || bits == 0) {
            BigUint out = *this;
            return out;
        }
        std::size_t digit_shift = bits / 32;
        std::size_t bit_shift = bits % 32;
        BigUint out;
        out.digits_.assign(digits_.size() + digit_shift + 1, 0);
        for (std::size_t i = 0; i < digits_.size(); ++i) {
            std::uint64_t v = static_cast<std::uint64_t>(digits_[i]) << bit_shift;
            out.digits_[i + digit_shift] |= static_cast<std::uint32_t>(v);
            out.digits_[i + digit_shift + 1] |= static_cast<std::uint32_t>(v >> 32);
        }
        out.trim();
        return out;
    }

    BigUint shifted_right(std::size_t bits) const {
        std::size_t digit_shift = bits / 32;
        std::size_t bit_shift = bits % 32;
        if (digit_shift >= digits_.size()) return BigUint();
        BigUint out;
        out.digits_.assign(digits_.size() - digit_shift, 0);
        for (std::size_t i = 0; i < out.digits_.size(); ++i) {
            std::uint64_t v = digits_[i + digit_shift] >> bit_shift;
            if (bit_shift && i + digit_shift + 1 < digits_.size())
                v |= static_cast<std::uint64_t>(digits_[i + digit_shift + 1])
                     << (32 - bit_shift);
            out.digits_[i] = static_cast<std::uint32_t>(v);
        }
        out.trim();
        return out;
    }

    // Knuth's Algorithm D on 32-bit digits.
    static void divmod(const BigUint& num, const BigUint& den, BigUint& quot, BigUint& rem) {
        if (den.is_zero()) throw UsageError("BigUint: division by zero");
        if (num < den) {
            quot = BigUint();
            rem = num;
            return;
        }
        if (den.digits_.size() == 1) {
            std::uint64_t d = den.digits_[0];
            quot.digits_.assign(num.digits_.size(), 0);
            std::uint64_t r = 0;
            for (std::size_t i = num.digits_.size(); i-- > 0;) {
                std::uint64_t cur = (r << 32) | num.digits_[i];
                quot.digits_[i] = static_cast<std::uint32_t>(cur / d);
                r = cur % d;
            }
            quot.trim();
            rem = BigUint(r);
            return;
        }

        // Normalize so the divisor's top digit has its high bit set.
        int shift = 0;
        for (std::uint32_t top = den.digits_.back(); !(top & 0x80000000u); top <<= 1) ++shift;
        BigUint u = num.shifted_left(shift);
        BigUint v = den.shifted_left(shift);
        const std::size_t n = v.digits_.size();
        const std::size_t m = u.digits_.size() - n;
        u.digits_.resize(u.digits_.size() + 1, 0);

        quot.digits_.assign(m + 1, 0);
        const std::uint64_t vtop = v.digits_[n - 1];
        const std::uint64_t vnext = v.digits_[n - 2];
        for (std::size_t j = m + 1; j-- > 0;) {
            std::uint64_t numerator =
                (static_cast<std::uint64_t>(u.digits_[j + n]) << 32) | u.digits_[j + n - 1];
            std::uint64_t qhat = numerator / vtop;
            std::uint64_t rhat = numerator % vtop;
            while (qhat >= (1ULL << 32) ||
                   qhat * vnext > ((rhat << 32) | u.digits_[j + n - 2])) {
                --qhat;
                rhat += vtop;
                if (rhat >= (1ULL << 32)) break;
            }
            // Multiply-subtract, with an add-back pass if qhat was one high.
            std::int64_t borrow = 0;
            std::uint64_t carry = 0;
            for (std::size_t i = 0; i < n; ++i) {
                std::uint64_t product = qhat * v.digits_[i] + carry;
                carry = product >> 32;
                std::int64_t diff = static_cast<std::int64_t>(u.digits_[i + j]) -
                                    static_cast<std::int64_t>(product & 0xFFFFFFFFu) - borrow;
                borrow = diff < 0 ? 1 : 0;
                if (diff < 0) diff += 1LL << 32;
                u.digits_[i + j] = static_cast<std::uint32_t>(diff);
            }
            std::int64_t final_diff = static_cast<std::int64_t>(u.digits_[j + n]) -
                                      static_cast<std::int64_t>(carry) - borrow;
            if (final_diff < 0) {
                --qhat;
                std::uint64_t add_carry = 0;
                for (std::size_t i = 0; i < n; ++i) {
                    std::uint64_t sum =
                        static_cast<std::uint64_t>(u.digits_[i + j]) + v.digits_[i] + add_carry;
                    u.digits_[i + j] = static_cast<std::uint32_t>(sum);
                    add_carry = sum >> 32;
                }
                final_diff += static_cast<std::int64_t>(add_carry);
            }
            u.digits_[j + n] = static_cast<std::uint32_t>(final_diff);
            quot.digits_[j] = static_cast<std::uint32_t>(qhat);
        }
        quot.trim();
        u.digits_.resize(n);
        u.trim();
        rem = u.shifted_right(shift);
    }

    friend BigUint operator%(const BigUint& a, const BigUint& m) {
        BigUint q, r;
        divmod(a, m, q, r);
        return r;
    }

    friend BigUint operator/(const BigUint& a, const BigUint& b) {
        BigUint q, r;
        divmod(a, b, q, r);
        return q;
    }

    static BigUint mod_mul(const BigUint& a, const BigUint& b, const BigUint& m) {
        return (a * b) % m;
    }

    static BigUint mod_pow(const BigUint& base, const BigUint& exp, const BigUint& m) {
        if (m.is_zero()) throw UsageError("BigUint::mod_pow: zero modulus");
        BigUint result(1);
        BigUint b = base % m;
        for (std::size_t i = exp.bit_length(); i-- > 0;) {
            result = mod_mul(result, result, m);
            if (exp.bit(i)) result = mod_mul(result, b, m);
        }
        return result;
    }

    static BigUint gcd(BigUint a, BigUint b) {
        while (!b.is_zero()) {
            BigUint r = a % b;
            a = b;
            b = r;
        }
        return a;
    }

    // Inverse of a modulo m (coprime inputs). Signs tracked separately since
    // the representation is unsigned.
    static BigUint mod_inverse(const BigUint& a, const BigUint& m) {
        BigUint r0 = m, r1 = a % m;
        BigUint t0, t1(1);
        bool t0_neg = false, t1_neg = false;
        while (!r1.is_zero()) {
            BigUint q, r2;
            divmod(r0, r1, q, r2);
            BigUint qt = q * t1;
            BigUint t2;
            bool t2_neg;
            if (t0_neg == t1_neg) {
                if (t0 >= qt) {
                    t2 = t0 - qt;
                    t2_neg = t0_neg;
                } else {
                    t2 = qt - t0;
                    t2_neg = !t0_neg;
                }
            } else {
                t2 = t0 + qt;
                t2_neg = t0_neg;
            }
            r0 = r1;
            r1 = r2;
            t0 = t1;
            t0_neg = t1_neg;
            t1 = t2;
            t1_neg = t2_neg;
        }
        if (r0 != BigUint(1)) throw UsageError("BigUint::mod_inverse: inputs not coprime");
        if (t0_neg) return m - (t0 % m);
        BigUint r = t0 % m;
        return r;
    }

    static BigUint random_bits(std::size_t bits, Rng& rng) {
        BigUint out;
        out.digits_.assign((bits + 31) / 32, 0);
        for (std::size_t i = 0; i < out.digits_.size(); ++i)
            out.digits_[i] = static_cast<std::uint32_t>(rng.next_u64());
        std::size_t top_bits = bits % 32;
        if (top_bits) out.digits_.back() &= (1u << top_bits) - 1;
        out.trim();
        return out;
    }

private:
    void trim() {
        while (!digits_.empty() && digits_.back() == 0) digits_.pop_back();
    }

    std::vector<std::uint32_t> digits_;
};

// Miller-Rabin with a fixed base 2 pass plus seeded random bases; error
// probability is at most 4^-rounds for composites.
inline bool is_probable_prime(const BigUint& n, Rng& rng, int rounds = 40) {
    static const std::uint32_t small_primes[] = {
        2,   3,   5,   7,   11,  13,  17,  19,  23,  29,  31,  37,  41,  43,
        47,  53,  59,  61,  67,  71,  73,  79,  83,  89,  97,  101, 103, 107,
        109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173, 179, 181,
        191, 193, 197, 199, 211, 223, 227, 229, 233, 239, 241, 251};
    if (n < BigUint(2)) return false;
    for (std::uint32_t p : small_primes) {
        BigUint bp(p);
        if (n == bp) return true;
        if ((n % bp).is_zero()) return false;
    }
    BigUint n_minus_1 = n - BigUint(1);
    std::size_t s = 0;
    BigUint d = n_minus_1;
    while (!d.is_odd()) {
        d = d.shifted_right(1);
        ++s;
    }
    auto witness = [&](const BigUint& a) {
        BigUint x = BigUint::mod_pow(a, d, n);
        if (x == BigUint(1) || x == n_minus_1) return false;
        for (std::size_t i = 1; i < s; ++i) {
            x = BigUint::mod_mul(x, x, n);
            if (x == n_minus_1) return false;
        }
        return true;  // composite witness found
    };
    if (witness(BigUint(2))) return false;
    const std::size_t bits = n.bit_length();
    for (int r = 0; r < rounds; ++r) {
        BigUint a = BigUint::random_bits(bits - 1, rng);
        if (a < BigUint(2)) a = BigUint(2);
        if (witness(a)) return false;
    }
    return true;
}

// Deterministic seeded prime of exactly `bits` bits with gcd(p-1, e) = 1.
inline BigUint generate_prime(std::size_t bits, std::uint64_t e, Rng& rng,
                              std::size_t max_attempts = 100000) {
    if (bits < 8) throw ConfigError("generate_prime: need at least 8 bits");
    for (std::size_t attempt = 0; attempt < max_attempts; ++attempt) {
        BigUint candidate = BigUint::random_bits(bits, rng);
        candidate.set_bit(bits - 1);
        candidate.set_bit(bits - 2);  // keeps p*q at full width
        if (!candidate.is_odd()) candidate = candidate + BigUint(1);
        if (!is_probable_prime(candidate, rng)) continue;
        if (BigUint::gcd(candidate - BigUint(1), BigUint(e)) != BigUint(1)) continue;
        return candidate;
    }
    throw ConfigError("generate_prime: search exhausted");
}

} // namespace caud
