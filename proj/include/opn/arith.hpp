#pragma once

// Exact integer and rational arithmetic for the odd-perfect-number engine.
//
// Everything downstream (branching, interval bounds, transcript rendering)
// must be bit-for-bit reproducible, so all arithmetic here is exact: GMP
// integers for naturals, GMP rationals kept eagerly canonicalized.  No
// floating point is used anywhere in the engine.

#include <gmpxx.h>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

namespace opn {

using Natural = mpz_class;   // arbitrary-precision non-negative integer
using Rational = mpq_class;  // arbitrary-precision exact rational

// Builds num/den in lowest terms.  mpq_class does not canonicalize on
// construction, so every rational the engine creates goes through here.
inline Rational make_rational(const Natural& num, const Natural& den) {
    if (den == 0) throw std::invalid_argument("make_rational: zero denominator");
    Rational r(num, den);
    r.canonicalize();
    return r;
}

inline Rational make_rational(long num, long den) {
    return make_rational(Natural(num), Natural(den));
}

// base^exp for a natural base and machine-word exponent.
inline Natural pow_natural(const Natural& base, unsigned long exp) {
    Natural r;
    mpz_pow_ui(r.get_mpz_t(), base.get_mpz_t(), exp);
    return r;
}

// Exact count of decimal digits of n (n >= 0; 0 has one digit).
inline std::size_t decimal_digits(const Natural& n) {
    if (n == 0) return 1;
    // mpz_sizeinbase may overestimate by one; compare against 10^(k-1).
    std::size_t k = mpz_sizeinbase(n.get_mpz_t(), 10);
    if (k > 1 && n < pow_natural(10, static_cast<unsigned long>(k - 1))) --k;
    return k;
}

// sigma(p^a) = 1 + p + p^2 + ... + p^a = (p^(a+1) - 1)/(p - 1).
// p must be >= 2; a = 0 gives 1.  Works for any base, but callers only pass
// primes (the closed form needs nothing more than p >= 2).
inline Natural sigma_prime_power(const Natural& p, unsigned exponent) {
    if (p < 2) throw std::invalid_argument("sigma_prime_power: base must be >= 2");
    Natural num = pow_natural(p, exponent + 1UL) - 1;
    Natural r;
    mpz_divexact(r.get_mpz_t(), num.get_mpz_t(), Natural(p - 1).get_mpz_t());
    return r;
}

// Abundancy contribution sigma(p^a)/p^a of the component p^a, in lowest
// terms.  sigma(p^a) is congruent to 1 mod p, so the fraction is already
// reduced; canonicalization is kept anyway for uniformity.
inline Rational abundancy_prime_power(const Natural& p, unsigned exponent) {
    return make_rational(sigma_prime_power(p, exponent), pow_natural(p, exponent));
}

// Largest k with n = b^k for some natural b, returned as (b, k) with k >= 2;
// std::nullopt when n is not a proper power.  n must be >= 2.
//
// Only prime k need testing: if n = b^(jk) then n is a perfect k-th power.
// Each time an exact prime root is found the base is reduced and the scan
// restarts, so the returned exponent is maximal (the base itself is not a
// proper power).
inline std::optional<std::pair<Natural, unsigned>> is_perfect_power(const Natural& n) {
    if (n < 2) return std::nullopt;
    static constexpr unsigned kSmallPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29,
                                                31, 37, 41, 43, 47, 53, 59, 61, 67, 71};
    Natural base = n;
    unsigned exponent = 1;
    bool reduced = true;
    while (reduced) {
        reduced = false;
        const std::size_t bits = mpz_sizeinbase(base.get_mpz_t(), 2);
        for (unsigned k : kSmallPrimes) {
            if (k > bits) break;  // base < 2^k cannot be a k-th power of b >= 2
            Natural root;
            if (mpz_root(root.get_mpz_t(), base.get_mpz_t(), k) != 0) {
                base = root;
                exponent *= k;
                reduced = true;
                break;
            }
        }
        if (!reduced && bits > 72) {
            // Exponents beyond the table would need base >= 2^73; a residual
            // that large being a perfect >71st power of a composite does not
            // occur at the sizes this engine handles, but stay exact anyway.
            for (unsigned long k = 73; k <= bits; ++k) {
                Natural root;
                if (mpz_root(root.get_mpz_t(), base.get_mpz_t(), k) != 0) {
                    base = root;
                    exponent *= static_cast<unsigned>(k);
                    reduced = true;
                    break;
                }
            }
        }
    }
    if (exponent < 2) return std::nullopt;
    return std::make_pair(base, exponent);
}

// Decimal expansion of a non-negative rational truncated toward zero to
// exactly `digits` fractional digits, trailing zeros preserved
// ("2.327298560" style).
inline std::string truncate_decimal(const Rational& value, unsigned digits) {
    if (value < 0) throw std::invalid_argument("truncate_decimal: negative value");
    const Natural scale = pow_natural(10, digits);
    Natural scaled;  // floor(value * 10^digits)
    mpz_fdiv_q(scaled.get_mpz_t(), Natural(value.get_num() * scale).get_mpz_t(),
               value.get_den().get_mpz_t());
    Natural whole = scaled / scale;
    Natural frac = scaled % scale;
    std::string f = frac.get_str();
    f.insert(0, digits - f.size(), '0');
    return whole.get_str() + "." + f;
}

// Rendering for interval endpoints: exact integers print bare, anything else
// prints truncated to four fractional digits with trailing zeros removed
// ("8.1924", "3.5962", "11.47").
inline std::string render_bound(const Rational& value) {
    if (value.get_den() == 1) return value.get_num().get_str();
    std::string s = truncate_decimal(value, 4);
    while (!s.empty() && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
}

}  // namespace opn
