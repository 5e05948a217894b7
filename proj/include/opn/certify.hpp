#pragma once

// Primality certification for claimed primes beyond the deterministic
// Miller-Rabin range.
//
// The search layer trusts BPSW while exploring; before a transcript is
// final, every distinct claimed prime above the deterministic bound gets an
// n-1 certification attempt here (Pocklington witnesses over a factored
// part F of n-1, with the classical quadratic refinement once F^3 exceeds
// n/2).  Primes that resist certification within effort bounds are reported
// as probable, never silently accepted.

#include "opn/arith.hpp"
#include "opn/factor.hpp"
#include "opn/primality.hpp"

#include <cstdint>

namespace opn {

enum class CertOutcome {
    proven,    // composite-free by construction: a complete primality proof
    probable,  // BPSW-positive but the n-1 machinery ran out of effort
    composite, // definitely composite (a witness or factor was found)
};

namespace detail {

// True when d >= 0 is a perfect square (exact).
inline bool is_square(const Natural& d) {
    return d >= 0 && mpz_perfect_square_p(d.get_mpz_t()) != 0;
}

}  // namespace detail

// Attempts a primality proof for n.  Recursion certifies the prime factors
// of n-1 that make up the factored part F; depth is bounded because every
// recursive target divides n-1.
inline CertOutcome certify_prime(const Natural& n, const HintsDB& hints,
                                 const EffortPolicy& policy, unsigned depth = 0) {
    switch (classify_prime(n)) {
        case PrimalityTier::composite: return CertOutcome::composite;
        case PrimalityTier::deterministic: return CertOutcome::proven;
        case PrimalityTier::probable: break;
    }
    if (depth > 16) return CertOutcome::probable;

    // Boost the factoring effort: certification happens once per distinct
    // prime at the end of a run, so it may work harder than the search.
    EffortPolicy boosted = policy;
    boosted.rho_iteration_cap = std::max(boosted.rho_iteration_cap, 1u << 22);
    boosted.rho_restart_count = std::max(boosted.rho_restart_count, 8u);

    const Natural m = n - 1;
    PartialFactorization pf = factor_easy(m, hints, boosted);

    // F = product of fully certified prime powers of n-1; R = the rest.
    Natural F = 1;
    std::vector<Natural> certified;
    for (const auto& [p, k] : pf.prime_factors) {
        if (certify_prime(p, hints, policy, depth + 1) == CertOutcome::proven) {
            F *= pow_natural(p, k);
            certified.push_back(p);
        }
    }
    const Natural R = m / F;

    // Strength check: F^2 >= n proves outright; n < 2F^3 proves with the
    // quadratic refinement; anything weaker is not a proof.
    const bool sqrt_regime = F * F >= n;
    const bool cube_regime = sqrt_regime || 2 * F * F * F > n;
    if (!cube_regime) return CertOutcome::probable;

    // Pocklington witnesses: for every certified prime q | F find a with
    // a^(n-1) = 1 (mod n) and gcd(a^((n-1)/q) - 1, n) = 1.  Then every
    // prime factor of n is congruent to 1 mod F.
    static const unsigned kWitnessPool[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29,
                                            31, 37, 41, 43, 47, 53, 59, 61, 67, 71};
    for (const Natural& q : certified) {
        const Natural cofactor_exp = m / q;
        bool witnessed = false;
        for (unsigned a : kWitnessPool) {
            Natural base(a);
            Natural full;
            mpz_powm(full.get_mpz_t(), base.get_mpz_t(), m.get_mpz_t(), n.get_mpz_t());
            if (full != 1) return CertOutcome::composite;  // Fermat fails
            Natural part;
            mpz_powm(part.get_mpz_t(), base.get_mpz_t(), cofactor_exp.get_mpz_t(),
                     n.get_mpz_t());
            Natural g;
            Natural shifted = part == 0 ? Natural(n - 1) : Natural(part - 1);
            mpz_gcd(g.get_mpz_t(), shifted.get_mpz_t(), n.get_mpz_t());
            if (g == 1) {
                witnessed = true;
                break;
            }
            if (g != n) return CertOutcome::composite;  // found a factor of n
        }
        if (!witnessed) return CertOutcome::probable;
    }

    if (sqrt_regime) return CertOutcome::proven;

    // Cube regime: all prime factors of n are 1 mod F and n < 2F^3, so a
    // composite n must be (aF+1)(bF+1) with ab < 2F.  Writing R = abF + (a+b),
    // the sum s = a+b is R mod F or that plus F; n is composite exactly when
    // one of those sums makes s^2 - 4ab a perfect square.
    const Natural c1 = R % F;
    for (int bump = 0; bump <= 1; ++bump) {
        const Natural s = c1 + bump * F;
        if (s < 2 || s > R) continue;
        const Natural top = R - s;
        if (!mpz_divisible_p(top.get_mpz_t(), F.get_mpz_t())) continue;
        const Natural ab = top / F;
        if (ab < 1) continue;
        if (detail::is_square(s * s - 4 * ab)) return CertOutcome::composite;
    }
    return CertOutcome::proven;
}

}  // namespace opn
