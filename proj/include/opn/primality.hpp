#pragma once

// Primality testing.
//
// Three tiers, so every answer's strength is known to the caller:
//   * trial division by a sieved table (also powers prime enumeration for
//     the interval search),
//   * deterministic Miller-Rabin with the thirteen smallest prime bases,
//     valid for all n < 3'317'044'064'679'887'385'961'981,
//   * BPSW (Miller-Rabin base 2 + strong Lucas with Selfridge parameters)
//     beyond that range; no BPSW pseudoprime is known, but answers in this
//     tier are reported as probable so the certification layer can follow
//     up with an n-1 proof.

#include "opn/arith.hpp"

#include <cstdint>
#include <memory>
#include <mutex>
#include <vector>

namespace opn {

enum class PrimalityTier {
    composite,      // definitely composite
    deterministic,  // proven prime (trial division or in-range Miller-Rabin)
    probable,       // BPSW probable prime, certify separately for a proof
};

// Largest n for which Miller-Rabin with bases {2,3,...,41} is a proof.
inline const Natural& det_miller_rabin_bound() {
    static const Natural bound("3317044064679887385961981");
    return bound;
}

// Shared snapshot of all primes <= some limit.  The table grows on demand
// and is swapped atomically under a mutex; callers keep their snapshot
// alive for as long as they iterate, so concurrent growth is safe.
inline std::shared_ptr<const std::vector<std::uint32_t>> prime_table(std::uint32_t limit) {
    static std::mutex mutex;
    static std::shared_ptr<const std::vector<std::uint32_t>> current;
    static std::uint32_t current_limit = 0;

    std::lock_guard<std::mutex> lock(mutex);
    if (!current || current_limit < limit) {
        std::uint32_t new_limit = limit < 100000 ? 100000 : limit;
        std::vector<bool> composite(static_cast<std::size_t>(new_limit) + 1, false);
        auto primes = std::make_shared<std::vector<std::uint32_t>>();
        for (std::uint64_t i = 2; i <= new_limit; ++i) {
            if (composite[i]) continue;
            primes->push_back(static_cast<std::uint32_t>(i));
            for (std::uint64_t j = i * i; j <= new_limit; j += i) composite[j] = true;
        }
        current = std::move(primes);
        current_limit = new_limit;
    }
    return current;
}

namespace detail {

// One Miller-Rabin round: true when `base` witnesses n composite.
// Requires n odd, n > 3, 1 < base < n - 1.
inline bool mr_witness(const Natural& n, const Natural& base) {
    Natural d = n - 1;
    unsigned long s = mpz_scan1(d.get_mpz_t(), 0);
    mpz_fdiv_q_2exp(d.get_mpz_t(), d.get_mpz_t(), s);

    Natural x;
    mpz_powm(x.get_mpz_t(), base.get_mpz_t(), d.get_mpz_t(), n.get_mpz_t());
    if (x == 1 || x == n - 1) return false;
    for (unsigned long r = 1; r < s; ++r) {
        x = (x * x) % n;
        if (x == n - 1) return false;
    }
    return true;
}

// Strong Lucas probable-prime test with Selfridge's parameters.
// Requires n odd, n > 3, n not a perfect square.
inline bool strong_lucas_probable_prime(const Natural& n) {
    // Selfridge: first D in 5, -7, 9, -11, ... with Jacobi(D, n) = -1.
    long d_abs = 5;
    int sign = 1;
    Natural D;
    for (;;) {
        D = sign > 0 ? Natural(d_abs) : Natural(-d_abs);
        int j = mpz_jacobi(D.get_mpz_t(), n.get_mpz_t());
        if (j == -1) break;
        if (j == 0 && n != d_abs) return false;  // shares a factor with D
        d_abs += 2;
        sign = -sign;
        if (d_abs > 1000000) throw std::logic_error("strong_lucas: no D found (square?)");
    }
    // P = 1, Q = (1 - D)/4; all arithmetic mod n.
    const Natural Q = (1 - D) / 4;

    Natural delta = n + 1;
    unsigned long s = mpz_scan1(delta.get_mpz_t(), 0);
    Natural t = delta;
    mpz_fdiv_q_2exp(t.get_mpz_t(), t.get_mpz_t(), s);  // delta = t * 2^s, t odd

    auto mod_n = [&](Natural v) {
        Natural r;
        mpz_mod(r.get_mpz_t(), v.get_mpz_t(), n.get_mpz_t());
        return r;
    };
    auto half_mod = [&](Natural v) {  // v/2 mod n for v of either parity
        v = mod_n(std::move(v));
        if (mpz_odd_p(v.get_mpz_t())) v += n;
        mpz_fdiv_q_2exp(v.get_mpz_t(), v.get_mpz_t(), 1);
        return v;
    };

    // Binary ladder for U_t, V_t, Q^t (mod n), most significant bit first.
    Natural U = 1, V = 1, Qk = mod_n(Q);  // k = 1
    const std::size_t bits = mpz_sizeinbase(t.get_mpz_t(), 2);
    for (std::size_t i = bits - 1; i-- > 0;) {
        // double: k -> 2k
        U = mod_n(U * V);
        V = mod_n(V * V - 2 * Qk);
        Qk = mod_n(Qk * Qk);
        if (mpz_tstbit(t.get_mpz_t(), static_cast<mp_bitcnt_t>(i))) {
            // increment: k -> k+1 (P = 1)
            Natural U1 = half_mod(U + V);
            Natural V1 = half_mod(D * U + V);
            U = std::move(U1);
            V = std::move(V1);
            Qk = mod_n(Qk * Q);
        }
    }

    if (U == 0 || V == 0) return true;  // U_t = 0 or V_t = 0
    for (unsigned long r = 1; r < s; ++r) {
        V = mod_n(V * V - 2 * Qk);
        if (V == 0) return true;  // V_{t * 2^r} = 0
        Qk = mod_n(Qk * Qk);
    }
    return false;
}

}  // namespace detail

// Full tiered classification; see is_prime for the boolean view.
inline PrimalityTier classify_prime(const Natural& n) {
    if (n < 2) return PrimalityTier::composite;
    auto table = prime_table(100000);
    // Trial division by the first few dozen primes settles small inputs and
    // cheaply rejects most composites.
    for (std::size_t i = 0; i < 54; ++i) {
        const std::uint32_t p = (*table)[i];
        if (n == p) return PrimalityTier::deterministic;
        if (Natural(n % p) == 0) return PrimalityTier::composite;
        if (n < static_cast<unsigned long>(p) * p) return PrimalityTier::deterministic;
    }
    static const unsigned kBases[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41};
    if (n < det_miller_rabin_bound()) {
        for (unsigned b : kBases) {
            if (detail::mr_witness(n, Natural(b))) return PrimalityTier::composite;
        }
        return PrimalityTier::deterministic;
    }
    // BPSW beyond the deterministic range.
    if (detail::mr_witness(n, Natural(2))) return PrimalityTier::composite;
    if (mpz_perfect_square_p(n.get_mpz_t())) return PrimalityTier::composite;
    return detail::strong_lucas_probable_prime(n) ? PrimalityTier::probable
                                                  : PrimalityTier::composite;
}

inline bool is_prime(const Natural& n) {
    return classify_prime(n) != PrimalityTier::composite;
}

}  // namespace opn
