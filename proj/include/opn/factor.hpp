#pragma once

// Bounded-effort factorization of sigma values.
//
// "Easy" factoring is pinned down as: hints-database lookup (recursive on
// cofactors), trial division up to a configurable bound, then Brent-variant
// Pollard rho within an iteration cap and restart count.  Anything that
// survives becomes a residual composite — never an error.  The whole
// pipeline is a pure function of (n, hints, policy): rho derives its start
// points from the policy seed and the target, so runs are reproducible.

#include "opn/arith.hpp"
#include "opn/primality.hpp"

#include <algorithm>
#include <cstdint>
#include <deque>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace opn {

struct EffortPolicy {
    std::uint32_t trial_division_bound = 100000;
    std::uint32_t rho_iteration_cap = 1u << 20;
    std::uint32_t rho_restart_count = 4;
    std::uint64_t seed = 1;  // folded into rho start points; part of run config
};

// Known factors for numbers too hard for the easy pipeline.  Immutable
// during a run and shared read-only across branches.
struct HintsDB {
    std::map<Natural, std::vector<Natural>> entries;

    bool empty() const { return entries.empty(); }
    const std::vector<Natural>* find(const Natural& n) const {
        auto it = entries.find(n);
        return it == entries.end() ? nullptr : &it->second;
    }
};

// Hints file: one entry per line, "<n>: <f1> <f2> ...", decimal integers,
// '#' starts a comment, duplicate keys merge their factor lists.  Every
// factor must be a proper divisor of its key (1 < f < n); violations are
// reported with the source name and line number.
inline HintsDB load_hints(std::istream& in, const std::string& source_name = "<hints>") {
    HintsDB db;
    std::string line;
    std::size_t line_no = 0;
    auto fail = [&](const std::string& what) -> void {
        throw std::runtime_error(source_name + ":" + std::to_string(line_no) + ": " + what);
    };
    auto parse_natural = [&](const std::string& token) {
        if (token.empty() || token.find_first_not_of("0123456789") != std::string::npos)
            fail("not a decimal integer: '" + token + "'");
        return Natural(token, 10);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream fields(line);
        std::string head;
        if (!(fields >> head)) continue;  // blank or comment-only line
        if (head.back() != ':') fail("expected '<n>:' at start of entry");
        head.pop_back();
        Natural key = parse_natural(head);
        if (key < 2) fail("key must be at least 2");
        std::vector<Natural>& factors = db.entries[key];  // duplicate keys merge
        std::string token;
        std::size_t added = 0;
        while (fields >> token) {
            Natural f = parse_natural(token);
            if (f <= 1 || f >= key) fail("factor " + f.get_str() + " is not a proper divisor");
            if (!mpz_divisible_p(key.get_mpz_t(), f.get_mpz_t()))
                fail("factor " + f.get_str() + " does not divide " + key.get_str());
            factors.push_back(std::move(f));
            ++added;
        }
        if (added == 0) fail("entry lists no factors");
    }
    return db;
}

inline HintsDB load_hints(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open hints file: " + path);
    return load_hints(in, path);
}

struct PartialFactorization {
    Natural input;
    std::vector<std::pair<Natural, unsigned>> prime_factors;  // ascending
    std::optional<Natural> residual;  // composite cofactor the effort could not split

    bool complete() const { return !residual.has_value(); }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministic 64-bit fingerprint of n for seeding purposes.
inline std::uint64_t fingerprint(const Natural& n) {
    // n mod (2^61 - 1), then mixed; collisions only perturb rho start points.
    return splitmix64(mpz_fdiv_ui(n.get_mpz_t(), 2305843009213693951UL));
}

// Brent's cycle-finding variant of Pollard rho with batched gcds.
// Returns a nontrivial factor of n, or 0 if the iteration cap runs out.
// n must be odd, composite, and not a prime power for a guaranteed chance;
// callers screen first.  Fully deterministic in (n, seed).
inline Natural rho_brent(const Natural& n, std::uint64_t seed, std::uint32_t iteration_cap) {
    if (n <= 3) return 0;
    if (mpz_even_p(n.get_mpz_t())) return 2;
    const std::uint64_t s1 = splitmix64(seed ^ fingerprint(n));
    const std::uint64_t s2 = splitmix64(s1);
    Natural y = 2 + Natural(static_cast<unsigned long>(s1)) % (n - 3);  // in [2, n-2]
    const Natural c = 1 + Natural(static_cast<unsigned long>(s2)) % (n - 3);  // in [1, n-3]

    auto advance = [&](Natural& v) { v = (v * v + c) % n; };

    Natural x, ys, q = 1, g = 1;
    std::uint64_t used = 0;
    unsigned long r = 1;
    constexpr unsigned long kBatch = 128;
    while (g == 1) {
        x = y;
        for (unsigned long i = 0; i < r; ++i) advance(y);
        used += r;
        unsigned long k = 0;
        while (k < r && g == 1) {
            ys = y;
            const unsigned long lim = std::min(kBatch, r - k);
            for (unsigned long i = 0; i < lim; ++i) {
                advance(y);
                q = (q * (x > y ? x - y : y - x)) % n;
            }
            mpz_gcd(g.get_mpz_t(), q.get_mpz_t(), n.get_mpz_t());
            k += lim;
            used += lim;
        }
        r *= 2;
        if (used > iteration_cap && g == 1) return 0;
    }
    if (g == n) {
        // The batch overshot a factor; retrace one step at a time.
        g = 1;
        while (g == 1) {
            advance(ys);
            Natural d = x > ys ? x - ys : ys - x;
            if (d == 0) return 0;  // the whole cycle collapsed, restart needed
            mpz_gcd(g.get_mpz_t(), d.get_mpz_t(), n.get_mpz_t());
        }
    }
    if (g == n) return 0;
    return g;
}

}  // namespace detail

// Factors n as far as hint lookups, trial division, and capped Pollard rho
// allow.  Pieces that resist all three are coprime-refined against each
// other and against the found primes, then merged into a single residual so
// that prime_factors and residual multiply back to n exactly.
inline PartialFactorization factor_easy(const Natural& n, const HintsDB& hints,
                                        const EffortPolicy& policy) {
    if (n < 1) throw std::invalid_argument("factor_easy: n must be >= 1");
    PartialFactorization out;
    out.input = n;
    if (n == 1) return out;

    std::map<Natural, unsigned> found;                    // prime -> multiplicity
    std::vector<std::pair<Natural, unsigned>> stuck;      // rho-resistant composites
    std::deque<std::pair<Natural, unsigned>> work;        // (value, multiplicity)
    work.emplace_back(n, 1u);

    auto table = prime_table(policy.trial_division_bound);

    while (!work.empty()) {
        auto [v, mult] = work.front();
        work.pop_front();
        if (v == 1) continue;

        // 1. Hints: split off every hinted factor to full multiplicity, then
        //    requeue factor and cofactor (cofactors get their own lookup).
        if (const auto* hinted = hints.find(v)) {
            Natural rem = v;
            for (const Natural& f : *hinted) {
                unsigned k = 0;
                while (mpz_divisible_p(rem.get_mpz_t(), f.get_mpz_t())) {
                    mpz_divexact(rem.get_mpz_t(), rem.get_mpz_t(), f.get_mpz_t());
                    ++k;
                }
                if (k) work.emplace_back(f, mult * k);
            }
            if (rem > 1) work.emplace_back(rem, mult);
            continue;
        }

        // 2. Trial division.  Once p^2 > v the remaining v is prime.
        bool settled = false;
        for (std::uint32_t p : *table) {
            if (p > policy.trial_division_bound) break;
            const std::uint64_t p2 = static_cast<std::uint64_t>(p) * p;
            if (mpz_cmp_ui(v.get_mpz_t(), p2) < 0) {
                found[v] += mult;
                settled = true;
                break;
            }
            if (mpz_divisible_ui_p(v.get_mpz_t(), p)) {
                unsigned k = 0;
                do {
                    mpz_divexact_ui(v.get_mpz_t(), v.get_mpz_t(), p);
                    ++k;
                } while (mpz_divisible_ui_p(v.get_mpz_t(), p));
                found[Natural(p)] += mult * k;
                if (v == 1) {
                    settled = true;
                    break;
                }
            }
        }
        if (settled || v == 1) continue;

        // 3. Primality and perfect powers before spending rho effort.
        if (is_prime(v)) {
            found[v] += mult;
            continue;
        }
        if (auto power = is_perfect_power(v)) {
            work.emplace_back(power->first, mult * power->second);
            continue;
        }

        // 4. Pollard rho restarts, deterministically seeded.
        Natural d;
        bool split = false;
        for (std::uint32_t attempt = 0; attempt < policy.rho_restart_count; ++attempt) {
            d = detail::rho_brent(v, detail::splitmix64(policy.seed) + attempt,
                                  policy.rho_iteration_cap);
            if (d != 0) {
                work.emplace_back(d, mult);
                work.emplace_back(Natural(v / d), mult);
                split = true;
                break;
            }
        }
        if (!split) stuck.emplace_back(std::move(v), mult);
    }

    // Coprime refinement of the rho-resistant pieces: shared content with a
    // found prime moves into prime_factors; shared content between pieces is
    // split out and re-screened (primality, perfect powers) until stable.
    bool changed = !stuck.empty();
    while (changed) {
        changed = false;
        for (auto& [v, mult] : stuck) {
            if (v == 1) continue;
            for (auto& [p, cnt] : found) {
                unsigned k = 0;
                while (mpz_divisible_p(v.get_mpz_t(), p.get_mpz_t())) {
                    mpz_divexact(v.get_mpz_t(), v.get_mpz_t(), p.get_mpz_t());
                    ++k;
                }
                if (k) {
                    cnt += k * mult;
                    changed = true;
                }
            }
        }
        for (auto& [v, mult] : stuck) {
            if (v == 1) continue;
            if (is_prime(v)) {
                found[v] += mult;
                v = 1;
                changed = true;
            } else if (auto power = is_perfect_power(v)) {
                if (is_prime(power->first)) {
                    found[power->first] += mult * power->second;
                    v = 1;
                } else {
                    v = power->first;
                    mult *= power->second;
                }
                changed = true;
            }
        }
        for (std::size_t i = 0; i < stuck.size(); ++i) {
            if (stuck[i].first == 1) continue;
            for (std::size_t j = i + 1; j < stuck.size(); ++j) {
                if (stuck[j].first == 1) continue;
                Natural g;
                mpz_gcd(g.get_mpz_t(), stuck[i].first.get_mpz_t(), stuck[j].first.get_mpz_t());
                if (g > 1) {
                    Natural a = stuck[i].first / g;
                    Natural b = stuck[j].first / g;
                    stuck.emplace_back(g, stuck[i].second + stuck[j].second);
                    stuck[i] = {std::move(a), stuck[i].second};
                    stuck[j] = {std::move(b), stuck[j].second};
                    changed = true;
                }
            }
        }
    }

    Natural residual = 1;
    for (const auto& [v, mult] : stuck) {
        if (v > 1) residual *= pow_natural(v, mult);
    }
    if (residual > 1) out.residual = residual;

    out.prime_factors.assign(found.begin(), found.end());
    return out;
}

// Coprimality refinement used by the branch engine: splits the given
// residuals against each other and against the known primes, returning raw
// pieces whose product equals the product of the inputs.  Pieces may be
// prime, prime powers, or equal to known primes after splitting — the
// caller re-screens each piece and dispatches multiplicities.
inline std::vector<Natural> split_by_gcd(const std::vector<Natural>& residuals,
                                         const std::vector<Natural>& known_primes) {
    std::vector<Natural> pieces;
    pieces.reserve(residuals.size());
    for (const Natural& r : residuals) {
        Natural v = r;
        for (const Natural& p : known_primes) {
            while (v > 1 && mpz_divisible_p(v.get_mpz_t(), p.get_mpz_t())) {
                mpz_divexact(v.get_mpz_t(), v.get_mpz_t(), p.get_mpz_t());
                pieces.push_back(p);
            }
        }
        if (v > 1) pieces.push_back(std::move(v));
    }
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t i = 0; i < pieces.size() && !changed; ++i) {
            for (std::size_t j = i + 1; j < pieces.size() && !changed; ++j) {
                Natural g;
                mpz_gcd(g.get_mpz_t(), pieces[i].get_mpz_t(), pieces[j].get_mpz_t());
                if (g > 1 && (g != pieces[i] || g != pieces[j])) {
                    Natural a = pieces[i] / g;
                    Natural b = pieces[j] / g;
                    pieces[i] = g;
                    pieces[j] = g;
                    if (a > 1) pieces.push_back(std::move(a));
                    if (b > 1) pieces.push_back(std::move(b));
                    changed = true;
                } else if (g > 1 && g == pieces[i] && g == pieces[j]) {
                    // identical pieces stay identical; nothing to split
                }
            }
        }
    }
    return pieces;
}

}  // namespace opn
