#pragma once

// Branch state for the exhaustive refutation search.
//
// A BranchState is a conjunction of hypotheses about a hypothetical odd
// perfect number N of the Euler form N = p^alpha * prod q_j^(2 beta_j) with
// p = alpha = 1 (mod 4):
//
//   * assigned:   p^a || N exactly (the special slot is the odd exponent),
//   * required:   p | N with at least the recorded multiplicity, exponent
//                 not yet fixed,
//   * residuals:  composite c | N, c coprime to every tracked prime and to
//                 the other residuals,
//   * forbidden:  p^0 || N, i.e. p does not divide N in this sub-branch,
//
// together with the exponent budget: Omega(N) <= B is assumed, so the
// total of assigned exponents can never exceed B.  Because sigma is
// multiplicative and sigma(N) = 2N, the sigma value of every assigned
// component divides 2N; absorbing its factorization tightens the hypotheses
// until one of five contradictions fires — or the state must branch again.

#include "opn/arith.hpp"
#include "opn/factor.hpp"
#include "opn/primality.hpp"

#include <algorithm>
#include <cassert>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <vector>

namespace opn {

struct AssignedComponent {
    Natural prime;
    unsigned exponent;  // hypothesis: prime^exponent || N
    unsigned absorbed;  // multiplicity of `prime` accumulated from sigma factorizations
    bool special;       // holds the single odd (= 1 mod 4) exponent slot
};

struct ResidualDivisor {
    Natural value;           // composite divisor of N
    Natural origin_prime;    // sigma(origin_prime^origin_exponent) produced it
    unsigned origin_exponent;
};

struct Contradiction {
    enum class Kind {
        excess_prime,        // a prime's multiplicity exceeds its assigned exponent
        excess_prime_count,  // more new primes required than the budget admits
        exponent_bounds,     // required primes cannot all receive legal exponents
        abundancy_excess,    // abundancy lower bound exceeds 2
        omega_bound,         // the distinct-prime-count threshold is unreachable
    };
    Kind kind = Kind::excess_prime;
    Natural prime;   // excess_prime: the prime whose multiplicity overflowed
    Rational bound;  // abundancy_excess: the exact offending lower bound
};

struct CohenSorliInterval {
    Rational lower;
    Rational upper;
    bool used_r_ge_3_form = false;  // the tighter bound for r >= 3 was the minimum
};

// Raised when an interval search cannot be enumerated because its upper
// bound reaches the smallness threshold; carries the factoring wish-list
// that would unblock the branch.
struct StuckBranch {
    struct Wish {
        Natural origin_prime;
        unsigned origin_exponent;
        Natural value;  // the unfactored composite itself
    };
    std::vector<Wish> wishes;
    Rational upper;
};

struct BranchState {
    unsigned total_budget = 0;                 // B = K - 2
    std::vector<AssignedComponent> assigned;   // in assignment (path) order
    std::map<Natural, unsigned> required;      // prime -> accumulated minimum multiplicity
    std::vector<ResidualDivisor> residuals;
    std::set<Natural> forbidden;

    bool special_taken() const {
        return std::any_of(assigned.begin(), assigned.end(),
                           [](const AssignedComponent& c) { return c.special; });
    }
    unsigned used_budget() const {
        unsigned sum = 0;
        for (const auto& c : assigned) sum += c.exponent;
        return sum;
    }
    unsigned budget() const { return total_budget - used_budget(); }

    AssignedComponent* find_assigned(const Natural& p) {
        for (auto& c : assigned)
            if (c.prime == p) return &c;
        return nullptr;
    }
    const AssignedComponent* find_assigned(const Natural& p) const {
        return const_cast<BranchState*>(this)->find_assigned(p);
    }
    bool knows(const Natural& p) const {
        return find_assigned(p) != nullptr || required.count(p) != 0 ||
               forbidden.count(p) != 0;
    }
    // All primes with a role, ascending — the reference set residuals must
    // stay coprime to.
    std::vector<Natural> known_primes() const {
        std::set<Natural> all = forbidden;
        for (const auto& c : assigned) all.insert(c.prime);
        for (const auto& [p, m] : required) all.insert(p);
        return {all.begin(), all.end()};
    }
};

// ---- budget combinatorics ---------------------------------------------------

// How many distinct new primes the remaining budget can still accommodate:
// every new prime costs an even exponent >= 2, except that a free special
// slot lets exactly one new prime enter with exponent 1.
inline unsigned max_new_distinct_primes(const BranchState& st) {
    const unsigned b = st.budget();
    if (!st.special_taken() && b >= 1) return 1 + (b - 1) / 2;
    return b / 2;
}

// ---- absorption -------------------------------------------------------------

namespace detail {

// Worklist-driven absorption.  Items are either a prime with a multiplicity
// to credit, or a composite divisor to place; processing is strictly FIFO so
// the outcome (including which contradiction fires first) is deterministic.
struct AbsorbItem {
    bool is_residual = false;
    Natural value;
    unsigned multiplicity = 0;  // prime items only
    Natural origin_prime;       // residual items only
    unsigned origin_exponent = 0;
};

class Absorber {
  public:
    explicit Absorber(BranchState& st) : st_(st) {}

    void push_prime(Natural p, unsigned k) {
        queue_.push_back({false, std::move(p), k, Natural(), 0});
    }
    void push_residual(Natural v, Natural origin_p, unsigned origin_e) {
        queue_.push_back({true, std::move(v), 0, std::move(origin_p), origin_e});
    }

    std::optional<Contradiction> run() {
        while (!queue_.empty()) {
            AbsorbItem item = std::move(queue_.front());
            queue_.pop_front();
            auto fired = item.is_residual
                             ? place_residual(std::move(item))
                             : credit_prime(item.value, item.multiplicity);
            if (fired) return fired;
        }
        return std::nullopt;
    }

  private:
    std::optional<Contradiction> credit_prime(const Natural& p, unsigned k) {
        if (st_.forbidden.count(p))
            return Contradiction{Contradiction::Kind::excess_prime, p, {}};
        if (AssignedComponent* comp = st_.find_assigned(p)) {
            comp->absorbed += k;
            if (comp->absorbed > comp->exponent)
                return Contradiction{Contradiction::Kind::excess_prime, p, {}};
            return std::nullopt;
        }
        auto [it, fresh] = st_.required.emplace(p, 0);
        it->second += k;
        if (!fresh) return std::nullopt;

        // A newly known prime may hide inside existing residuals: pull it
        // out and requeue the shrunken composites for re-screening.
        for (std::size_t i = 0; i < st_.residuals.size();) {
            Natural& v = st_.residuals[i].value;
            unsigned pulled = 0;
            while (mpz_divisible_p(v.get_mpz_t(), p.get_mpz_t())) {
                mpz_divexact(v.get_mpz_t(), v.get_mpz_t(), p.get_mpz_t());
                ++pulled;
            }
            if (pulled == 0) {
                ++i;
                continue;
            }
            it->second += pulled;
            ResidualDivisor shrunk = std::move(st_.residuals[i]);
            st_.residuals.erase(st_.residuals.begin() + static_cast<std::ptrdiff_t>(i));
            if (shrunk.value > 1)
                push_residual(std::move(shrunk.value), std::move(shrunk.origin_prime),
                              shrunk.origin_exponent);
        }
        return std::nullopt;
    }

    std::optional<Contradiction> place_residual(AbsorbItem item) {
        Natural v = std::move(item.value);
        if (v <= 1) return std::nullopt;

        // Strip every prime the state already knows, crediting multiplicity.
        for (const Natural& p : st_.known_primes()) {
            unsigned pulled = 0;
            while (mpz_divisible_p(v.get_mpz_t(), p.get_mpz_t())) {
                mpz_divexact(v.get_mpz_t(), v.get_mpz_t(), p.get_mpz_t());
                ++pulled;
            }
            if (pulled) {
                if (auto fired = credit_prime(p, pulled)) return fired;
                if (v == 1) return std::nullopt;
            }
        }

        if (is_prime(v)) return credit_prime(v, 1);
        if (auto power = is_perfect_power(v)) {
            if (is_prime(power->first)) return credit_prime(power->first, power->second);
            // Composite base: c^k | N weakens soundly to c | N.
            v = power->first;
        }

        // Coprimality against the existing residuals: any overlap splits
        // both composites into smaller pieces, all re-screened from scratch.
        for (std::size_t i = 0; i < st_.residuals.size(); ++i) {
            Natural g;
            mpz_gcd(g.get_mpz_t(), v.get_mpz_t(), st_.residuals[i].value.get_mpz_t());
            if (g == 1) continue;
            ResidualDivisor other = std::move(st_.residuals[i]);
            st_.residuals.erase(st_.residuals.begin() + static_cast<std::ptrdiff_t>(i));
            push_residual(g, other.origin_prime, other.origin_exponent);
            push_residual(Natural(other.value / g), std::move(other.origin_prime),
                          other.origin_exponent);
            push_residual(Natural(v / g), std::move(item.origin_prime),
                          item.origin_exponent);
            return std::nullopt;
        }

        st_.residuals.push_back(
            {std::move(v), std::move(item.origin_prime), item.origin_exponent});
        return std::nullopt;
    }

    BranchState& st_;
    std::deque<AbsorbItem> queue_;
};

}  // namespace detail

// Appends the hypothesis q^e || N to the state.  Fires ExcessPrime(q)
// immediately when q's already-accumulated multiplicity exceeds e.
inline std::optional<Contradiction> assign_component(BranchState& st, const Natural& q,
                                                     unsigned e, bool special) {
    assert(!st.find_assigned(q) && !st.forbidden.count(q));
    assert(e <= st.budget());
    assert(special ? (e % 4 == 1 && mpz_fdiv_ui(q.get_mpz_t(), 4) == 1 && !st.special_taken())
                   : (e % 2 == 0));
    unsigned m = 0;
    if (auto it = st.required.find(q); it != st.required.end()) {
        m = it->second;
        st.required.erase(it);
    }
    st.assigned.push_back({q, e, m, special});
    if (m > e) return Contradiction{Contradiction::Kind::excess_prime, q, {}};
    return std::nullopt;
}

// Merges the factorization of sigma(q^e) — for the newest assignment q^e —
// into the state.  For a special assignment sigma is even; exactly one
// factor 2 is discarded (sigma(N) = 2N has a single 2, N being odd), and
// any other factor 2 is an internal error.  Returns the first ExcessPrime
// contradiction encountered, in deterministic order: q's own multiplicity,
// then sigma's prime factors ascending, then the residual placement.
inline std::optional<Contradiction> absorb_factors(BranchState& st,
                                                   const PartialFactorization& f) {
    assert(!st.assigned.empty());
    const AssignedComponent& comp = st.assigned.back();

    detail::Absorber absorber(st);
    bool discarded_two = false;
    for (const auto& [p, k] : f.prime_factors) {
        if (p == 2) {
            if (!comp.special || k != 1)
                throw std::logic_error("absorb_factors: sigma parity violates odd N");
            discarded_two = true;
            continue;
        }
        absorber.push_prime(p, k);
    }
    if (comp.special && !discarded_two)
        throw std::logic_error("absorb_factors: special sigma missing its factor 2");
    if (f.residual) {
        if (mpz_even_p(f.residual->get_mpz_t()))
            throw std::logic_error("absorb_factors: even residual violates odd N");
        absorber.push_residual(*f.residual, comp.prime, comp.exponent);
    }
    return absorber.run();
}

// ---- the contradiction checks ----------------------------------------------

// Required primes plus residuals (two unknown primes each) must fit within
// the budget's capacity for new distinct primes.
inline std::optional<Contradiction> check_prime_count(const BranchState& st) {
    const std::size_t needed = st.required.size() + 2 * st.residuals.size();
    if (needed > max_new_distinct_primes(st))
        return Contradiction{Contradiction::Kind::excess_prime_count, {}, {}};
    return std::nullopt;
}

// With the special slot free but every required prime = 3 (mod 4), none of
// them may take the one odd exponent; if even exponents alone overflow the
// budget the partition is impossible.  Residual primes have unknown residue
// classes, so the test only applies when there are none.
inline std::optional<Contradiction> check_partition(const BranchState& st) {
    if (st.special_taken() || !st.residuals.empty()) return std::nullopt;
    if (2 * st.required.size() <= st.budget()) return std::nullopt;
    for (const auto& [p, m] : st.required) {
        if (mpz_fdiv_ui(p.get_mpz_t(), 4) == 1) return std::nullopt;
    }
    return Contradiction{Contradiction::Kind::exponent_bounds, {}, {}};
}

// Exact lower bound for the abundancy sigma(N)/N given the hypotheses:
// assigned components contribute exactly, required primes at their minimum
// known multiplicity, residual composites c at least (c+1)/c.
inline Rational abundancy_lower_bound(const BranchState& st) {
    Rational bound(1);
    for (const auto& c : st.assigned) bound *= abundancy_prime_power(c.prime, c.exponent);
    for (const auto& [p, m] : st.required)
        bound *= abundancy_prime_power(p, std::max(m, 1u));
    for (const auto& r : st.residuals)
        bound *= make_rational(Natural(r.value + 1), r.value);
    return bound;
}

// A perfect number has abundancy exactly 2; a lower bound above 2 refutes.
inline std::optional<Contradiction> check_abundancy(const BranchState& st) {
    Rational bound = abundancy_lower_bound(st);
    if (bound > 2)
        return Contradiction{Contradiction::Kind::abundancy_excess, {}, std::move(bound)};
    return std::nullopt;
}

// Distinct-prime-count thresholds, sharpened by which small primes are
// known not to divide N.
inline unsigned omega_threshold(const BranchState& st) {
    if (!st.forbidden.count(3)) return 8;
    if (!st.forbidden.count(5)) return 11;
    if (!st.forbidden.count(7)) return 15;
    return 27;
}

inline std::optional<Contradiction> check_omega_bound(const BranchState& st) {
    if (st.assigned.size() + max_new_distinct_primes(st) < omega_threshold(st))
        return Contradiction{Contradiction::Kind::omega_bound, {}, {}};
    return std::nullopt;
}

// All four post-absorption checks in their fixed order; the first to fire
// names the transcript tag.
inline std::optional<Contradiction> run_checks(const BranchState& st) {
    if (auto c = check_prime_count(st)) return c;
    if (auto c = check_partition(st)) return c;
    if (auto c = check_abundancy(st)) return c;
    if (auto c = check_omega_bound(st)) return c;
    return std::nullopt;
}

// ---- interval branching ------------------------------------------------------

// The minimum undiscovered prime factor of N lies in [lower, upper):
// lower = max(3, S/(2-S)) and upper = (2 + S(r-1))/(2-S), improved to
// (8 + 2 S^2 (r-1))/(4 - S^2) when r >= 3 and that is smaller.  S is the
// exact abundancy of the assigned (known-exponent) part alone; r bounds how
// many distinct primes are still missing.
// r = 0 is admitted and collapses the interval: upper becomes
// (2 - S)/(2 - S) = 1 < lower, so no prime qualifies — the sound
// conclusion when no further primes may be added yet S < 2.
inline CohenSorliInterval cohen_sorli_interval(const Rational& S, unsigned r) {
    if (!(S < 2)) throw std::invalid_argument("cohen_sorli_interval: needs S < 2");
    const Rational two_minus(2 - S);
    const long shifted = static_cast<long>(r) - 1;  // signed: r = 0 must not wrap
    CohenSorliInterval iv;
    iv.lower = std::max(Rational(3), Rational(S / two_minus));
    iv.upper = (2 + S * shifted) / two_minus;
    if (r >= 3) {
        Rational tighter = (8 + 2 * S * S * shifted) / (4 - S * S);
        if (tighter < iv.upper) {
            iv.upper = std::move(tighter);
            iv.used_r_ge_3_form = true;
        }
    }
    return iv;
}

// Exact abundancy of the assigned part only — the S fed to Cohen-Sorli.
inline Rational assigned_abundancy(const BranchState& st) {
    Rational s(1);
    for (const auto& c : st.assigned) s *= abundancy_prime_power(c.prime, c.exponent);
    return s;
}

// Primes q with lower <= q < upper (exact rational comparison), skipping
// forbidden and assigned primes, ascending.  An empty result refutes the
// branch: some new prime would have to exist in the interval.  When the
// upper bound reaches the smallness threshold the branch is stuck instead —
// the wish-list names the residuals whose factorizations would narrow S.
inline std::vector<Natural> enumerate_interval_primes(const BranchState& st,
                                                      const CohenSorliInterval& iv,
                                                      const Natural& threshold) {
    if (iv.upper >= threshold) {
        StuckBranch stuck;
        stuck.upper = iv.upper;
        for (const auto& r : st.residuals)
            stuck.wishes.push_back({r.origin_prime, r.origin_exponent, r.value});
        throw stuck;
    }
    std::vector<Natural> out;
    if (!(iv.lower < iv.upper)) return out;
    // threshold < 2^32 is enforced at configuration time; the sieve covers it.
    const std::uint32_t limit = static_cast<std::uint32_t>(mpz_get_ui(threshold.get_mpz_t()));
    auto table = prime_table(limit);
    for (std::uint32_t p : *table) {
        Rational rp(static_cast<unsigned long>(p));
        if (rp < iv.lower) continue;
        if (!(rp < iv.upper)) break;
        Natural np(static_cast<unsigned long>(p));
        if (st.forbidden.count(np) || st.find_assigned(np)) continue;
        out.push_back(std::move(np));
    }
    return out;
}

// Admissible exponents for assigning prime q: even exponents within budget,
// plus the special exponents 1, 5, 9, ... when q = 1 (mod 4) and the
// special slot is free.  Merged ascending.
inline std::vector<unsigned> candidate_exponents(const BranchState& st, const Natural& q) {
    assert(!st.find_assigned(q) && !st.forbidden.count(q));
    const unsigned b = st.budget();
    const bool special_ok = !st.special_taken() && mpz_fdiv_ui(q.get_mpz_t(), 4) == 1;
    std::vector<unsigned> out;
    for (unsigned e = 1; e <= b; ++e) {
        if (e % 2 == 0 || (special_ok && e % 4 == 1)) out.push_back(e);
    }
    return out;
}

// The next prime to branch on: the smallest required-but-unassigned prime.
inline const Natural& branching_prime(const BranchState& st) {
    assert(!st.required.empty());
    return st.required.begin()->first;
}

}  // namespace opn
