#pragma once

// Independent transcript verifier.
//
// The verifier re-derives every claim in a transcript from first principles,
// sharing only the exact-arithmetic layer with the prover: factor lists are
// re-multiplied against a freshly computed sigma and re-tested for primality,
// contradiction tags are re-derived from a state reconstructed by replaying
// the absorption protocol, and every branch point is checked for candidate
// completeness (exponent lists, and interval primes against a re-derived
// interval).  The first discrepancy is reported with its line number.
//
// Deliberately not included here: the branch-search engine headers.  The
// state bookkeeping, the absorption worklist, the five checks, and the
// interval/candidate enumerations below are a second, self-contained
// implementation of the same mathematics.

#include "opn/arith.hpp"
#include "opn/primality.hpp"
#include "opn/transcript.hpp"

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace opn {

struct VerifyReport {
    bool sound = false;     // the replayed prefix contains no discrepancy
    bool complete = false;  // all four phases closed and the capstone is present
    std::size_t line = 0;   // first discrepant line (0 when sound or unlocated)
    std::string reason;     // empty when sound

    bool ok() const { return sound && complete; }

    std::string to_string() const {
        if (sound && complete) return "transcript verified: sound and complete";
        if (sound) return "transcript prefix sound but the proof is incomplete";
        if (line) return "verification failed at line " + std::to_string(line) + ": " + reason;
        return "verification failed: " + reason;
    }
};

namespace vdetail {

struct Discrepancy {
    std::size_t line;
    std::string reason;
};

// -- reconstructed branch state (verifier-local) -----------------------------

struct VComponent {
    Natural prime;
    unsigned exponent = 0;
    unsigned absorbed = 0;  // multiplicity already accounted for by sigma factors
    bool special = false;
};

struct VResidual {
    Natural value;
    Natural origin_prime;
    unsigned origin_exponent = 0;
};

struct VState {
    unsigned total_budget = 0;
    std::vector<VComponent> assigned;
    std::map<Natural, unsigned> required;  // prime -> minimum known multiplicity
    std::vector<VResidual> residuals;
    std::set<Natural> forbidden;

    unsigned spent() const {
        unsigned s = 0;
        for (const auto& c : assigned) s += c.exponent;
        return s;
    }
    unsigned budget() const { return total_budget - spent(); }
    bool special_taken() const {
        return std::any_of(assigned.begin(), assigned.end(),
                           [](const VComponent& c) { return c.special; });
    }
    VComponent* find(const Natural& p) {
        for (auto& c : assigned)
            if (c.prime == p) return &c;
        return nullptr;
    }
    const VComponent* find(const Natural& p) const {
        return const_cast<VState*>(this)->find(p);
    }
    std::vector<Natural> known_primes() const {
        std::vector<Natural> out;
        out.reserve(assigned.size() + required.size());
        for (const auto& c : assigned) out.push_back(c.prime);
        for (const auto& [p, m] : required) out.push_back(p);
        std::sort(out.begin(), out.end());
        return out;
    }
};

// -- derived quantities -------------------------------------------------------

inline unsigned new_prime_capacity(const VState& st) {
    const unsigned b = st.budget();
    if (!st.special_taken() && b >= 1) return 1 + (b - 1) / 2;  // one odd slot + pairs
    return b / 2;                                               // pairs only
}

inline unsigned omega_floor(const VState& st) {
    if (!st.forbidden.count(3)) return 8;
    if (!st.forbidden.count(5)) return 11;
    if (!st.forbidden.count(7)) return 15;
    return 27;
}

inline std::vector<unsigned> admissible_exponents(const VState& st, const Natural& q) {
    const unsigned b = st.budget();
    const bool odd_ok = !st.special_taken() && mpz_fdiv_ui(q.get_mpz_t(), 4) == 1;
    std::vector<unsigned> out;
    for (unsigned e = 1; e <= b; ++e)
        if (e % 2 == 0 || (odd_ok && e % 4 == 1)) out.push_back(e);
    return out;
}

// -- absorption replay ---------------------------------------------------------
//
// Mirrors the prover's protocol: a FIFO worklist of prime credits and
// composite placements.  Forbidden primes fire immediately; credits against
// an assigned component respect its exponent cap; a freshly required prime
// is pulled out of every stored residual; composites are stripped of known
// primes, screened for primality and perfect powers, split against stored
// residuals by gcd, and finally stored.  The returned string is the
// contradiction tag ("xs=p"), or empty for a clean merge.

class Absorption {
  public:
    explicit Absorption(VState& st) : st_(st) {}

    void add_prime(const Natural& p, unsigned k) { queue_.push_back({false, p, k, {}, 0}); }
    void add_composite(const Natural& v, const Natural& op, unsigned oe) {
        queue_.push_back({true, v, 0, op, oe});
    }

    std::optional<std::string> drain() {
        while (!queue_.empty()) {
            Item item = std::move(queue_.front());
            queue_.pop_front();
            auto tag = item.composite ? place(std::move(item)) : credit(item.value, item.count);
            if (tag) return tag;
        }
        return std::nullopt;
    }

  private:
    struct Item {
        bool composite = false;
        Natural value;
        unsigned count = 0;
        Natural origin_prime;
        unsigned origin_exponent = 0;
    };

    std::optional<std::string> credit(const Natural& p, unsigned k) {
        if (st_.forbidden.count(p)) return "xs=" + p.get_str();
        if (VComponent* c = st_.find(p)) {
            c->absorbed += k;
            if (c->absorbed > c->exponent) return "xs=" + p.get_str();
            return std::nullopt;
        }
        auto [it, fresh] = st_.required.emplace(p, 0);
        it->second += k;
        if (!fresh) return std::nullopt;
        for (std::size_t i = 0; i < st_.residuals.size();) {
            Natural& v = st_.residuals[i].value;
            unsigned pulled = 0;
            while (mpz_divisible_p(v.get_mpz_t(), p.get_mpz_t())) {
                mpz_divexact(v.get_mpz_t(), v.get_mpz_t(), p.get_mpz_t());
                ++pulled;
            }
            if (!pulled) {
                ++i;
                continue;
            }
            it->second += pulled;
            VResidual shrunk = std::move(st_.residuals[i]);
            st_.residuals.erase(st_.residuals.begin() + static_cast<std::ptrdiff_t>(i));
            if (shrunk.value > 1)
                add_composite(shrunk.value, shrunk.origin_prime, shrunk.origin_exponent);
        }
        return std::nullopt;
    }

    std::optional<std::string> place(Item item) {
        Natural v = std::move(item.value);
        if (v <= 1) return std::nullopt;
        for (const Natural& p : st_.known_primes()) {
            unsigned pulled = 0;
            while (mpz_divisible_p(v.get_mpz_t(), p.get_mpz_t())) {
                mpz_divexact(v.get_mpz_t(), v.get_mpz_t(), p.get_mpz_t());
                ++pulled;
            }
            if (pulled) {
                if (auto tag = credit(p, pulled)) return tag;
                if (v == 1) return std::nullopt;
            }
        }
        if (is_prime(v)) return credit(v, 1);
        if (auto power = is_perfect_power(v)) {
            if (is_prime(power->first)) return credit(power->first, power->second);
            v = power->first;  // composite base: weaken c^k | N to c | N
        }
        for (std::size_t i = 0; i < st_.residuals.size(); ++i) {
            Natural g;
            mpz_gcd(g.get_mpz_t(), v.get_mpz_t(), st_.residuals[i].value.get_mpz_t());
            if (g == 1) continue;
            VResidual other = std::move(st_.residuals[i]);
            st_.residuals.erase(st_.residuals.begin() + static_cast<std::ptrdiff_t>(i));
            add_composite(g, other.origin_prime, other.origin_exponent);
            add_composite(Natural(other.value / g), other.origin_prime, other.origin_exponent);
            add_composite(Natural(v / g), item.origin_prime, item.origin_exponent);
            return std::nullopt;
        }
        st_.residuals.push_back({std::move(v), std::move(item.origin_prime),
                                 item.origin_exponent});
        return std::nullopt;
    }

    VState& st_;
    std::deque<Item> queue_;
};

// -- the five checks, re-derived ------------------------------------------------

inline std::optional<std::string> first_contradiction(const VState& st) {
    // 1. Distinct new primes needed vs. capacity.
    if (st.required.size() + 2 * st.residuals.size() > new_prime_capacity(st))
        return "xs=prime";

    // 2. Budget partition: with the odd slot free and nothing unknown beyond
    // the required primes, each needs an even exponent (2 apiece) unless one
    // of them can take the odd slot.
    if (!st.special_taken() && st.residuals.empty() &&
        2 * st.required.size() > st.budget()) {
        bool some_special_candidate = false;
        for (const auto& [p, m] : st.required)
            if (mpz_fdiv_ui(p.get_mpz_t(), 4) == 1) {
                some_special_candidate = true;
                break;
            }
        if (!some_special_candidate) return "exponent bounds exceeded";
    }

    // 3. Abundancy lower bound strictly above 2.
    Rational bound(1);
    for (const auto& c : st.assigned) bound *= abundancy_prime_power(c.prime, c.exponent);
    for (const auto& [p, m] : st.required)
        bound *= abundancy_prime_power(p, std::max(m, 1u));
    for (const auto& r : st.residuals)
        bound *= make_rational(Natural(r.value + 1), r.value);
    if (bound > 2) return "S=" + truncate_decimal(bound, 9);

    // 4. Too few distinct primes reachable for the omega floor.
    if (st.assigned.size() + new_prime_capacity(st) < omega_floor(st))
        return "violate omega bound";

    return std::nullopt;
}

// -- interval re-derivation ------------------------------------------------------

struct VInterval {
    Rational lower, upper;
};

inline VInterval derive_interval(const Rational& S, unsigned r) {
    const Rational gap(2 - S);
    const long shifted = static_cast<long>(r) - 1;
    VInterval iv;
    iv.lower = std::max(Rational(3), Rational(S / gap));
    iv.upper = (2 + S * shifted) / gap;
    if (r >= 3) {
        Rational tighter = (8 + 2 * S * S * shifted) / (4 - S * S);
        if (tighter < iv.upper) iv.upper = std::move(tighter);
    }
    return iv;
}

// -- the replay ------------------------------------------------------------------

class Replay {
  public:
    explicit Replay(const Transcript& t) : t_(t) {}

    // Walks the event stream against a re-derivation of the whole search.
    // Returns true when the body covers all four phases (cursor at end),
    // false when the body is a clean partial (ends exactly at a phase
    // boundary).  Throws Discrepancy on the first mismatch.
    bool run() {
        if (t_.K % 2 != 1 || t_.K < 9 || t_.K > 81)
            throw Discrepancy{0, "header K = " + std::to_string(t_.K) +
                                     " is not an odd bound between 9 and 81"};
        if (t_.B != t_.K - 2)
            throw Discrepancy{0, "header B = " + std::to_string(t_.B) +
                                     " does not equal K - 2 = " + std::to_string(t_.K - 2)};
        VState root;
        root.total_budget = t_.B;
        for (unsigned long q : {3UL, 5UL, 7UL, 11UL}) {
            if (cursor_ == t_.events.size()) return false;  // clean partial
            const Natural phase_prime(q);
            exponent_block(root, phase_prime, 0);
            root.forbidden.insert(phase_prime);
        }
        if (cursor_ != t_.events.size())
            throw Discrepancy{t_.events[cursor_].line,
                              "trailing events after the final phase"};
        return true;
    }

  private:
    const Transcript& t_;
    std::size_t cursor_ = 0;
    // First fully-validated factor list per (q, e), with its remainder: the
    // prover caches sigma factorizations run-wide, so every later occurrence
    // must be identical and can skip the expensive primality re-checks.
    std::map<std::pair<Natural, unsigned>, std::pair<std::vector<FactorEntry>, Natural>>
        line_memo_;
    std::set<Natural> prime_memo_;

    [[noreturn]] void fail(std::size_t line, std::string reason) {
        throw Discrepancy{line, std::move(reason)};
    }
    std::size_t here() const {
        return cursor_ < t_.events.size() ? t_.events[cursor_].line
                                          : (t_.events.empty() ? 0 : t_.events.back().line);
    }
    const ProofEvent& next(const std::string& expectation) {
        if (cursor_ == t_.events.size())
            fail(here(), "transcript ends where " + expectation + " was expected");
        return t_.events[cursor_++];
    }

    void check_prime(const Natural& p, std::size_t line) {
        if (prime_memo_.count(p)) return;
        if (classify_prime(p) == PrimalityTier::composite)
            fail(line, "claimed prime factor " + p.get_str() + " is composite");
        prime_memo_.insert(p);
    }

    // Validates the factor list of an assignment line against sigma(q^e) and
    // returns the residual remainder (1 when fully factored).
    Natural validate_factors(const ProofEvent& ev, const Natural& q, unsigned e) {
        const std::pair<Natural, unsigned> key{q, e};
        if (auto it = line_memo_.find(key); it != line_memo_.end()) {
            const auto& canon = it->second.first;
            bool same = canon.size() == ev.factors.size();
            for (std::size_t i = 0; same && i < canon.size(); ++i)
                same = canon[i].residual == ev.factors[i].residual &&
                       canon[i].value == ev.factors[i].value &&
                       canon[i].multiplicity == ev.factors[i].multiplicity &&
                       canon[i].residual_digits == ev.factors[i].residual_digits;
            if (!same)
                fail(ev.line, "factor list for sigma(" + q.get_str() + "^" + std::to_string(e) +
                                  ") differs from an earlier occurrence");
            return it->second.second;
        }

        Natural remaining = sigma_prime_power(q, e);
        Natural prev(0);
        bool saw_residual = false;
        std::size_t claimed_digits = 0;
        for (const FactorEntry& f : ev.factors) {
            if (saw_residual) fail(ev.line, "factor listed after the residual");
            if (f.residual) {
                saw_residual = true;
                claimed_digits = f.residual_digits;
                continue;
            }
            if (f.multiplicity < 1) fail(ev.line, "factor with zero multiplicity");
            if (!(f.value > prev)) fail(ev.line, "factors not strictly ascending");
            prev = f.value;
            check_prime(f.value, ev.line);
            for (unsigned i = 0; i < f.multiplicity; ++i) {
                if (!mpz_divisible_p(remaining.get_mpz_t(), f.value.get_mpz_t()))
                    fail(ev.line, "claimed factors do not divide sigma(" + q.get_str() + "^" +
                                      std::to_string(e) + ")");
                mpz_divexact(remaining.get_mpz_t(), remaining.get_mpz_t(), f.value.get_mpz_t());
            }
            if (mpz_divisible_p(remaining.get_mpz_t(), f.value.get_mpz_t()))
                fail(ev.line, "factor " + f.value.get_str() + " listed below its true multiplicity");
        }
        if (saw_residual) {
            if (remaining == 1)
                fail(ev.line, "residual claimed but the listed factors already multiply out");
            if (decimal_digits(remaining) != claimed_digits)
                fail(ev.line, "residual has " + std::to_string(decimal_digits(remaining)) +
                                  " digits, not " + std::to_string(claimed_digits));
            if (classify_prime(remaining) != PrimalityTier::composite)
                fail(ev.line, "residual is prime, not composite");
        } else if (remaining != 1) {
            fail(ev.line, "listed factors multiply to less than sigma(" + q.get_str() + "^" +
                              std::to_string(e) + ")");
        }

        line_memo_.emplace(key, std::make_pair(ev.factors, remaining));
        return remaining;
    }

    // Re-derives the assignment's outcome: either the contradiction tag that
    // must be printed on the line, or the successor state to recurse into.
    void replay_assign(const VState& base, const Natural& q, unsigned e, unsigned depth) {
        const ProofEvent& ev = next("assignment of " + q.get_str() + "^" + std::to_string(e));
        if (ev.kind != ProofEvent::Kind::assign || ev.depth != depth || ev.prime != q ||
            ev.exponent != e)
            fail(ev.line, "expected assignment of " + q.get_str() + "^" + std::to_string(e) +
                              " at depth " + std::to_string(depth) +
                              " — branch set incomplete or out of order");
        Natural remainder = validate_factors(ev, q, e);

        VState st = base;
        std::optional<std::string> tag;

        unsigned m = 0;
        if (auto it = st.required.find(q); it != st.required.end()) {
            m = it->second;
            st.required.erase(it);
        }
        const bool special = (e % 2 == 1);
        st.assigned.push_back({q, e, m, special});
        if (m > e) tag = "xs=" + q.get_str();

        if (!tag) {
            Absorption merge(st);
            bool dropped_two = false;
            for (const FactorEntry& f : ev.factors) {
                if (f.residual) continue;
                if (f.value == 2) {
                    if (!special || f.multiplicity != 1)
                        fail(ev.line, special ? "sigma of an odd power carries exactly one 2"
                                              : "sigma of an even power is odd");
                    dropped_two = true;
                    continue;
                }
                merge.add_prime(f.value, f.multiplicity);
            }
            if (special && !dropped_two)
                fail(ev.line, "sigma of an odd power must carry a factor 2");
            if (remainder > 1) merge.add_composite(remainder, q, e);
            tag = merge.drain();
        }
        if (!tag) tag = first_contradiction(st);

        const bool has_printed_tag = cursor_ < t_.events.size() &&
                                     t_.events[cursor_].kind == ProofEvent::Kind::contradiction;
        if (tag) {
            if (!has_printed_tag)
                fail(ev.line, "line omits the contradiction \"" + *tag + "\"");
            const ProofEvent& cev = t_.events[cursor_++];
            const std::string printed = detail::render_contradiction_tag(cev.contra);
            if (printed != *tag)
                fail(cev.line, "tag \"" + printed + "\" but re-derivation gives \"" + *tag + "\"");
            return;
        }
        if (has_printed_tag)
            fail(t_.events[cursor_].line, "contradiction tag not justified by re-derivation");
        replay_refute(st, depth + 1);
    }

    void exponent_block(const VState& st, const Natural& q, unsigned depth) {
        for (unsigned e : admissible_exponents(st, q)) replay_assign(st, q, e, depth);
    }

    void replay_refute(const VState& st, unsigned depth) {
        if (!st.required.empty()) {
            const Natural q = st.required.begin()->first;
            if (admissible_exponents(st, q).empty())
                fail(here(), "required prime " + q.get_str() + " admits no exponent — "
                             "the prover cannot have reached this state");
            exponent_block(st, q, depth);
            return;
        }

        for (const VResidual& r : st.residuals) {
            const ProofEvent& ev = next("a factoring wish");
            if (ev.kind != ProofEvent::Kind::wish || ev.depth != depth ||
                ev.prime != r.origin_prime || ev.exponent != r.origin_exponent)
                fail(ev.line, "expected the wish for sigma(" + r.origin_prime.get_str() + "^" +
                                  std::to_string(r.origin_exponent) + ")");
        }

        Rational S(1);
        for (const auto& c : st.assigned) S *= abundancy_prime_power(c.prime, c.exponent);
        if (!(S < 2)) fail(here(), "assigned part alone is non-deficient; nothing to try");
        const unsigned r = new_prime_capacity(st);
        const VInterval iv = derive_interval(S, r);

        const ProofEvent& begin = next("the interval line");
        if (begin.kind != ProofEvent::Kind::cs_begin || begin.depth != depth)
            fail(begin.line, "expected the interval line at depth " + std::to_string(depth));
        if (render_bound(begin.lower) != render_bound(iv.lower) ||
            render_bound(begin.upper) != render_bound(iv.upper))
            fail(begin.line, "interval (" + render_bound(begin.lower) + ", " +
                                 render_bound(begin.upper) + ") but re-derivation gives (" +
                                 render_bound(iv.lower) + ", " + render_bound(iv.upper) + ")");

        VState block = st;
        for (const Natural& p : interval_primes(block, iv)) {
            const ProofEvent& ev = next("the try line for " + p.get_str());
            if (ev.kind != ProofEvent::Kind::cs_try || ev.depth != depth || ev.prime != p)
                fail(ev.line, "expected \"Next prime to try is " + p.get_str() +
                                  "\" — interval prime set incomplete or out of order");
            exponent_block(block, p, depth);
            block.forbidden.insert(p);
        }

        const ProofEvent& end = next("the interval-closing line");
        if (end.kind != ProofEvent::Kind::cs_end || end.depth != depth)
            fail(end.line, "expected \"Finished\" closing the interval block");
    }

    // All admissible primes in [lower, upper), re-derived with a local sieve
    // bound just past the upper endpoint.
    std::vector<Natural> interval_primes(const VState& st, const VInterval& iv) {
        std::vector<Natural> out;
        if (!(iv.lower < iv.upper)) return out;
        Natural upper_floor;
        mpz_fdiv_q(upper_floor.get_mpz_t(), iv.upper.get_num().get_mpz_t(),
                   iv.upper.get_den().get_mpz_t());
        if (upper_floor.fits_uint_p() == 0 || upper_floor.get_ui() > 2147483647UL)
            fail(here(), "interval upper bound too large to re-enumerate");
        const auto limit = static_cast<std::uint32_t>(upper_floor.get_ui() + 1);
        auto table = prime_table(limit);
        for (std::uint32_t p : *table) {
            Rational rp(static_cast<unsigned long>(p));
            if (rp < iv.lower) continue;
            if (!(rp < iv.upper)) break;
            Natural np(static_cast<unsigned long>(p));
            if (st.forbidden.count(np) || st.find(np)) continue;
            out.push_back(std::move(np));
        }
        return out;
    }
};

}  // namespace vdetail

// Verifies a rendered transcript end to end: grammar, headers, factor
// arithmetic, primality, tag re-derivation, and branch completeness.
inline VerifyReport verify_transcript(const std::string& text) {
    VerifyReport report;
    try {
        const Transcript t = parse_transcript(text);
        vdetail::Replay replay(t);
        const bool covered = replay.run();
        report.sound = true;
        report.complete = covered && t.complete;
        if (t.complete && !covered) {
            report.sound = false;
            report.complete = false;
            report.reason = "capstone present but the body does not close all four phases";
        }
    } catch (const vdetail::Discrepancy& d) {
        report.line = d.line;
        report.reason = d.reason;
    } catch (const std::exception& e) {
        report.reason = e.what();  // parse errors carry their own location
    }
    return report;
}

}  // namespace opn
