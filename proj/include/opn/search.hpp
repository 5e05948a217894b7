#pragma once

// The proof driver: exhaustive refutation of admissible factor chains.
//
// A branch assigns one prime power q^e at a time (q drawn from the required
// set, or from an interval of candidate minimum primes when nothing is
// required), absorbs the factorization of sigma(q^e) into the state, and runs
// the contradiction checks.  Every admissible child either contradicts or
// recurses; when all four small-prime root phases are closed, the omega
// capstone finishes the proof.  The emitted event list renders to the
// transcript text verbatim.

#include "opn/arith.hpp"
#include "opn/branch.hpp"
#include "opn/certify.hpp"
#include "opn/factor.hpp"
#include "opn/primality.hpp"
#include "opn/transcript.hpp"

#include <atomic>
#include <cstdint>
#include <future>
#include <iterator>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <utility>
#include <vector>

namespace opn {

struct ProveOptions {
    Natural smallness_threshold{100000};  // interval upper bounds at or past this are "stuck"
    unsigned jobs = 1;
    bool certify = true;  // attempt certificates for primes beyond the deterministic range
};

// Shared, thread-safe run state: the sigma factorization cache and the
// worker-slot budget.  Hints and policy are borrowed for the run's duration.
class SearchContext {
  public:
    SearchContext(const HintsDB& hints, const EffortPolicy& policy, const ProveOptions& opts)
        : hints_(hints), policy_(policy), opts_(opts) {}

    const HintsDB& hints() const { return hints_; }
    const EffortPolicy& policy() const { return policy_; }
    const ProveOptions& options() const { return opts_; }

    // Factorization of sigma(q^e), cached across the whole run.  factor_easy
    // is deterministic, so concurrent duplicate computation is harmless.
    std::shared_ptr<const PartialFactorization> sigma_factors(const Natural& q, unsigned e) {
        const std::pair<Natural, unsigned> key{q, e};
        {
            std::lock_guard lock(mutex_);
            if (auto it = cache_.find(key); it != cache_.end()) return it->second;
        }
        auto pf = std::make_shared<const PartialFactorization>(
            factor_easy(sigma_prime_power(q, e), hints_, policy_));
        std::lock_guard lock(mutex_);
        return cache_.emplace(key, std::move(pf)).first->second;
    }

    bool try_claim_worker() {
        unsigned current = workers_.load();
        while (current < opts_.jobs)
            if (workers_.compare_exchange_weak(current, current + 1)) return true;
        return false;
    }
    void release_worker() { workers_.fetch_sub(1); }

  private:
    const HintsDB& hints_;
    const EffortPolicy& policy_;
    const ProveOptions& opts_;
    std::map<std::pair<Natural, unsigned>, std::shared_ptr<const PartialFactorization>> cache_;
    std::mutex mutex_;
    std::atomic<unsigned> workers_{1};
};

std::vector<ProofEvent> refute_branch(const BranchState& st, unsigned depth, SearchContext& ctx);

// Assigns q^e on a copy of `base`, absorbs sigma's factors, runs the checks,
// and recurses until every sub-chain ends in a contradiction.  Returns the
// subtree's events: the assignment line, then either its contradiction tag
// or the refutations of all children.
inline std::vector<ProofEvent> assign_and_refute(const BranchState& base, const Natural& q,
                                                 unsigned e, unsigned depth, SearchContext& ctx) {
    auto pf = ctx.sigma_factors(q, e);
    const bool special = (e % 2 == 1);

    std::vector<ProofEvent> events;
    {
        ProofEvent ev;
        ev.kind = ProofEvent::Kind::assign;
        ev.depth = depth;
        ev.prime = q;
        ev.exponent = e;
        for (const auto& [p, k] : pf->prime_factors) ev.factors.push_back({p, k, false, 0});
        if (pf->residual)
            ev.factors.push_back({*pf->residual, 1, true, decimal_digits(*pf->residual)});
        events.push_back(std::move(ev));
    }

    BranchState st = base;
    std::optional<Contradiction> contra = assign_component(st, q, e, special);
    if (!contra) contra = absorb_factors(st, *pf);
    if (!contra) contra = run_checks(st);
    if (contra) {
        ProofEvent ev;
        ev.kind = ProofEvent::Kind::contradiction;
        ev.depth = depth;
        ev.contra = std::move(*contra);
        events.push_back(std::move(ev));
        return events;
    }

    std::vector<ProofEvent> sub = refute_branch(st, depth + 1, ctx);
    events.insert(events.end(), std::make_move_iterator(sub.begin()),
                  std::make_move_iterator(sub.end()));
    return events;
}

namespace detail {

// Refutes q^e for every exponent in `exps` (already ascending) against the
// same base state.  Siblings are independent, so shallow levels may fork;
// results are joined in exponent order, keeping output byte-identical for
// any worker count.
inline std::vector<ProofEvent> refute_exponents(const BranchState& base, const Natural& q,
                                                const std::vector<unsigned>& exps, unsigned depth,
                                                SearchContext& ctx) {
    std::vector<std::vector<ProofEvent>> results(exps.size());
    std::vector<std::future<std::vector<ProofEvent>>> futures(exps.size());

    const bool may_fork = ctx.options().jobs > 1 && depth <= 2 && exps.size() >= 2;
    for (std::size_t i = 0; i < exps.size(); ++i) {
        const unsigned e = exps[i];
        if (may_fork && i + 1 < exps.size() && ctx.try_claim_worker()) {
            futures[i] = std::async(std::launch::async, [&base, &q, e, depth, &ctx] {
                struct Release {
                    SearchContext& c;
                    ~Release() { c.release_worker(); }
                } release{ctx};
                return assign_and_refute(base, q, e, depth, ctx);
            });
        } else {
            results[i] = assign_and_refute(base, q, e, depth, ctx);
        }
    }

    std::vector<ProofEvent> events;
    for (std::size_t i = 0; i < exps.size(); ++i) {
        if (futures[i].valid()) results[i] = futures[i].get();  // rethrows StuckBranch
        events.insert(events.end(), std::make_move_iterator(results[i].begin()),
                      std::make_move_iterator(results[i].end()));
    }
    return events;
}

}  // namespace detail

// Refutes a consistent state (all checks passed).  If primes are still
// required, branches on the smallest one's admissible exponents.  Otherwise
// every remaining prime is unknown, and the interval argument bounds the
// smallest one: each interval prime is tried in turn and thereafter
// forbidden, and an exhausted interval closes the branch.
inline std::vector<ProofEvent> refute_branch(const BranchState& st, unsigned depth,
                                             SearchContext& ctx) {
    if (!st.required.empty()) {
        const Natural q = branching_prime(st);
        const std::vector<unsigned> exps = candidate_exponents(st, q);
        // Unreachable when the checks hold: a surviving state always admits
        // at least one exponent for its smallest required prime.  Guarded
        // because an empty loop here would silently fake a refutation.
        if (exps.empty())
            throw std::logic_error("refute_branch: no admissible exponent for required prime " +
                                   q.get_str());
        return detail::refute_exponents(st, q, exps, depth, ctx);
    }

    std::vector<ProofEvent> events;
    for (const auto& r : st.residuals) {
        ProofEvent ev;
        ev.kind = ProofEvent::Kind::wish;
        ev.depth = depth;
        ev.prime = r.origin_prime;
        ev.exponent = r.origin_exponent;
        events.push_back(std::move(ev));
    }

    const Rational S = assigned_abundancy(st);
    if (!(S < 2)) {
        // Only reachable with no residuals (else the abundancy check fires),
        // so the assigned part alone would be an odd perfect number.
        throw std::logic_error("refute_branch: assigned part has abundancy >= 2 with nothing "
                               "left to add — cannot refute");
    }
    const unsigned r = max_new_distinct_primes(st);
    const CohenSorliInterval iv = cohen_sorli_interval(S, r);
    const std::vector<Natural> primes =
        enumerate_interval_primes(st, iv, ctx.options().smallness_threshold);

    {
        ProofEvent ev;
        ev.kind = ProofEvent::Kind::cs_begin;
        ev.depth = depth;
        ev.lower = iv.lower;
        ev.upper = iv.upper;
        events.push_back(std::move(ev));
    }

    // Tries are sequential by construction: once p is exhausted it becomes
    // forbidden for the later tries (p was a candidate *minimum* new prime).
    BranchState block = st;
    for (const Natural& p : primes) {
        {
            ProofEvent ev;
            ev.kind = ProofEvent::Kind::cs_try;
            ev.depth = depth;
            ev.prime = p;
            events.push_back(std::move(ev));
        }
        // An empty exponent list is a vacuous exclusion: no admissible
        // exponent fits the remaining budget, so p cannot divide N at all.
        const std::vector<unsigned> exps = candidate_exponents(block, p);
        std::vector<ProofEvent> sub = detail::refute_exponents(block, p, exps, depth, ctx);
        events.insert(events.end(), std::make_move_iterator(sub.begin()),
                      std::make_move_iterator(sub.end()));
        block.forbidden.insert(p);
    }

    {
        ProofEvent ev;
        ev.kind = ProofEvent::Kind::cs_end;
        ev.depth = depth;
        events.push_back(std::move(ev));
    }
    return events;
}

// Convenience entry point for driving a single state without a prepared
// context (used heavily by tests).
inline std::vector<ProofEvent> refute_branch(const BranchState& st, const HintsDB& hints,
                                             const EffortPolicy& policy,
                                             const ProveOptions& opts = {}) {
    SearchContext ctx(hints, policy, opts);
    return refute_branch(st, 0, ctx);
}

namespace detail {

// FNV-1a over the canonical configuration string.  The worker count is
// deliberately excluded: output is worker-invariant.
inline std::string make_config_digest(unsigned K, const HintsDB& hints,
                                      const EffortPolicy& policy, const Natural& threshold) {
    std::ostringstream s;
    s << "K=" << K << ";trial=" << policy.trial_division_bound
      << ";cap=" << policy.rho_iteration_cap << ";restarts=" << policy.rho_restart_count
      << ";seed=" << policy.seed << ";small=" << threshold.get_str();
    for (const auto& [n, fs] : hints.entries) {
        s << '|' << n.get_str();
        for (const auto& f : fs) s << ',' << f.get_str();
    }
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s.str()) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    static const char* hex = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = hex[h & 0xf];
    return out;
}

// Certifies every prime the transcript asserts beyond the deterministic
// Miller-Rabin range.  Certification failures downgrade to a disclosure,
// never to silence; a disproof would mean the engine asserted a composite
// as prime, which is fatal.
inline void certify_transcript(Transcript& t, const HintsDB& hints, const EffortPolicy& policy) {
    std::set<Natural> beyond;
    const Natural& bound = det_miller_rabin_bound();
    for (const ProofEvent& ev : t.events) {
        if (ev.kind != ProofEvent::Kind::assign) continue;
        if (ev.prime >= bound) beyond.insert(ev.prime);
        for (const FactorEntry& f : ev.factors)
            if (!f.residual && f.value >= bound) beyond.insert(f.value);
    }
    for (const Natural& p : beyond) {
        switch (certify_prime(p, hints, policy)) {
            case CertOutcome::proven: break;
            case CertOutcome::probable: t.probable_primes.push_back(p); break;
            case CertOutcome::composite:
                throw std::logic_error("certify_transcript: asserted prime is composite: " +
                                       p.get_str());
        }
    }
}

}  // namespace detail

// Proves Omega(N) >= K for every odd perfect N, K odd, 9 <= K <= 81.
//
// Assume Omega(N) <= K-1; since Omega(N) is odd (the special exponent is
// odd, all others even), Omega(N) <= B = K-2, so the exponents of N fit
// budget B.  Phase q = 3, 5, 7, 11 in turn assumes q | N and refutes every
// admissible chain, then marks q forbidden for the later phases.  With all
// four excluded, omega(N) >= 41 forces Omega(N) >= 2*41 - 1 = 81 > B — the
// capstone contradiction.  A factorization the effort policy cannot reach
// aborts the attempt with the wish-list instead (Transcript::wishes).
inline Transcript prove_min_omega(unsigned K, const HintsDB& hints, const EffortPolicy& policy,
                                  const ProveOptions& opts = {}) {
    if (K % 2 != 1 || K < 9 || K > 81)
        throw std::invalid_argument("prove_min_omega: K must be odd with 9 <= K <= 81");
    if (opts.jobs < 1) throw std::invalid_argument("prove_min_omega: jobs must be >= 1");
    if (opts.smallness_threshold < 3 || !opts.smallness_threshold.fits_uint_p())
        throw std::invalid_argument("prove_min_omega: smallness threshold out of range");

    Transcript t;
    t.K = K;
    t.B = K - 2;
    t.config_digest = detail::make_config_digest(K, hints, policy, opts.smallness_threshold);

    SearchContext ctx(hints, policy, opts);
    BranchState root;
    root.total_budget = t.B;
    try {
        for (unsigned long q : {3UL, 5UL, 7UL, 11UL}) {
            const Natural phase_prime(q);
            std::vector<ProofEvent> phase = detail::refute_exponents(
                root, phase_prime, candidate_exponents(root, phase_prime), 0, ctx);
            t.events.insert(t.events.end(), std::make_move_iterator(phase.begin()),
                            std::make_move_iterator(phase.end()));
            root.forbidden.insert(phase_prime);
        }
        t.complete = true;
    } catch (const StuckBranch& stuck) {
        t.wishes = stuck.wishes;
        t.complete = false;
    }

    if (t.complete && opts.certify) detail::certify_transcript(t, hints, policy);
    return t;
}

}  // namespace opn
