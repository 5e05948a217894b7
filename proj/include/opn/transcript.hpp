#pragma once

// Proof transcript: the event model, the indented text rendering, and the
// parser that reconstructs events from text.
//
// The text format is line-oriented and deterministic:
//   * "# "-prefixed header lines carry K, B, a config digest, the body line
//     count, factoring wishes (stuck runs), and primality disclosures;
//   * each body line is indented two spaces per depth level;
//   * assignment lines read "p^a  => f1 f2 ..." (exponent 1 renders bare,
//     prime-power factors render "p^k", unfactored composites "c_<digits>");
//   * a contradiction tag is appended to the line that triggered it;
//   * interval blocks bracket their tries with fixed sentences;
//   * a complete proof ends with a "# capstone: ..." line.

#include "opn/arith.hpp"
#include "opn/branch.hpp"

#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace opn {

struct FactorEntry {
    Natural value;                    // prime, or the residual composite (0 if unknown)
    unsigned multiplicity = 1;
    bool residual = false;
    std::size_t residual_digits = 0;  // decimal digits shown as "c_<digits>"
};

struct ProofEvent {
    enum class Kind { assign, contradiction, cs_begin, cs_try, cs_end, wish };
    Kind kind = Kind::assign;
    unsigned depth = 0;
    std::size_t line = 0;  // 1-based source line when parsed from text; 0 when engine-built

    Natural prime;         // assign: the assigned prime; cs_try: the tried prime;
                           // wish: the origin prime of the unfactored sigma
    unsigned exponent = 0; // assign / wish
    std::vector<FactorEntry> factors;  // assign: factorization of sigma(prime^exponent)

    Contradiction contra;  // contradiction events only
    Rational lower, upper; // cs_begin only
};

struct Transcript {
    unsigned K = 0;
    unsigned B = 0;
    std::string config_digest;
    std::vector<ProofEvent> events;
    bool complete = false;                      // capstone reached
    std::vector<StuckBranch::Wish> wishes;      // nonempty iff the run got stuck
    std::vector<Natural> probable_primes;       // certification disclosures
};

namespace detail {

inline std::string render_contradiction_tag(const Contradiction& c) {
    switch (c.kind) {
        case Contradiction::Kind::excess_prime: return "xs=" + c.prime.get_str();
        case Contradiction::Kind::excess_prime_count: return "xs=prime";
        case Contradiction::Kind::exponent_bounds: return "exponent bounds exceeded";
        case Contradiction::Kind::abundancy_excess: return "S=" + truncate_decimal(c.bound, 9);
        case Contradiction::Kind::omega_bound: return "violate omega bound";
    }
    throw std::logic_error("render_contradiction_tag: unknown kind");
}

inline std::string render_prime_power(const Natural& p, unsigned e) {
    return e == 1 ? p.get_str() : p.get_str() + "^" + std::to_string(e);
}

inline std::string render_factor(const FactorEntry& f) {
    if (f.residual) {
        std::size_t digits = f.residual_digits ? f.residual_digits : decimal_digits(f.value);
        return "c_" + std::to_string(digits);
    }
    return render_prime_power(f.value, f.multiplicity);
}

// The capstone sentence is pure threshold arithmetic and depends only on B.
inline std::string capstone_text(unsigned B) {
    return "3, 5, 7, 11 all excluded, so omega(N) >= 41 and Omega(N) >= 2*41 - 1 = 81 > B = " +
           std::to_string(B);
}

}  // namespace detail

// Renders only the body lines (no headers), one string per line.
inline std::vector<std::string> render_body(const std::vector<ProofEvent>& events) {
    std::vector<std::string> lines;
    lines.reserve(events.size());
    for (const ProofEvent& ev : events) {
        const std::string indent(2 * ev.depth, ' ');
        switch (ev.kind) {
            case ProofEvent::Kind::assign: {
                std::string line = indent + detail::render_prime_power(ev.prime, ev.exponent) +
                                   "  => ";
                for (std::size_t i = 0; i < ev.factors.size(); ++i) {
                    if (i) line += ' ';
                    line += detail::render_factor(ev.factors[i]);
                }
                lines.push_back(std::move(line));
                break;
            }
            case ProofEvent::Kind::contradiction:
                if (lines.empty()) throw std::logic_error("contradiction without a line");
                lines.back() += "  " + detail::render_contradiction_tag(ev.contra);
                break;
            case ProofEvent::Kind::cs_begin:
                lines.push_back(indent + "By Cohen/Sorli's argument, N has a prime factor between " +
                                render_bound(ev.lower) + " and " + render_bound(ev.upper));
                lines.push_back(indent + "Trying each one in turn");
                break;
            case ProofEvent::Kind::cs_try:
                lines.push_back(indent + "Next prime to try is " + ev.prime.get_str());
                break;
            case ProofEvent::Kind::cs_end:
                lines.push_back(indent + "Finished Cohen/Sorli's argument");
                break;
            case ProofEvent::Kind::wish:
                lines.push_back(indent + "It would be nice to know more factors of sigma(" +
                                detail::render_prime_power(ev.prime, ev.exponent) + ")");
                break;
        }
    }
    return lines;
}

// Full text of the transcript file.
inline std::string render(const Transcript& t) {
    std::vector<std::string> body = render_body(t.events);
    std::string out;
    out += "# omega lower bound proof transcript\n";
    out += "# K: " + std::to_string(t.K) + "\n";
    out += "# B: " + std::to_string(t.B) + "\n";
    out += "# config: " + t.config_digest + "\n";
    out += "# lines: " + std::to_string(body.size()) + "\n";
    for (const auto& w : t.wishes)
        out += "# WISH sigma(" + detail::render_prime_power(w.origin_prime, w.origin_exponent) +
               ")\n";
    for (const auto& p : t.probable_primes) out += "# probable-prime: " + p.get_str() + "\n";
    for (const auto& line : body) {
        out += line;
        out += '\n';
    }
    if (t.complete) out += "# capstone: " + detail::capstone_text(t.B) + "\n";
    return out;
}

// Number of body lines render would produce — the run's headline stat.
inline std::size_t rendered_line_count(const Transcript& t) {
    return render_body(t.events).size();
}

namespace detail {

struct ParseCursor {
    std::string_view text;
    std::size_t line_no = 0;

    [[noreturn]] void fail(const std::string& what) const {
        throw std::runtime_error("transcript line " + std::to_string(line_no) + ": " + what);
    }
};

inline bool all_digits(std::string_view s) {
    return !s.empty() && s.find_first_not_of("0123456789") == std::string_view::npos;
}

inline Natural parse_natural(ParseCursor& at, std::string_view token) {
    if (!all_digits(token)) at.fail("expected integer, got '" + std::string(token) + "'");
    if (token.size() > 1 && token.front() == '0')
        at.fail("integer with a leading zero: '" + std::string(token) + "'");
    return Natural(std::string(token), 10);
}

// "p" or "p^e" -> (p, e)
inline std::pair<Natural, unsigned> parse_prime_power(ParseCursor& at, std::string_view token) {
    auto caret = token.find('^');
    if (caret == std::string_view::npos) return {parse_natural(at, token), 1u};
    Natural p = parse_natural(at, token.substr(0, caret));
    Natural e = parse_natural(at, token.substr(caret + 1));
    if (e == 0 || e.fits_uint_p() == 0) at.fail("exponent out of range");
    return {std::move(p), static_cast<unsigned>(e.get_ui())};
}

// Decimal literal "12" / "3.5962" -> exact rational.
inline Rational parse_decimal(ParseCursor& at, std::string_view token) {
    auto dot = token.find('.');
    if (dot == std::string_view::npos) return Rational(parse_natural(at, token));
    Natural whole = parse_natural(at, token.substr(0, dot));
    std::string_view frac = token.substr(dot + 1);
    if (!all_digits(frac)) at.fail("bad decimal '" + std::string(token) + "'");
    Natural scale = pow_natural(10, static_cast<unsigned long>(frac.size()));
    // Base 10 explicitly: fraction parts keep their leading zeros.
    return make_rational(Natural(whole * scale + Natural(std::string(frac), 10)), scale);
}

inline Contradiction parse_tag(ParseCursor& at, std::string_view tag) {
    Contradiction c;
    if (tag == "xs=prime") {
        c.kind = Contradiction::Kind::excess_prime_count;
    } else if (tag.rfind("xs=", 0) == 0) {
        c.kind = Contradiction::Kind::excess_prime;
        c.prime = parse_natural(at, tag.substr(3));
    } else if (tag == "exponent bounds exceeded") {
        c.kind = Contradiction::Kind::exponent_bounds;
    } else if (tag == "violate omega bound") {
        c.kind = Contradiction::Kind::omega_bound;
    } else if (tag.rfind("S=", 0) == 0) {
        c.kind = Contradiction::Kind::abundancy_excess;
        c.bound = parse_decimal(at, tag.substr(2));
    } else {
        at.fail("unknown contradiction tag '" + std::string(tag) + "'");
    }
    return c;
}

}  // namespace detail

// Parses a rendered transcript back into its event structure.  Grammar
// errors carry the 1-based line number; semantic soundness is the
// verifier's concern, not the parser's.
inline Transcript parse_transcript(const std::string& text) {
    Transcript t;
    detail::ParseCursor at;
    bool saw_k = false, saw_b = false, saw_lines = false;
    std::size_t declared_lines = 0;
    bool pending_trying = false;  // cs_begin must be followed by its second line

    std::istringstream in(text);
    std::string raw;
    while (std::getline(in, raw)) {
        ++at.line_no;
        std::string_view line(raw);
        if (line.empty()) at.fail("blank line");

        if (line.rfind("# ", 0) == 0) {
            if (pending_trying) at.fail("expected 'Trying each one in turn'");
            std::string_view rest = line.substr(2);
            auto take = [&](std::string_view prefix) -> std::optional<std::string_view> {
                if (rest.rfind(prefix, 0) == 0) return rest.substr(prefix.size());
                return std::nullopt;
            };
            if (auto v = take("K: ")) {
                t.K = static_cast<unsigned>(detail::parse_natural(at, *v).get_ui());
                saw_k = true;
            } else if (auto v = take("B: ")) {
                t.B = static_cast<unsigned>(detail::parse_natural(at, *v).get_ui());
                saw_b = true;
            } else if (auto v = take("config: ")) {
                t.config_digest = std::string(*v);
            } else if (auto v = take("lines: ")) {
                declared_lines = static_cast<std::size_t>(detail::parse_natural(at, *v).get_ui());
                saw_lines = true;
            } else if (auto v = take("WISH sigma(")) {
                if (v->empty() || v->back() != ')') at.fail("malformed WISH header");
                auto [p, e] = detail::parse_prime_power(at, v->substr(0, v->size() - 1));
                t.wishes.push_back({std::move(p), e, Natural(0)});
            } else if (auto v = take("probable-prime: ")) {
                t.probable_primes.push_back(detail::parse_natural(at, *v));
            } else if (auto v = take("capstone: ")) {
                t.complete = true;
                if (*v != detail::capstone_text(t.B)) at.fail("capstone text mismatch");
            } else {
                // title or other informational header — ignored
            }
            continue;
        }

        // Body line: split indentation.
        std::size_t spaces = line.find_first_not_of(' ');
        if (spaces == std::string_view::npos) at.fail("blank line");
        if (spaces % 2 != 0) at.fail("odd indentation");
        const unsigned depth = static_cast<unsigned>(spaces / 2);
        std::string_view rest = line.substr(spaces);

        if (pending_trying) {
            if (rest != "Trying each one in turn" || depth != t.events.back().depth)
                at.fail("expected 'Trying each one in turn'");
            pending_trying = false;
            continue;
        }

        if (rest.rfind("By Cohen/Sorli's argument, N has a prime factor between ", 0) == 0) {
            std::string_view tail =
                rest.substr(std::string_view("By Cohen/Sorli's argument, N has a prime factor between ").size());
            auto sep = tail.find(" and ");
            if (sep == std::string_view::npos) at.fail("malformed interval line");
            ProofEvent ev;
            ev.kind = ProofEvent::Kind::cs_begin;
            ev.line = at.line_no;
            ev.depth = depth;
            ev.lower = detail::parse_decimal(at, tail.substr(0, sep));
            ev.upper = detail::parse_decimal(at, tail.substr(sep + 5));
            t.events.push_back(std::move(ev));
            pending_trying = true;
            continue;
        }
        if (rest.rfind("Next prime to try is ", 0) == 0) {
            ProofEvent ev;
            ev.kind = ProofEvent::Kind::cs_try;
            ev.line = at.line_no;
            ev.depth = depth;
            ev.prime = detail::parse_natural(at, rest.substr(std::string_view("Next prime to try is ").size()));
            t.events.push_back(std::move(ev));
            continue;
        }
        if (rest == "Finished Cohen/Sorli's argument") {
            ProofEvent ev;
            ev.kind = ProofEvent::Kind::cs_end;
            ev.line = at.line_no;
            ev.depth = depth;
            t.events.push_back(std::move(ev));
            continue;
        }
        if (rest.rfind("It would be nice to know more factors of sigma(", 0) == 0) {
            std::string_view tail =
                rest.substr(std::string_view("It would be nice to know more factors of sigma(").size());
            if (tail.empty() || tail.back() != ')') at.fail("malformed wish line");
            ProofEvent ev;
            ev.kind = ProofEvent::Kind::wish;
            ev.line = at.line_no;
            ev.depth = depth;
            auto [p, e] = detail::parse_prime_power(at, tail.substr(0, tail.size() - 1));
            ev.prime = std::move(p);
            ev.exponent = e;
            t.events.push_back(std::move(ev));
            continue;
        }

        // Assignment line: "p^a  => f1 f2 ...[  tag]".
        auto arrow = rest.find("  => ");
        if (arrow == std::string_view::npos) at.fail("unrecognized line");
        ProofEvent ev;
        ev.kind = ProofEvent::Kind::assign;
        ev.line = at.line_no;
        ev.depth = depth;
        {
            auto [p, e] = detail::parse_prime_power(at, rest.substr(0, arrow));
            ev.prime = std::move(p);
            ev.exponent = e;
        }
        std::string_view payload = rest.substr(arrow + 5);
        std::optional<std::string_view> tag;
        if (auto two = payload.find("  "); two != std::string_view::npos) {
            tag = payload.substr(two + 2);
            payload = payload.substr(0, two);
        }
        std::size_t pos = 0;
        while (pos < payload.size()) {
            auto space = payload.find(' ', pos);
            std::string_view token = payload.substr(pos, space == std::string_view::npos
                                                             ? std::string_view::npos
                                                             : space - pos);
            pos = space == std::string_view::npos ? payload.size() : space + 1;
            if (token.empty()) at.fail("empty factor token");
            FactorEntry f;
            if (token.rfind("c_", 0) == 0) {
                f.residual = true;
                f.value = 0;
                Natural d = detail::parse_natural(at, token.substr(2));
                f.residual_digits = static_cast<std::size_t>(d.get_ui());
            } else {
                auto [p, e] = detail::parse_prime_power(at, token);
                f.value = std::move(p);
                f.multiplicity = e;
            }
            ev.factors.push_back(std::move(f));
        }
        t.events.push_back(std::move(ev));
        if (tag) {
            ProofEvent cev;
            cev.kind = ProofEvent::Kind::contradiction;
            cev.line = at.line_no;
            cev.depth = depth;
            cev.contra = detail::parse_tag(at, *tag);
            t.events.push_back(std::move(cev));
        }
    }

    if (pending_trying) {
        ++at.line_no;
        at.fail("transcript ends inside an interval block");
    }
    if (!saw_k || !saw_b || !saw_lines) {
        ++at.line_no;
        at.fail("missing required headers (K, B, lines)");
    }
    const std::size_t actual = render_body(t.events).size();
    if (actual != declared_lines) {
        ++at.line_no;
        at.fail("declared line count " + std::to_string(declared_lines) + " but body has " +
                std::to_string(actual));
    }
    return t;
}

}  // namespace opn
