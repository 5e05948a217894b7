#include <catch2/catch_amalgamated.hpp>

#include <opn/transcript.hpp>

#include <string>

using opn::Contradiction;
using opn::FactorEntry;
using opn::Natural;
using opn::ProofEvent;
using opn::Rational;
using opn::Transcript;

namespace {

ProofEvent assign(unsigned depth, Natural p, unsigned e, std::vector<FactorEntry> factors) {
    ProofEvent ev;
    ev.kind = ProofEvent::Kind::assign;
    ev.depth = depth;
    ev.prime = std::move(p);
    ev.exponent = e;
    ev.factors = std::move(factors);
    return ev;
}

ProofEvent contradiction(unsigned depth, Contradiction c) {
    ProofEvent ev;
    ev.kind = ProofEvent::Kind::contradiction;
    ev.depth = depth;
    ev.contra = std::move(c);
    return ev;
}

FactorEntry prime_factor(Natural p, unsigned k = 1) { return {std::move(p), k, false, 0}; }

bool same_factor(const FactorEntry& a, const FactorEntry& b) {
    if (a.residual != b.residual) return false;
    if (a.residual) return a.residual_digits == b.residual_digits;
    return a.value == b.value && a.multiplicity == b.multiplicity;
}

}  // namespace

TEST_CASE("assignment lines render prime powers and factors") {
    Transcript t;
    t.events.push_back(assign(0, Natural(3), 6, {prime_factor(Natural(1093))}));
    const auto lines = opn::render_body(t.events);
    REQUIRE(lines.size() == 1);
    REQUIRE(lines[0] == "3^6  => 1093");
}

TEST_CASE("contradiction tags append to the triggering line") {
    std::vector<ProofEvent> events;
    events.push_back(assign(0, Natural(67), 2,
                            {prime_factor(Natural(3)), prime_factor(Natural(7), 2),
                             prime_factor(Natural(31))}));
    events.push_back(
        contradiction(0, {Contradiction::Kind::excess_prime, Natural(7), Rational()}));
    auto lines = opn::render_body(events);
    REQUIRE(lines.size() == 1);
    REQUIRE(lines[0] == "67^2  => 3 7^2 31  xs=7");

    events.clear();
    events.push_back(
        assign(0, Natural(19), 2, {prime_factor(Natural(3)), prime_factor(Natural(127))}));
    events.push_back(contradiction(
        0, {Contradiction::Kind::abundancy_excess, Natural(),
            opn::make_rational(Natural(2001549342), Natural(1000000000))}));
    lines = opn::render_body(events);
    REQUIRE(lines.size() == 1);
    REQUIRE(lines[0] == "19^2  => 3 127  S=2.001549342");

    events.clear();
    events.push_back(assign(1, Natural(5), 2, {prime_factor(Natural(31))}));
    events.push_back(contradiction(1, {Contradiction::Kind::excess_prime_count, {}, {}}));
    events.push_back(assign(0, Natural(5), 4, {prime_factor(Natural(11)), prime_factor(Natural(71))}));
    events.push_back(contradiction(0, {Contradiction::Kind::exponent_bounds, {}, {}}));
    lines = opn::render_body(events);
    REQUIRE(lines == std::vector<std::string>{"  5^2  => 31  xs=prime",
                                              "5^4  => 11 71  exponent bounds exceeded"});
}

TEST_CASE("unfactored composites render as digit-count placeholders") {
    // Placeholder width comes from the stored digit count, or is computed
    // from the value when the event carries one.
    std::vector<ProofEvent> events;
    FactorEntry residual{Natural(0), 1, true, 1775};
    events.push_back(assign(0, Natural(547), 18, {prime_factor(Natural(3)), residual}));
    auto lines = opn::render_body(events);
    REQUIRE(lines[0] == "547^18  => 3 c_1775");

    FactorEntry computed{opn::pow_natural(Natural(10), 1774), 1, true, 0};
    events.clear();
    events.push_back(assign(0, Natural(547), 18, {computed}));
    lines = opn::render_body(events);
    REQUIRE(lines[0] == "547^18  => c_1775");
}

TEST_CASE("interval blocks render their fixed sentences") {
    std::vector<ProofEvent> events;
    ProofEvent begin;
    begin.kind = ProofEvent::Kind::cs_begin;
    begin.depth = 2;
    begin.lower = opn::make_rational(1719, 478);
    begin.upper = opn::make_rational(1958, 239);
    events.push_back(begin);

    ProofEvent try5;
    try5.kind = ProofEvent::Kind::cs_try;
    try5.depth = 2;
    try5.prime = Natural(5);
    events.push_back(try5);

    ProofEvent end;
    end.kind = ProofEvent::Kind::cs_end;
    end.depth = 2;
    events.push_back(end);

    ProofEvent wish;
    wish.kind = ProofEvent::Kind::wish;
    wish.depth = 1;
    wish.prime = Natural(3);
    wish.exponent = 46;
    events.push_back(wish);

    REQUIRE(opn::render_body(events) ==
            std::vector<std::string>{
                "    By Cohen/Sorli's argument, N has a prime factor between 3.5962 and 8.1924",
                "    Trying each one in turn",
                "    Next prime to try is 5",
                "    Finished Cohen/Sorli's argument",
                "  It would be nice to know more factors of sigma(3^46)"});
}

TEST_CASE("bound endpoints render integers bare") {
    ProofEvent begin;
    begin.kind = ProofEvent::Kind::cs_begin;
    begin.lower = Rational(3);
    begin.upper = Rational(18);
    REQUIRE(opn::render_body({begin})[0] ==
            "By Cohen/Sorli's argument, N has a prime factor between 3 and 18");
}

namespace {

// A transcript exercising every event kind, every header, and both endpoint
// renderings, shaped the way the engine emits them (tags only on
// assignment lines).
Transcript full_fixture() {
    Transcript t;
    t.K = 23;
    t.B = 21;
    t.config_digest = "00ff00ff00ff00ff";
    t.complete = true;
    t.wishes.push_back({Natural(3), 46, Natural(0)});
    t.probable_primes.push_back(
        Natural("19256021298645399074821884828797791764310604858317"));

    t.events.push_back(assign(0, Natural(3), 2, {prime_factor(Natural(13))}));
    t.events.push_back(assign(1, Natural(13), 1,
                              {prime_factor(Natural(2)), prime_factor(Natural(7))}));
    t.events.push_back(
        contradiction(1, {Contradiction::Kind::excess_prime, Natural(7), Rational()}));
    {
        ProofEvent wish;
        wish.kind = ProofEvent::Kind::wish;
        wish.depth = 1;
        wish.prime = Natural(3);
        wish.exponent = 46;
        t.events.push_back(wish);
    }
    {
        ProofEvent begin;
        begin.kind = ProofEvent::Kind::cs_begin;
        begin.depth = 1;
        begin.lower = opn::make_rational(1719, 478);
        begin.upper = opn::make_rational(1958, 239);
        t.events.push_back(begin);
    }
    {
        ProofEvent try5;
        try5.kind = ProofEvent::Kind::cs_try;
        try5.depth = 1;
        try5.prime = Natural(5);
        t.events.push_back(try5);
    }
    t.events.push_back(assign(2, Natural(5), 2, {prime_factor(Natural(31))}));
    t.events.push_back(contradiction(
        2, {Contradiction::Kind::abundancy_excess, Natural(),
            opn::make_rational(Natural(209664), Natural(90089))}));
    {
        ProofEvent try7;
        try7.kind = ProofEvent::Kind::cs_try;
        try7.depth = 1;
        try7.prime = Natural(7);
        t.events.push_back(try7);
    }
    t.events.push_back(assign(
        2, Natural(7), 2, {prime_factor(Natural(3)), FactorEntry{Natural(0), 1, true, 39}}));
    t.events.push_back(contradiction(2, {Contradiction::Kind::omega_bound, {}, {}}));
    {
        ProofEvent end;
        end.kind = ProofEvent::Kind::cs_end;
        end.depth = 1;
        t.events.push_back(end);
    }
    return t;
}

}  // namespace

TEST_CASE("rendered transcripts parse back to the same structure") {
    const Transcript t = full_fixture();
    const std::string text = opn::render(t);
    const Transcript parsed = opn::parse_transcript(text);

    REQUIRE(parsed.K == t.K);
    REQUIRE(parsed.B == t.B);
    REQUIRE(parsed.config_digest == t.config_digest);
    REQUIRE(parsed.complete == t.complete);
    REQUIRE(parsed.wishes.size() == 1);
    REQUIRE(parsed.wishes[0].origin_prime == 3);
    REQUIRE(parsed.wishes[0].origin_exponent == 46);
    REQUIRE(parsed.probable_primes == t.probable_primes);

    REQUIRE(parsed.events.size() == t.events.size());
    for (std::size_t i = 0; i < t.events.size(); ++i) {
        INFO("event " << i);
        const ProofEvent& a = t.events[i];
        const ProofEvent& b = parsed.events[i];
        REQUIRE(a.kind == b.kind);
        REQUIRE(a.depth == b.depth);
        REQUIRE(b.line > 0);  // parsed events carry their source line
        if (a.kind == ProofEvent::Kind::assign) {
            REQUIRE(a.prime == b.prime);
            REQUIRE(a.exponent == b.exponent);
            REQUIRE(a.factors.size() == b.factors.size());
            for (std::size_t j = 0; j < a.factors.size(); ++j) {
                INFO("factor " << j);
                // Parsed residual entries know only the digit count.
                FactorEntry expect = a.factors[j];
                if (expect.residual) expect.value = 0;
                REQUIRE(same_factor(expect, b.factors[j]));
            }
        }
        if (a.kind == ProofEvent::Kind::contradiction)
            REQUIRE(a.contra.kind == b.contra.kind);
        if (a.kind == ProofEvent::Kind::cs_try) REQUIRE(a.prime == b.prime);
        if (a.kind == ProofEvent::Kind::wish) {
            REQUIRE(a.prime == b.prime);
            REQUIRE(a.exponent == b.exponent);
        }
        if (a.kind == ProofEvent::Kind::cs_begin) {
            // Endpoints round-trip through their display form.
            REQUIRE(opn::render_bound(a.lower) == opn::render_bound(b.lower));
            REQUIRE(opn::render_bound(a.upper) == opn::render_bound(b.upper));
        }
    }

    // The rendered text is a fixpoint: parse and re-render reproduces it.
    REQUIRE(opn::render(parsed) == text);
}

TEST_CASE("line accounting matches the body") {
    const Transcript t = full_fixture();
    // assign x4 and cs_try x2 (one line each), contradiction x3 (no line of
    // their own), cs_begin (two lines), cs_end and wish (one each).
    REQUIRE(opn::rendered_line_count(t) == 4 + 2 + 2 + 1 + 1);
    const std::string text = opn::render(t);
    const std::string needle = "# lines: 10\n";
    REQUIRE(text.find(needle) != std::string::npos);
}

TEST_CASE("incomplete transcripts carry wishes instead of a capstone") {
    Transcript t;
    t.K = 75;
    t.B = 73;
    t.config_digest = "deadbeefdeadbeef";
    t.complete = false;
    t.wishes.push_back({Natural(547), 18, Natural(123)});
    t.wishes.push_back({Natural(3221), 12, Natural(456)});
    t.events.push_back(assign(0, Natural(3), 2, {prime_factor(Natural(13))}));

    const std::string text = opn::render(t);
    REQUIRE(text.find("# WISH sigma(547^18)\n") != std::string::npos);
    REQUIRE(text.find("# WISH sigma(3221^12)\n") != std::string::npos);
    REQUIRE(text.find("# capstone") == std::string::npos);

    const Transcript parsed = opn::parse_transcript(text);
    REQUIRE(!parsed.complete);
    REQUIRE(parsed.wishes.size() == 2);
    REQUIRE(parsed.wishes[1].origin_prime == 3221);
    REQUIRE(parsed.wishes[1].origin_exponent == 12);
}

namespace {

void expect_parse_error(const std::string& text, const std::string& needle) {
    try {
        opn::parse_transcript(text);
        FAIL("expected parse error containing '" << needle << "'");
    } catch (const std::runtime_error& e) {
        INFO(std::string("error was: ") + e.what());
        REQUIRE(std::string(e.what()).find(needle) != std::string::npos);
    }
}

}  // namespace

TEST_CASE("parse errors carry line numbers") {
    expect_parse_error("", "transcript line 1: missing required headers");
    expect_parse_error("garbage\n", "transcript line 1: unrecognized line");
    expect_parse_error("# K: 9\n# B: 7\n# lines: 0\n\n", "transcript line 4: blank");
    expect_parse_error("# K: 9\n# B: 7\n# lines: 1\n 3^2  => 13\n",
                       "transcript line 4: odd indentation");
    expect_parse_error("# K: 9\n# B: 7\n# lines: 1\n3^2  => 13  zs=7\n",
                       "transcript line 4: unknown contradiction tag");
    expect_parse_error("# K: 9\n# B: 7\n# lines: 1\nNext prime to try is 5  xs=3\n",
                       "transcript line 4");
    // declared count disagrees with the body
    expect_parse_error("# K: 9\n# B: 7\n# lines: 3\n3^2  => 13\n",
                       "declared line count 3 but body has 1");
    // headers missing entirely
    expect_parse_error("# B: 7\n# lines: 0\n", "missing required headers");
    // capstone must restate B's arithmetic exactly
    expect_parse_error(
        "# K: 9\n# B: 7\n# lines: 0\n# capstone: 3, 5, 7, 11 all excluded, so omega(N) >= 41 "
        "and Omega(N) >= 2*41 - 1 = 81 > B = 8\n",
        "capstone text mismatch");
}

TEST_CASE("interval blocks must be complete in the text") {
    const std::string base = "# K: 9\n# B: 7\n# lines: 2\n";
    expect_parse_error(
        base + "By Cohen/Sorli's argument, N has a prime factor between 3 and 18\n",
        "ends inside an interval block");
    expect_parse_error(base +
                           "By Cohen/Sorli's argument, N has a prime factor between 3 and 18\n"
                           "Next prime to try is 5\n",
                       "expected 'Trying each one in turn'");
}

TEST_CASE("the title header is tolerated and ignored") {
    const std::string text =
        "# omega lower bound proof transcript\n"
        "# K: 9\n"
        "# B: 7\n"
        "# config: 0123456789abcdef\n"
        "# lines: 1\n"
        "3^6  => 1093\n";
    const Transcript t = opn::parse_transcript(text);
    REQUIRE(t.K == 9);
    REQUIRE(t.events.size() == 1);
    REQUIRE(t.events[0].line == 6);
}
