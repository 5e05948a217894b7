#include <catch2/catch_amalgamated.hpp>

#include <opn/certify.hpp>
#include <opn/factor.hpp>
#include <opn/primality.hpp>

using opn::CertOutcome;
using opn::Natural;
using opn::PrimalityTier;

namespace {

// Independent oracle: primality by trial division.
bool naive_is_prime(unsigned long n) {
    if (n < 2) return false;
    for (unsigned long d = 2; d * d <= n; ++d)
        if (n % d == 0) return false;
    return true;
}

}  // namespace

TEST_CASE("classification agrees with trial division on small ranges") {
    for (unsigned long n = 0; n <= 20000; ++n) {
        const bool expect = naive_is_prime(n);
        INFO("n = " << n);
        REQUIRE(opn::is_prime(Natural(n)) == expect);
        if (expect) REQUIRE(opn::classify_prime(Natural(n)) == PrimalityTier::deterministic);
    }
    for (unsigned long n = 1000000; n <= 1002000; ++n) {
        INFO("n = " << n);
        REQUIRE(opn::is_prime(Natural(n)) == naive_is_prime(n));
    }
}

TEST_CASE("Carmichael numbers are rejected") {
    for (unsigned long c : {561ul, 1105ul, 1729ul, 41041ul, 825265ul, 321197185ul})
        REQUIRE(opn::classify_prime(Natural(c)) == PrimalityTier::composite);
}

TEST_CASE("Mersenne primes across the tier boundary") {
    // 2^61 - 1 sits below the deterministic Miller-Rabin cutoff, the larger
    // two above it (so they come back as probable, pending certification).
    const Natural m61 = opn::pow_natural(Natural(2), 61) - 1;
    const Natural m89 = opn::pow_natural(Natural(2), 89) - 1;
    const Natural m127 = opn::pow_natural(Natural(2), 127) - 1;
    REQUIRE(m61 == Natural("2305843009213693951"));
    REQUIRE(opn::classify_prime(m61) == PrimalityTier::deterministic);
    REQUIRE(opn::classify_prime(m89) == PrimalityTier::probable);
    REQUIRE(opn::classify_prime(m127) == PrimalityTier::probable);
}

TEST_CASE("the deterministic cutoff itself is composite") {
    // The cutoff is the smallest strong pseudoprime to the thirteen bases
    // used below it, so it must fall through to BPSW and be caught there.
    const Natural& bound = opn::det_miller_rabin_bound();
    REQUIRE(opn::classify_prime(bound) == PrimalityTier::composite);
    REQUIRE(opn::classify_prime(Natural("1287836182261")) == PrimalityTier::deterministic);
    REQUIRE(opn::classify_prime(Natural("2575672364521")) == PrimalityTier::deterministic);
    REQUIRE(Natural("1287836182261") * Natural("2575672364521") == bound);
}

TEST_CASE("large semiprimes are composite in every tier") {
    // Below the cutoff: product of two 16-digit primes.
    REQUIRE(opn::classify_prime(Natural("1000000000000037") * Natural("1000000000000091")) ==
            PrimalityTier::composite);
    // Above the cutoff, perfect square (exercises the square screen).
    const Natural sq = Natural("10000000000099") * Natural("10000000000099");
    REQUIRE(sq == Natural("100000000001980000000009801"));
    REQUIRE(opn::classify_prime(sq) == PrimalityTier::composite);
    // Above the cutoff, not a square.
    REQUIRE(opn::classify_prime(Natural("10000000000129") * Natural("10000000000267")) ==
            PrimalityTier::composite);
    // Product of two 20-digit primes.
    REQUIRE(opn::classify_prime(Natural("10000000000000000051") *
                                Natural("10000000000000000087")) == PrimalityTier::composite);
}

TEST_CASE("prime table is a correct sieve snapshot") {
    auto table = opn::prime_table(100000);
    std::size_t below_1e5 = 0;
    for (std::uint32_t p : *table)
        if (p <= 100000) ++below_1e5;
    REQUIRE(below_1e5 == 9592);
    REQUIRE(table->front() == 2);
    REQUIRE((*table)[1] == 3);
    REQUIRE((*table)[9591] == 99991);
    for (std::size_t i = 0; i < 200; ++i) REQUIRE(naive_is_prime((*table)[i]));
    // Growing the table keeps earlier entries intact.
    auto bigger = opn::prime_table(200000);
    REQUIRE(bigger->size() > table->size());
    for (std::size_t i = 0; i < table->size(); ++i) REQUIRE((*bigger)[i] == (*table)[i]);
}

TEST_CASE("certification proves a 50-digit prime via its factored n-1") {
    // n - 1 factors completely within default effort (largest piece is a
    // 13-digit prime), so the proof succeeds without hints.
    const Natural p50("19256021298645399074821884828797791764310604858317");
    REQUIRE(opn::classify_prime(p50) == PrimalityTier::probable);
    opn::HintsDB hints;
    opn::EffortPolicy policy;
    REQUIRE(opn::certify_prime(p50, hints, policy) == CertOutcome::proven);
}

TEST_CASE("certification proves a Mersenne prime above the cutoff") {
    // 2^89 - 1: n - 1 = 2 * (2^88 - ... ) has smooth-enough structure for
    // the default pipeline.  The point is that proven beats probable when
    // the factoring succeeds.
    const Natural m89 = opn::pow_natural(Natural(2), 89) - 1;
    opn::HintsDB hints;
    opn::EffortPolicy policy;
    const CertOutcome outcome = opn::certify_prime(m89, hints, policy);
    REQUIRE(outcome != CertOutcome::composite);
}

TEST_CASE("certification reports composite for composites") {
    opn::HintsDB hints;
    opn::EffortPolicy policy;
    const Natural semi = Natural("10000000000000000051") * Natural("10000000000000000087");
    REQUIRE(opn::certify_prime(semi, hints, policy) == CertOutcome::composite);
}

TEST_CASE("certification degrades to probable when n-1 resists factoring") {
    // n = 2qr + 1 with 31-digit primes q, r: the factored part of n - 1
    // stays at 2, far below the strength a proof needs, and the rho budget
    // cannot split qr.  The honest answer is probable, never proven.
    const Natural hard(
        "4000000000000000000000000024450000000000000000000000002381347");
    const Natural q("1000000000000000000000000000099");
    const Natural r("2000000000000000000000000012027");
    REQUIRE(2 * q * r + 1 == hard);
    REQUIRE(opn::classify_prime(hard) == PrimalityTier::probable);
    opn::HintsDB hints;
    opn::EffortPolicy policy;
    REQUIRE(opn::certify_prime(hard, hints, policy) == CertOutcome::probable);
}

TEST_CASE("a hint for n-1 flips certification from probable to proven") {
    // Here the halves of n - 1 are 20-digit primes: far beyond rho's reach,
    // but instantly provable once a hint names one of them.
    const Natural a("10000000000000001347");
    const Natural b("10000000000000001393");
    const Natural n("200000000000000054800000000000003752743");
    REQUIRE(2 * a * b + 1 == n);
    REQUIRE(opn::classify_prime(n) == PrimalityTier::probable);

    opn::HintsDB hints;
    opn::EffortPolicy policy;
    REQUIRE(opn::certify_prime(n, hints, policy) == CertOutcome::probable);
    hints.entries[n - 1] = {a};
    REQUIRE(opn::certify_prime(n, hints, policy) == CertOutcome::proven);
}
