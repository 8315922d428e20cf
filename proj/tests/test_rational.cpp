#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "nwo/rational.hpp"
#include "nwo/rng.hpp"

using nwo::Rational;

TEST_CASE("canonical parsing accepts p and p/q forms") {
    CHECK(Rational::parse("0")->str() == "0");
    CHECK(Rational::parse("-7")->str() == "-7");
    CHECK(Rational::parse("3/10")->str() == "3/10");
    CHECK(Rational::parse("-5/2")->str() == "-5/2");
    CHECK(Rational::parse("123456789012345678901234567890/11")->str() ==
          "123456789012345678901234567890/11");
    CHECK(!Rational::parse("123456789012345678901234567890/7")); // divisible by 7
}

TEST_CASE("non-canonical forms are rejected") {
    CHECK(!Rational::parse(""));
    CHECK(!Rational::parse("2/4"));   // not lowest terms
    CHECK(!Rational::parse("4/1"));   // denominator 1 must be omitted
    CHECK(!Rational::parse("-0"));
    CHECK(!Rational::parse("0/3"));
    CHECK(!Rational::parse("01"));
    CHECK(!Rational::parse("1/-2"));
    CHECK(!Rational::parse("1/0"));
    CHECK(!Rational::parse("1.5"));
    CHECK(!Rational::parse(" 1"));
}

TEST_CASE("arithmetic is exact and canonical") {
    const Rational a(1, 3), b(1, 6);
    CHECK((a + b).str() == "1/2");
    CHECK((a - b).str() == "1/6");
    CHECK((a * b).str() == "1/18");
    CHECK((a / b).str() == "2");
    CHECK((-a).str() == "-1/3");
    CHECK(Rational(-2, 4).str() == "-1/2");
    CHECK(Rational(3, -6).str() == "-1/2");
    CHECK_THROWS_AS(a / Rational(0), std::domain_error);
}

TEST_CASE("ordering and round trips") {
    CHECK(Rational(1, 3) < Rational(1, 2));
    CHECK(Rational(-1, 2) < Rational(-1, 3));
    CHECK(Rational(2, 4) == Rational(1, 2));
    // str -> parse -> str is the identity on a seeded sample.
    nwo::SplitMix64 rng(7);
    for (int i = 0; i < 200; ++i) {
        const long num = static_cast<long>(rng.bounded(2000001)) - 1000000;
        const long den = static_cast<long>(rng.bounded(999)) + 1;
        const Rational r(num, den);
        CHECK(Rational::parse(r.str()).value() == r);
    }
}

TEST_CASE("jitter stays within half the bound") {
    nwo::SplitMix64 rng(42);
    const Rational bound(1, 10);
    for (int i = 0; i < 500; ++i) {
        const Rational j = nwo::jitter(rng, bound);
        CHECK(j.abs() <= bound / Rational(2));
    }
}

TEST_CASE("sample_in stays inside the interval") {
    nwo::SplitMix64 rng(43);
    const Rational lo(-2), hi(3, 2);
    for (int i = 0; i < 500; ++i) {
        const Rational s = nwo::sample_in(rng, lo, hi);
        CHECK(lo <= s);
        CHECK(s < hi);
    }
}
