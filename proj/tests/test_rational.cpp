#include <cstdint>
#include <limits>

#include "doctest.h"
#include "hkl/rational.hpp"

using hkl::Rational;

TEST_CASE("rational arithmetic reduces") {
    Rational a(6, -8);
    CHECK(a.num() == -3);
    CHECK(a.den() == 4);
    CHECK(Rational(1, 6) + Rational(1, 6) == Rational(1, 3));
    CHECK(Rational(1, 2) + Rational(1, 18) == Rational(5, 9));
    CHECK(Rational(3, 4) * Rational(8, 9) == Rational(2, 3));
    CHECK(Rational(3, 4) / Rational(3, 8) == Rational(2));
    CHECK(Rational(0, 5) == Rational(0));
    CHECK(Rational(1, 3) < Rational(1, 2));
    CHECK(hkl::pow(Rational(-2, 3), 3) == Rational(-8, 27));
}

TEST_CASE("rational parse") {
    CHECK(Rational::parse("-7/21") == Rational(-1, 3));
    CHECK(Rational::parse("12") == Rational(12));
    CHECK_THROWS_AS(Rational::parse("1.5"), std::invalid_argument);
    CHECK_THROWS_AS(Rational::parse("1/x"), std::invalid_argument);
    CHECK_THROWS_AS(Rational(1, 0), std::domain_error);
}

TEST_CASE("rational overflow is reported") {
    Rational big(std::numeric_limits<std::int64_t>::max() / 2);
    CHECK_THROWS_AS(big * Rational(4), hkl::RationalOverflow);
    CHECK_THROWS_AS(hkl::pow(Rational(3), 60), hkl::RationalOverflow);
    CHECK_THROWS_AS(Rational(1, 4000000000) + Rational(1, 3999999999), hkl::RationalOverflow);
}
