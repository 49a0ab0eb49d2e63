#pragma once

#include <cstdint>
#include <string>

namespace mpgen {

// Exact rational arithmetic on 64-bit components. Always stored normalized:
// gcd(|num|, den) = 1, den > 0, zero is 0/1. Construction and every
// operation renormalize, so equality is plain member comparison.
struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    Rational() = default;
    Rational(std::int64_t n, std::int64_t d);
    static Rational from_int(std::int64_t n) { return Rational(n, 1); }

    bool operator==(const Rational& o) const { return num == o.num && den == o.den; }
    bool operator!=(const Rational& o) const { return !(*this == o); }

    bool is_integer() const { return den == 1; }
};

Rational operator+(const Rational& a, const Rational& b);
Rational operator-(const Rational& a, const Rational& b);
Rational operator*(const Rational& a, const Rational& b);
// Throws InvalidConfig on division by zero.
Rational operator/(const Rational& a, const Rational& b);
// Non-negative integer exponents only; 0^0 rejected.
Rational pow_int(const Rational& base, int exponent);

// Canonical exact rendering: integers plain ("-3"), denominators dividing a
// power of ten as terminating decimals ("0.125"), everything else as a
// fraction ("2/3"). Round-trips through parse_rational.
std::string to_string(const Rational& r);

// Parses "<int>", "<int>.<digits>", "<int>/<int>" and "<int>%", with an
// optional leading sign. Throws ParseError otherwise.
Rational parse_rational(const std::string& text);

}  // namespace mpgen
