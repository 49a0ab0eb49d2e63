#include "mpgen/rational.hpp"

#include <cctype>
#include <cstdlib>
#include <numeric>

#include "mpgen/error.hpp"

namespace mpgen {

namespace {

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
    std::int64_t out;
    if (__builtin_mul_overflow(a, b, &out)) {
        fail(ErrorCode::invalid_config, "rational component overflow");
    }
    return out;
}

std::int64_t checked_add(std::int64_t a, std::int64_t b) {
    std::int64_t out;
    if (__builtin_add_overflow(a, b, &out)) {
        fail(ErrorCode::invalid_config, "rational component overflow");
    }
    return out;
}

}  // namespace

Rational::Rational(std::int64_t n, std::int64_t d) {
    if (d == 0) fail(ErrorCode::invalid_config, "rational with zero denominator");
    if (d < 0) {
        n = -n;
        d = -d;
    }
    const std::int64_t g = std::gcd(n < 0 ? -n : n, d);
    num = g == 0 ? 0 : n / g;
    den = g == 0 ? 1 : d / g;
}

Rational operator+(const Rational& a, const Rational& b) {
    return Rational(checked_add(checked_mul(a.num, b.den), checked_mul(b.num, a.den)),
                    checked_mul(a.den, b.den));
}

Rational operator-(const Rational& a, const Rational& b) {
    return Rational(
        checked_add(checked_mul(a.num, b.den), -checked_mul(b.num, a.den)),
        checked_mul(a.den, b.den));
}

Rational operator*(const Rational& a, const Rational& b) {
    return Rational(checked_mul(a.num, b.num), checked_mul(a.den, b.den));
}

Rational operator/(const Rational& a, const Rational& b) {
    if (b.num == 0) fail(ErrorCode::invalid_config, "division by zero");
    return Rational(checked_mul(a.num, b.den), checked_mul(a.den, b.num));
}

Rational pow_int(const Rational& base, int exponent) {
    if (exponent < 0) {
        fail(ErrorCode::invalid_config, "negative exponent not supported");
    }
    if (exponent == 0 && base.num == 0) {
        fail(ErrorCode::invalid_config, "0^0 is undefined");
    }
    Rational result = Rational::from_int(1);
    for (int i = 0; i < exponent; ++i) result = result * base;
    return result;
}

std::string to_string(const Rational& r) {
    if (r.den == 1) return std::to_string(r.num);
    // A denominator of the form 2^a · 5^b terminates in decimal.
    std::int64_t d = r.den;
    int twos = 0, fives = 0;
    while (d % 2 == 0) {
        d /= 2;
        ++twos;
    }
    while (d % 5 == 0) {
        d /= 5;
        ++fives;
    }
    if (d == 1) {
        const int places = twos > fives ? twos : fives;
        std::int64_t scale = 1;
        for (int i = 0; i < places; ++i) scale *= 10;
        std::int64_t scaled = r.num * (scale / r.den);
        const bool negative = scaled < 0;
        if (negative) scaled = -scaled;
        std::string digits = std::to_string(scaled);
        while (int(digits.size()) <= places) digits.insert(digits.begin(), '0');
        digits.insert(digits.size() - places, ".");
        return (negative ? "-" : "") + digits;
    }
    return std::to_string(r.num) + "/" + std::to_string(r.den);
}

Rational parse_rational(const std::string& text) {
    if (text.empty()) fail(ErrorCode::parse_error, "empty number");
    std::size_t pos = 0;
    std::int64_t sign = 1;
    if (text[pos] == '+' || text[pos] == '-') {
        if (text[pos] == '-') sign = -1;
        ++pos;
    }
    const auto digits_from = [&](std::size_t start) -> std::pair<std::int64_t, std::size_t> {
        std::size_t i = start;
        std::int64_t value = 0;
        while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
            value = value * 10 + (text[i] - '0');
            ++i;
        }
        if (i == start) fail(ErrorCode::parse_error, "expected digits in " + text);
        return {value, i};
    };
    auto [whole, next] = digits_from(pos);
    pos = next;
    if (pos == text.size()) return Rational(sign * whole, 1);
    if (text[pos] == '.') {
        auto [frac, after] = digits_from(pos + 1);
        if (after != text.size()) fail(ErrorCode::parse_error, "trailing text in " + text);
        std::int64_t scale = 1;
        for (std::size_t i = pos + 1; i < after; ++i) scale *= 10;
        return Rational(sign * (whole * scale + frac), scale);
    }
    if (text[pos] == '/') {
        auto [den, after] = digits_from(pos + 1);
        if (after != text.size()) fail(ErrorCode::parse_error, "trailing text in " + text);
        return Rational(sign * whole, den);
    }
    if (text[pos] == '%' && pos + 1 == text.size()) {
        return Rational(sign * whole, 100);
    }
    fail(ErrorCode::parse_error, "cannot parse number " + text);
}

}  // namespace mpgen
