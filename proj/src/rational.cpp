#include "nwo/rational.hpp"

#include <stdexcept>

namespace nwo {

Rational::Rational(long num, long den) {
    if (den == 0) throw std::domain_error("rational with zero denominator");
    v_ = mpq_class(num, den);
    v_.canonicalize();
}

Rational Rational::operator/(const Rational& o) const {
    if (o.is_zero()) throw std::domain_error("rational division by zero");
    return Rational(mpq_class(v_ / o.v_));
}

namespace {

// "0" or "[1-9][0-9]*"
bool valid_magnitude(std::string_view s) {
    if (s.empty()) return false;
    if (s.size() > 1 && s[0] == '0') return false;
    for (char c : s)
        if (c < '0' || c > '9') return false;
    return true;
}

} // namespace

std::optional<Rational> Rational::parse(std::string_view text) {
    std::string_view num = text;
    std::string_view den;
    if (auto slash = text.find('/'); slash != std::string_view::npos) {
        num = text.substr(0, slash);
        den = text.substr(slash + 1);
    }
    bool negative = !num.empty() && num[0] == '-';
    std::string_view mag = negative ? num.substr(1) : num;
    if (!valid_magnitude(mag)) return std::nullopt;
    if (negative && mag == "0") return std::nullopt; // "-0"

    mpq_class v;
    if (den.empty()) {
        v = mpq_class(mpz_class(std::string(num), 10));
    } else {
        if (!valid_magnitude(den) || den == "0" || den == "1") return std::nullopt;
        if (mag == "0") return std::nullopt; // zero is canonical only as "0"
        mpz_class n(std::string(num), 10);
        mpz_class d(std::string(den), 10);
        mpz_class g;
        mpz_gcd(g.get_mpz_t(), n.get_mpz_t(), d.get_mpz_t());
        if (g != 1) return std::nullopt; // not in lowest terms
        v = mpq_class(n, d);
    }
    return from_mpq(std::move(v));
}

} // namespace nwo
