#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

namespace nwo {

// Arbitrary-precision rational, always in lowest terms with positive
// denominator. All arithmetic is exact; division by zero throws.
//
// Canonical text form is "p" when the denominator is 1 and "p/q" otherwise,
// which is exactly what mpq_get_str produces; parse() accepts only that form
// so that serialized files round-trip bit-exactly.
class Rational {
public:
    Rational() = default;
    Rational(long n) : v_(n) {}
    Rational(long num, long den);

    static Rational from_mpq(mpq_class q) {
        q.canonicalize();
        return Rational(std::move(q));
    }
    static std::optional<Rational> parse(std::string_view text);

    std::string str() const { return v_.get_str(); }

    Rational operator+(const Rational& o) const { return Rational(mpq_class(v_ + o.v_)); }
    Rational operator-(const Rational& o) const { return Rational(mpq_class(v_ - o.v_)); }
    Rational operator*(const Rational& o) const { return Rational(mpq_class(v_ * o.v_)); }
    Rational operator/(const Rational& o) const;
    Rational operator-() const { return Rational(mpq_class(-v_)); }

    Rational& operator+=(const Rational& o) { v_ += o.v_; return *this; }
    Rational& operator-=(const Rational& o) { v_ -= o.v_; return *this; }
    Rational& operator*=(const Rational& o) { v_ *= o.v_; return *this; }

    Rational abs() const { return sign() < 0 ? -*this : *this; }
    int sign() const { return sgn(v_); }
    bool is_zero() const { return sign() == 0; }

    bool operator==(const Rational& o) const { return v_ == o.v_; }
    bool operator!=(const Rational& o) const { return v_ != o.v_; }
    bool operator<(const Rational& o) const { return v_ < o.v_; }
    bool operator<=(const Rational& o) const { return v_ <= o.v_; }
    bool operator>(const Rational& o) const { return v_ > o.v_; }
    bool operator>=(const Rational& o) const { return v_ >= o.v_; }

    mpz_class numerator() const { return v_.get_num(); }
    mpz_class denominator() const { return v_.get_den(); }
    const mpq_class& raw() const { return v_; }

private:
    explicit Rational(mpq_class q) : v_(std::move(q)) {}
    mpq_class v_;
};

inline const Rational& rmin(const Rational& a, const Rational& b) { return a <= b ? a : b; }
inline const Rational& rmax(const Rational& a, const Rational& b) { return a >= b ? a : b; }

} // namespace nwo
