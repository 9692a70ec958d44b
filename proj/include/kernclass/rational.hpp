#pragma once

#include <cstdint>
#include <cstdlib>
#include <functional>
#include <numeric>
#include <string>
#include <string_view>

#include "kernclass/errors.hpp"

namespace kernclass {

// Exact rational arithmetic for note-values. Always normalized: gcd(num,den)=1,
// den > 0. Magnitudes stay tiny (fractions of whole notes), so int64 never
// gets close to overflow.
class Rational {
public:
    constexpr Rational() : num_(0), den_(1) {}
    Rational(std::int64_t num, std::int64_t den) : num_(num), den_(den) {
        if (den_ == 0) throw Error("rational with zero denominator");
        normalize();
    }
    explicit Rational(std::int64_t num) : num_(num), den_(1) {}

    // Accepts "num/den" or a bare integer "num".
    static Rational parse(std::string_view text);

    std::int64_t num() const { return num_; }
    std::int64_t den() const { return den_; }

    // Canonical form used in vocabulary and manifest files, always "num/den".
    std::string str() const { return std::to_string(num_) + "/" + std::to_string(den_); }

    double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

    Rational abs() const { return Rational(num_ < 0 ? -num_ : num_, den_); }

    friend Rational operator+(const Rational& a, const Rational& b) {
        return Rational(a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_);
    }
    friend Rational operator-(const Rational& a, const Rational& b) {
        return Rational(a.num_ * b.den_ - b.num_ * a.den_, a.den_ * b.den_);
    }
    friend Rational operator*(const Rational& a, const Rational& b) {
        return Rational(a.num_ * b.num_, a.den_ * b.den_);
    }
    friend Rational operator/(const Rational& a, const Rational& b) {
        if (b.num_ == 0) throw Error("rational division by zero");
        return Rational(a.num_ * b.den_, a.den_ * b.num_);
    }

    friend bool operator==(const Rational& a, const Rational& b) {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }
    friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }
    friend bool operator<(const Rational& a, const Rational& b) {
        return a.num_ * b.den_ < b.num_ * a.den_;
    }
    friend bool operator>(const Rational& a, const Rational& b) { return b < a; }
    friend bool operator<=(const Rational& a, const Rational& b) { return !(b < a); }
    friend bool operator>=(const Rational& a, const Rational& b) { return !(a < b); }

private:
    void normalize() {
        if (den_ < 0) {
            num_ = -num_;
            den_ = -den_;
        }
        std::int64_t g = std::gcd(num_ < 0 ? -num_ : num_, den_);
        if (g > 1) {
            num_ /= g;
            den_ /= g;
        }
        if (num_ == 0) den_ = 1;
    }

    std::int64_t num_;
    std::int64_t den_;
};

struct RationalHash {
    std::size_t operator()(const Rational& r) const {
        std::size_t h = std::hash<std::int64_t>{}(r.num());
        return h ^ (std::hash<std::int64_t>{}(r.den()) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
    }
};

inline Rational Rational::parse(std::string_view text) {
    auto slash = text.find('/');
    auto to_int = [&](std::string_view part) -> std::int64_t {
        if (part.empty()) throw Error("empty rational component in '" + std::string(text) + "'");
        std::size_t i = (part[0] == '-' || part[0] == '+') ? 1 : 0;
        if (i == part.size()) throw Error("malformed rational '" + std::string(text) + "'");
        std::int64_t value = 0;
        for (; i < part.size(); ++i) {
            if (part[i] < '0' || part[i] > '9')
                throw Error("malformed rational '" + std::string(text) + "'");
            value = value * 10 + (part[i] - '0');
        }
        return part[0] == '-' ? -value : value;
    };
    if (slash == std::string_view::npos) return Rational(to_int(text));
    return Rational(to_int(text.substr(0, slash)), to_int(text.substr(slash + 1)));
}

}  // namespace kernclass
