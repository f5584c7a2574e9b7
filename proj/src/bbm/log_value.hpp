#pragma once

#include <cmath>
#include <limits>
#include <span>

namespace bbm {

/// sign * exp(log_magnitude), with an exact zero. Sums go through log-sum-exp so that Gibbs
/// weights like e^{beta X - psi t} never overflow.
class LogValue {
public:
    constexpr LogValue() = default;

    static LogValue from_log(double log_magnitude, int sign = 1) noexcept {
        LogValue v;
        if (sign == 0 || log_magnitude == -std::numeric_limits<double>::infinity()) return v;
        v.log_ = log_magnitude;
        v.sign_ = sign > 0 ? 1 : -1;
        return v;
    }
    static LogValue from_double(double x) noexcept {
        if (x == 0.0) return {};
        return from_log(std::log(std::abs(x)), x > 0 ? 1 : -1);
    }
    static LogValue zero() noexcept { return {}; }
    static LogValue one() noexcept { return from_log(0.0); }

    double log_magnitude() const noexcept {
        return sign_ == 0 ? -std::numeric_limits<double>::infinity() : log_;
    }
    int sign() const noexcept { return sign_; }
    bool is_zero() const noexcept { return sign_ == 0; }
    double value() const noexcept { return sign_ == 0 ? 0.0 : sign_ * std::exp(log_); }

    friend LogValue operator*(LogValue a, LogValue b) noexcept {
        return from_log(a.log_ + b.log_, a.sign_ * b.sign_);
    }
    friend LogValue operator/(LogValue a, LogValue b) noexcept {
        return from_log(a.log_ - b.log_, a.sign_ * b.sign_);
    }
    friend LogValue operator+(LogValue a, LogValue b) noexcept {
        if (a.sign_ == 0) return b;
        if (b.sign_ == 0) return a;
        if (a.log_ < b.log_) std::swap(a, b);
        const double r = std::exp(b.log_ - a.log_);
        if (a.sign_ == b.sign_) return from_log(a.log_ + std::log1p(r), a.sign_);
        if (r == 1.0) return {};
        return from_log(a.log_ + std::log1p(-r), a.sign_);
    }
    friend LogValue operator-(LogValue a, LogValue b) noexcept {
        b.sign_ = -b.sign_;
        return a + b;
    }
    LogValue& operator+=(LogValue b) noexcept { return *this = *this + b; }
    LogValue pow(double p) const noexcept { return from_log(p * log_, sign_ == 0 ? 0 : 1); }

private:
    double log_ = 0.0;
    int sign_ = 0;
};

/// log(sum_i exp(terms[i])) with a single max-shift pass; -inf for an empty input.
inline double log_sum_exp(std::span<const double> terms) noexcept {
    double m = -std::numeric_limits<double>::infinity();
    for (double x : terms) m = x > m ? x : m;
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : terms) s += std::exp(x - m);
    return m + std::log(s);
}

}  // namespace bbm
