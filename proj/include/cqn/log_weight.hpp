#pragma once

#include <cmath>
#include <limits>
#include <span>

namespace cqn {

// Nonnegative quantity stored as its natural log; -inf encodes zero.
struct LogWeight {
    double v = -std::numeric_limits<double>::infinity();

    static LogWeight zero() { return {}; }
    static LogWeight one() { return {0.0}; }
    static LogWeight from_linear(double x) {
        return {x > 0.0 ? std::log(x) : -std::numeric_limits<double>::infinity()};
    }
    double to_linear() const { return std::exp(v); }
    bool is_zero() const { return std::isinf(v) && v < 0; }

    LogWeight operator*(LogWeight o) const {
        if (is_zero() || o.is_zero()) return zero();
        return {v + o.v};
    }
    LogWeight operator/(LogWeight o) const { return {v - o.v}; }
};

// log(exp(a) + exp(b)) without overflow.
inline double log_add(double a, double b) {
    if (std::isinf(a) && a < 0) return b;
    if (std::isinf(b) && b < 0) return a;
    double hi = a > b ? a : b;
    double lo = a > b ? b : a;
    return hi + std::log1p(std::exp(lo - hi));
}

inline LogWeight operator+(LogWeight a, LogWeight b) { return {log_add(a.v, b.v)}; }

// log(sum exp(terms)) with Kahan-compensated accumulation of the mantissas.
inline double log_sum_exp(std::span<const double> terms) {
    double hi = -std::numeric_limits<double>::infinity();
    for (double t : terms)
        if (t > hi) hi = t;
    if (std::isinf(hi) && hi < 0) return hi;
    double sum = 0.0, comp = 0.0;
    for (double t : terms) {
        double y = std::exp(t - hi) - comp;
        double s = sum + y;
        comp = (s - sum) - y;
        sum = s;
    }
    return hi + std::log(sum);
}

}  // namespace cqn
