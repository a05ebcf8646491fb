#pragma once

#include <array>
#include <cmath>
#include <cstddef>

#include "drt/vec.hpp"

namespace drt {

// Forward-mode scalar carrying K derivative lanes. The value component of
// every operation is written as the exact expression a plain double build
// would evaluate, so a render instantiated on Dual<K> reproduces the double
// render bit for bit (the build disables FMA contraction to keep it that way).
template <int K>
struct Dual {
    double v = 0.0;
    std::array<double, K> d{};

    Dual() = default;
    Dual(double value) : v(value) {}

    static Dual seeded(double value, int lane) {
        Dual r(value);
        r.d[std::size_t(lane)] = 1.0;
        return r;
    }

    Dual operator-() const {
        Dual r(-v);
        for (int i = 0; i < K; ++i) r.d[i] = -d[i];
        return r;
    }

    Dual& operator+=(const Dual& o) {
        v += o.v;
        for (int i = 0; i < K; ++i) d[i] += o.d[i];
        return *this;
    }
    Dual& operator-=(const Dual& o) {
        v -= o.v;
        for (int i = 0; i < K; ++i) d[i] -= o.d[i];
        return *this;
    }
    Dual& operator*=(const Dual& o) { return *this = *this * o; }

    friend Dual operator+(const Dual& a, const Dual& b) {
        Dual r(a.v + b.v);
        for (int i = 0; i < K; ++i) r.d[i] = a.d[i] + b.d[i];
        return r;
    }
    friend Dual operator-(const Dual& a, const Dual& b) {
        Dual r(a.v - b.v);
        for (int i = 0; i < K; ++i) r.d[i] = a.d[i] - b.d[i];
        return r;
    }
    friend Dual operator*(const Dual& a, const Dual& b) {
        Dual r(a.v * b.v);
        for (int i = 0; i < K; ++i) r.d[i] = a.d[i] * b.v + a.v * b.d[i];
        return r;
    }
    friend Dual operator/(const Dual& a, const Dual& b) {
        Dual r(a.v / b.v);
        const double inv2 = 1.0 / (b.v * b.v);
        for (int i = 0; i < K; ++i) r.d[i] = (a.d[i] * b.v - a.v * b.d[i]) * inv2;
        return r;
    }

    friend Dual operator+(const Dual& a, double b) { return a + Dual(b); }
    friend Dual operator+(double a, const Dual& b) { return Dual(a) + b; }
    friend Dual operator-(const Dual& a, double b) { return a - Dual(b); }
    friend Dual operator-(double a, const Dual& b) { return Dual(a) - b; }
    friend Dual operator*(const Dual& a, double b) {
        Dual r(a.v * b);
        for (int i = 0; i < K; ++i) r.d[i] = a.d[i] * b;
        return r;
    }
    friend Dual operator*(double a, const Dual& b) {
        Dual r(a * b.v);
        for (int i = 0; i < K; ++i) r.d[i] = a * b.d[i];
        return r;
    }
    friend Dual operator/(const Dual& a, double b) {
        Dual r(a.v / b);
        for (int i = 0; i < K; ++i) r.d[i] = a.d[i] / b;
        return r;
    }
    friend Dual operator/(double a, const Dual& b) { return Dual(a) / b; }
};

template <int K>
inline double detach(const Dual<K>& x) { return x.v; }

template <int K>
inline Dual<K> sqrt(const Dual<K>& a) {
    Dual<K> r(std::sqrt(a.v));
    // d sqrt = 1/(2 sqrt); derivative dropped at the non-differentiable origin
    const double s = r.v > 0.0 ? 0.5 / r.v : 0.0;
    for (int i = 0; i < K; ++i) r.d[i] = s * a.d[i];
    return r;
}

template <int K>
inline Dual<K> exp(const Dual<K>& a) {
    Dual<K> r(std::exp(a.v));
    for (int i = 0; i < K; ++i) r.d[i] = r.v * a.d[i];
    return r;
}

template <int K>
inline Dual<K> log(const Dual<K>& a) {
    Dual<K> r(std::log(a.v));
    const double s = 1.0 / a.v;
    for (int i = 0; i < K; ++i) r.d[i] = s * a.d[i];
    return r;
}

// pow with a differentiable base and exponent. Partial derivatives are
// dropped where they stop existing (base <= 0), matching the clamp
// semantics of the callers; the value always matches std::pow.
template <int K>
inline Dual<K> pow(const Dual<K>& a, const Dual<K>& b) {
    Dual<K> r(std::pow(a.v, b.v));
    if (a.v > 0.0) {
        const double da = b.v * std::pow(a.v, b.v - 1.0);
        const double db = r.v * std::log(a.v);
        for (int i = 0; i < K; ++i) r.d[i] = da * a.d[i] + db * b.d[i];
    }
    return r;
}

template <int K>
inline Dual<K> pow(const Dual<K>& a, double b) { return pow(a, Dual<K>(b)); }

template <int K>
inline Dual<K> abs(const Dual<K>& a) {
    Dual<K> r(std::abs(a.v));
    const double s = a.v < 0.0 ? -1.0 : 1.0;
    for (int i = 0; i < K; ++i) r.d[i] = s * a.d[i];
    return r;
}

// Pull std:: scalar functions into scope so templated code can call them
// unqualified on either scalar type.
using std::abs;
using std::exp;
using std::log;
using std::pow;
using std::sqrt;

}  // namespace drt
