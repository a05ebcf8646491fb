#pragma once

#include <cmath>
#include <type_traits>

#include "drt/vec.hpp"

namespace drt {

// Linear RGB radiometric triple (radiance, reflectance, intensity, ...).
template <class S>
struct Spec3 {
    S r{}, g{}, b{};

    Spec3() = default;
    Spec3(S r_, S g_, S b_) : r(r_), g(g_), b(b_) {}
    explicit Spec3(S v) : r(v), g(v), b(v) {}

    template <class T, class = std::enable_if_t<!std::is_same_v<T, S>>>
    explicit Spec3(const Spec3<T>& o) : r(S(o.r)), g(S(o.g)), b(S(o.b)) {}

    S& operator[](int i) { return i == 0 ? r : (i == 1 ? g : b); }
    const S& operator[](int i) const { return i == 0 ? r : (i == 1 ? g : b); }

    Spec3& operator+=(const Spec3& o) {
        r += o.r;
        g += o.g;
        b += o.b;
        return *this;
    }
};

using Spectrum = Spec3<double>;

template <class A, class B>
inline Spec3<Promote<A, B>> operator+(const Spec3<A>& a, const Spec3<B>& b) {
    return {a.r + b.r, a.g + b.g, a.b + b.b};
}
template <class A, class B>
inline Spec3<Promote<A, B>> operator-(const Spec3<A>& a, const Spec3<B>& b) {
    return {a.r - b.r, a.g - b.g, a.b - b.b};
}
template <class A, class B>
inline Spec3<Promote<A, B>> operator*(const Spec3<A>& a, const Spec3<B>& b) {
    return {a.r * b.r, a.g * b.g, a.b * b.b};
}
template <class A, class B>
inline Spec3<Promote<A, B>> operator*(const Spec3<A>& a, const B& s) {
    return {a.r * s, a.g * s, a.b * s};
}
template <class A, class B>
inline Spec3<Promote<A, B>> operator*(const A& s, const Spec3<B>& a) {
    return {s * a.r, s * a.g, s * a.b};
}
template <class A, class B>
inline Spec3<Promote<A, B>> operator/(const Spec3<A>& a, const B& s) {
    return {a.r / s, a.g / s, a.b / s};
}

inline double channel_mean(const Spectrum& s) { return (s.r + s.g + s.b) / 3.0; }

inline double max_channel(const Spectrum& s) {
    return std::max(s.r, std::max(s.g, s.b));
}

inline bool is_finite(const Spectrum& s) {
    return std::isfinite(s.r) && std::isfinite(s.g) && std::isfinite(s.b);
}

inline bool is_black(const Spectrum& s) { return s.r == 0.0 && s.g == 0.0 && s.b == 0.0; }

}  // namespace drt
