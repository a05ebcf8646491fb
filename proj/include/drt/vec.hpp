#pragma once

#include <cmath>
#include <type_traits>

namespace drt {

constexpr double kPi = 3.14159265358979323846;

// Identity on plain scalars; the Dual overload (drt/dual.hpp) drops the
// derivative lanes. Calling detach() is how templated rendering code marks a
// quantity as excluded from differentiation.
inline double detach(double x) { return x; }

// 2D/3D vectors templated on the scalar type so that the same geometry code
// runs on plain doubles and on derivative-carrying scalars (drt/dual.hpp).
// Mixed-scalar operations promote to whichever side carries derivatives.

template <class A, class B>
using Promote = decltype(std::declval<A>() * std::declval<B>());

template <class S>
struct Vec2 {
    S x{}, y{};
    Vec2() = default;
    Vec2(S x_, S y_) : x(x_), y(y_) {}
};

using Vec2d = Vec2<double>;

template <class S>
struct Vec3 {
    S x{}, y{}, z{};

    Vec3() = default;
    Vec3(S x_, S y_, S z_) : x(x_), y(y_), z(z_) {}
    explicit Vec3(S v) : x(v), y(v), z(v) {}

    // Promoting conversion (e.g. Vec3<double> -> Vec3<Dual>): the result
    // carries no derivatives, which is exactly what a detached input means.
    template <class T, class = std::enable_if_t<!std::is_same_v<T, S>>>
    explicit Vec3(const Vec3<T>& o) : x(S(o.x)), y(S(o.y)), z(S(o.z)) {}

    S& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
    const S& operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

    Vec3 operator-() const { return {-x, -y, -z}; }
};

using Vec3d = Vec3<double>;

template <class A, class B>
inline Vec3<Promote<A, B>> operator+(const Vec3<A>& a, const Vec3<B>& b) {
    return {a.x + b.x, a.y + b.y, a.z + b.z};
}
template <class A, class B>
inline Vec3<Promote<A, B>> operator-(const Vec3<A>& a, const Vec3<B>& b) {
    return {a.x - b.x, a.y - b.y, a.z - b.z};
}
template <class A, class B>
inline Vec3<Promote<A, B>> operator*(const Vec3<A>& a, const B& s) {
    return {a.x * s, a.y * s, a.z * s};
}
template <class A, class B>
inline Vec3<Promote<A, B>> operator*(const A& s, const Vec3<B>& a) {
    return {s * a.x, s * a.y, s * a.z};
}
template <class A, class B>
inline Vec3<Promote<A, B>> operator/(const Vec3<A>& a, const B& s) {
    return {a.x / s, a.y / s, a.z / s};
}

template <class A, class B>
inline Promote<A, B> dot(const Vec3<A>& a, const Vec3<B>& b) {
    return a.x * b.x + a.y * b.y + a.z * b.z;
}

template <class A, class B>
inline Vec3<Promote<A, B>> cross(const Vec3<A>& a, const Vec3<B>& b) {
    return {a.y * b.z - a.z * b.y,
            a.z * b.x - a.x * b.z,
            a.x * b.y - a.y * b.x};
}

template <class S>
inline S length_squared(const Vec3<S>& v) { return dot(v, v); }

template <class S>
inline S length(const Vec3<S>& v) {
    using std::sqrt;
    return sqrt(dot(v, v));
}

template <class S>
inline Vec3<S> normalize(const Vec3<S>& v) { return v / length(v); }

// Mirror reflection of v about unit normal n.
template <class A, class B>
inline Vec3<Promote<A, B>> reflect(const Vec3<A>& v, const Vec3<B>& n) {
    return 2.0 * dot(v, n) * n - v;
}

inline bool is_finite(const Vec3d& v) {
    return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z);
}

}  // namespace drt
