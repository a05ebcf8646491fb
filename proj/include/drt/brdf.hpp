#pragma once

#include <cmath>

#include "drt/dual.hpp"
#include "drt/scene.hpp"

namespace drt {

// Material parameters as seen by shading code; the gradient pass hands out
// derivative-carrying views of the same scene values.
template <class S>
struct MaterialView {
    Spec3<S> rho_d;
    Spec3<S> rho_s;
    S shininess{};
};

namespace detail {

// x^n with the partial derivatives defined to vanish at and below x = 0
// (the base reaches 0 only through the clamp). Values match std::pow.
template <class S>
inline S clamped_pow(const S& x, const S& n) {
    using std::pow;
    if (detach(x) <= 0.0) return S(std::pow(detach(x), detach(n)));
    return pow(x, n);
}

template <class S>
inline S clamp01(const S& x) {
    if (detach(x) < 0.0) return S(0.0);
    if (detach(x) > 1.0) return S(1.0);
    return x;
}

}  // namespace detail

// Phong reflectance: rho_d/pi + rho_s (n+2)/(2 pi) (r . wo)^n with r the
// reflection of wi about the shading normal. Zero outside the upper
// hemisphere.
template <class S>
inline Spec3<S> eval_brdf(const MaterialView<S>& m, const Vec3<S>& wi, const Vec3<S>& wo,
                          const Vec3<S>& normal) {
    if (detach(dot(wi, normal)) <= 0.0 || detach(dot(wo, normal)) <= 0.0)
        return Spec3<S>();

    Spec3<S> f = m.rho_d * (1.0 / kPi);
    const Vec3<S> r = reflect(wi, normal);
    const S spec_angle = detail::clamp01(dot(r, wo));
    const S lobe = (m.shininess + 2.0) / (2.0 * kPi) * detail::clamped_pow(spec_angle, m.shininess);
    f = f + m.rho_s * lobe;
    return f;
}

inline Spectrum eval_brdf(const Material& m, const Vec3d& wi, const Vec3d& wo,
                          const Vec3d& normal) {
    return eval_brdf(MaterialView<double>{m.rho_d, m.rho_s, m.shininess}, wi, wo, normal);
}

enum class BrdfLobe { Diffuse, Specular, None };

struct BrdfSample {
    Vec3d wi;
    double pdf = 0.0;
    BrdfLobe lobe = BrdfLobe::None;
};

namespace detail {

// Deterministic orthonormal frame around a unit axis.
inline void make_frame(const Vec3d& w, Vec3d& u, Vec3d& v) {
    const Vec3d helper = std::abs(w.x) < 0.9 ? Vec3d{1.0, 0.0, 0.0} : Vec3d{0.0, 1.0, 0.0};
    u = normalize(cross(helper, w));
    v = cross(w, u);
}

inline double pdf_cosine(const Vec3d& wi, const Vec3d& normal) {
    const double c = dot(wi, normal);
    return c > 0.0 ? c / kPi : 0.0;
}

inline double pdf_phong(const Vec3d& wi, const Vec3d& wo, const Vec3d& normal, double n) {
    const double c = std::max(dot(reflect(wo, normal), wi), 0.0);
    return (n + 1.0) / (2.0 * kPi) * std::pow(c, n);
}

}  // namespace detail

// Mixture pdf of the two-lobe sampler below, for an arbitrary direction.
inline double brdf_pdf(const Material& m, const Vec3d& wo, const Vec3d& normal,
                       const Vec3d& wi) {
    if (dot(wi, normal) <= 0.0) return 0.0;
    const double wd = channel_mean(m.rho_d);
    const double ws = channel_mean(m.rho_s);
    if (wd + ws <= 0.0) return 0.0;
    const double p_diffuse = wd / (wd + ws);
    double pdf = 0.0;
    if (p_diffuse > 0.0) pdf += p_diffuse * detail::pdf_cosine(wi, normal);
    if (p_diffuse < 1.0)
        pdf += (1.0 - p_diffuse) * detail::pdf_phong(wi, wo, normal, m.shininess);
    return pdf;
}

// Importance-samples the Phong BRDF: lobe picked proportionally to the
// channel means of rho_d and rho_s (u1 reused after rescaling), diffuse lobe
// cosine-weighted, specular lobe ~ (n+1)/(2 pi) (r . wi)^n around the
// reflection of wo. Samples falling below the surface get pdf 0.
inline BrdfSample sample_brdf(const Material& m, const Vec3d& wo, const Vec3d& normal,
                              double u1, double u2) {
    BrdfSample out;
    const double wd = channel_mean(m.rho_d);
    const double ws = channel_mean(m.rho_s);
    if (wd + ws <= 0.0) return out;  // absorbing
    const double p_diffuse = wd / (wd + ws);

    Vec3d u_axis, v_axis;
    if (u1 < p_diffuse) {
        const double ur = u1 / p_diffuse;
        detail::make_frame(normal, u_axis, v_axis);
        const double radius = std::sqrt(ur);
        const double phi = 2.0 * kPi * u2;
        const double z = std::sqrt(std::max(0.0, 1.0 - ur));
        out.wi = radius * std::cos(phi) * u_axis + radius * std::sin(phi) * v_axis +
                 z * normal;
        out.lobe = BrdfLobe::Diffuse;
    } else {
        const double ur = (u1 - p_diffuse) / (1.0 - p_diffuse);
        const Vec3d r = reflect(wo, normal);
        detail::make_frame(r, u_axis, v_axis);
        const double cos_a = std::pow(ur, 1.0 / (m.shininess + 1.0));
        const double sin_a = std::sqrt(std::max(0.0, 1.0 - cos_a * cos_a));
        const double phi = 2.0 * kPi * u2;
        out.wi = sin_a * std::cos(phi) * u_axis + sin_a * std::sin(phi) * v_axis + cos_a * r;
        out.lobe = BrdfLobe::Specular;
    }
    out.wi = normalize(out.wi);
    if (dot(out.wi, normal) <= 0.0) {
        out.pdf = 0.0;
        return out;
    }
    out.pdf = brdf_pdf(m, wo, normal, out.wi);
    return out;
}

}  // namespace drt
