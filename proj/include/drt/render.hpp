#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "drt/brdf.hpp"
#include "drt/bvh.hpp"
#include "drt/parallel.hpp"
#include "drt/sampler.hpp"
#include "drt/scene.hpp"

namespace drt {

struct RenderConfig {
    int spp = 16;
    int max_depth = 4;
    uint64_t seed = 0;
    bool stratified = true;
};

inline void validate_config(const RenderConfig& cfg) {
    if (cfg.spp < 1) throw ValidationError("render config: spp must be >= 1");
    if (cfg.max_depth < 1) throw ValidationError("render config: max_depth must be >= 1");
}

// Linear HDR image, row 0 at the top.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<Spectrum> pixels;

    Image() = default;
    Image(int w, int h) : width(w), height(h), pixels(size_t(w) * size_t(h)) {}

    Spectrum& at(int x, int y) { return pixels[size_t(y) * size_t(width) + size_t(x)]; }
    const Spectrum& at(int x, int y) const {
        return pixels[size_t(y) * size_t(width) + size_t(x)];
    }
    bool same_size(const Image& o) const { return width == o.width && height == o.height; }
};

struct RenderStats {
    long nonfinite_samples = 0;  // contributions replaced by 0

    RenderStats& operator+=(const RenderStats& o) {
        nonfinite_samples += o.nonfinite_samples;
        return *this;
    }
};

// Plain scene reads; the estimator below is templated over this so the
// gradient pass can substitute derivative-carrying bindings.
struct PrimalBinding {
    using Scalar = double;
    const Scene* scene;

    Vec3d vertex(int mesh, int v) const { return scene->meshes[mesh].vertices[v]; }
    MaterialView<double> material(int m) const {
        const Material& mat = scene->materials[m];
        return {mat.rho_d, mat.rho_s, mat.shininess};
    }
    Spec3<double> light_emission(int l) const {
        const Light& light = scene->lights[l];
        return light.kind == Light::Kind::Point ? light.intensity : light.irradiance;
    }
};

namespace detail {

template <class S>
inline Vec3d detach3(const Vec3<S>& v) {
    return {detach(v.x), detach(v.y), detach(v.z)};
}

template <class S>
inline Spectrum detach_spec(const Spec3<S>& s) {
    return {detach(s.r), detach(s.g), detach(s.b)};
}

}  // namespace detail

// One-sample path estimate of outgoing radiance for a camera ray: next-event
// estimation at every vertex (delta lights are invisible to BRDF sampling),
// then a BRDF-sampled continuation up to cfg.max_depth vertices. No Russian
// roulette; rays that escape the scene carry no radiance.
//
// Sampling decisions (directions, lobes, pixel strata, visibility) are always
// made on detached values, so instantiating the estimator with a derivative-
// carrying scalar differentiates the integrand along frozen paths.
template <class Binding>
Spec3<typename Binding::Scalar> estimate_radiance(const Scene& scene, const Bvh& accel,
                                                  const Binding& bind, const Ray& primary,
                                                  Sampler& rng, const RenderConfig& cfg,
                                                  RenderStats* stats = nullptr) {
    using S = typename Binding::Scalar;

    Spec3<S> radiance;
    Spec3<S> throughput(S(1.0));
    Vec3<S> origin(primary.o);
    Vec3d origin_detached = primary.o;
    Vec3d dir = primary.d;
    double t_min = primary.t_min;
    double t_max = primary.t_max;

    for (int depth = 0; depth < cfg.max_depth; ++depth) {
        const auto hit = accel.intersect(Ray{origin_detached, dir, t_min, t_max});
        if (!hit) break;

        const int mat_id = scene.meshes[hit->mesh_id].material_id;
        const auto vertex_of = [&](int m, int v) { return bind.vertex(m, v); };
        const SurfacePointT<S> sp = surface_point<S>(scene, vertex_of, hit->mesh_id,
                                                     hit->triangle_id, origin, dir);
        const Vec3d n_detached = detail::detach3(sp.n);
        const Vec3d p_detached = detail::detach3(sp.p);
        const Vec3d wo_detached = -dir;
        const Vec3<S> wo(wo_detached);
        const MaterialView<S> mat = bind.material(mat_id);

        // Direct lighting from every delta light.
        for (size_t li = 0; li < scene.lights.size(); ++li) {
            const Light& light = scene.lights[li];
            if (light.kind == Light::Kind::Point &&
                length_squared(light.position - p_detached) < 1e-18)
                continue;  // degenerate: shading point on the light
            const LightSampleT<S> ls =
                sample_light_t<S>(light, bind.light_emission(int(li)), sp.p);
            const Vec3d wi_detached = detail::detach3(ls.wi);
            if (dot(wi_detached, n_detached) <= 0.0) continue;

            Ray shadow;
            shadow.o = p_detached + kRayEpsilon * n_detached;
            shadow.d = wi_detached;
            shadow.t_min = 0.0;
            shadow.t_max = light.kind == Light::Kind::Point
                               ? detach(ls.distance) - 2.0 * kRayEpsilon
                               : kInfinity;
            if (shadow.t_max > 0.0 && accel.occluded(shadow)) continue;

            const Spec3<S> f = eval_brdf(mat, ls.wi, wo, sp.n);
            const Spec3<S> contrib =
                throughput * f * dot(ls.wi, sp.n) * ls.weight;
            if (!is_finite(detail::detach_spec(contrib))) {
                if (stats) ++stats->nonfinite_samples;
                continue;
            }
            radiance += contrib;
        }

        if (depth + 1 >= cfg.max_depth) break;

        // Continuation: importance-sample the BRDF on detached quantities.
        const double u1 = rng.next();
        const double u2 = rng.next();
        const BrdfSample bs =
            sample_brdf(scene.materials[mat_id], wo_detached, n_detached, u1, u2);
        if (!(bs.pdf > 0.0)) break;

        const Vec3<S> wi(bs.wi);
        const Spec3<S> f = eval_brdf(mat, wi, wo, sp.n);
        const S cos_i = dot(wi, sp.n);
        if (detach(cos_i) <= 0.0) break;
        throughput = throughput * f * cos_i * (1.0 / bs.pdf);
        if (!is_finite(detail::detach_spec(throughput))) {
            if (stats) ++stats->nonfinite_samples;
            break;
        }

        origin = sp.p + S(kRayEpsilon) * sp.n;
        origin_detached = detail::detach3(origin);
        dir = bs.wi;
        t_min = 0.0;
        t_max = kInfinity;
    }
    return radiance;
}

inline Spectrum estimate_radiance(const Scene& scene, const Bvh& accel, const Ray& ray,
                                  Sampler& rng, const RenderConfig& cfg,
                                  RenderStats* stats = nullptr) {
    return estimate_radiance(scene, accel, PrimalBinding{&scene}, ray, rng, cfg, stats);
}

namespace detail {

// Pixel jitter for sample s: stratified renders place the two dimensions on
// a ceil(sqrt(spp)) x ceil(sqrt(spp)) stratum grid.
inline Vec2d pixel_jitter(Sampler& rng, int s, const RenderConfig& cfg) {
    const double u1 = rng.next();
    const double u2 = rng.next();
    if (!cfg.stratified) return {u1, u2};
    const int g = int(std::ceil(std::sqrt(double(cfg.spp))));
    const double gx = double(s % g);
    const double gy = double(s / g);
    return {(gx + u1) / double(g), (gy + u2) / double(g)};
}

}  // namespace detail

// Renders one pixel with the generic binding; returns the spp average.
template <class Binding>
Spec3<typename Binding::Scalar> render_pixel(const Scene& scene, const Bvh& accel,
                                             const Binding& bind, int px, int py,
                                             const RenderConfig& cfg,
                                             RenderStats* stats = nullptr) {
    using S = typename Binding::Scalar;
    const uint32_t pixel_index = uint32_t(py) * uint32_t(scene.camera.width) + uint32_t(px);
    Spec3<S> sum;
    for (int s = 0; s < cfg.spp; ++s) {
        Sampler rng(cfg.seed, pixel_index, uint32_t(s));
        const Vec2d jitter = detail::pixel_jitter(rng, s, cfg);
        const Ray ray = generate_ray(scene.camera, px, py, jitter);
        sum += estimate_radiance(scene, accel, bind, ray, rng, cfg, stats);
    }
    return sum / double(cfg.spp);
}

// Full-frame render. Rows are traced in parallel into disjoint pixels and
// the deterministic sampler makes the result a pure function of
// (scene, config), independent of the thread count.
inline Image render(const Scene& scene, const Bvh& accel, const RenderConfig& cfg,
                    RenderStats* stats = nullptr) {
    validate_config(cfg);
    validate_scene(scene);
    const Camera& cam = scene.camera;
    Image img(cam.width, cam.height);
    const PrimalBinding bind{&scene};
    std::vector<RenderStats> row_stats(size_t(cam.height));
    parallel_for(size_t(cam.height), [&](size_t row) {
        for (int px = 0; px < cam.width; ++px)
            img.at(px, int(row)) =
                render_pixel(scene, accel, bind, px, int(row), cfg, &row_stats[row]);
    });
    if (stats)
        for (const RenderStats& rs : row_stats) *stats += rs;
    return img;
}

inline Image render(const Scene& scene, const RenderConfig& cfg, RenderStats* stats = nullptr) {
    const Bvh accel(scene);
    return render(scene, accel, cfg, stats);
}

}  // namespace drt
