#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "drt/dual.hpp"
#include "drt/metrics.hpp"
#include "drt/params.hpp"
#include "drt/render.hpp"

namespace drt {

// Derivative lanes carried per gradient pass; longer parameter vectors are
// processed in chunks. Small selectors (inverse-rendering runs optimize a
// handful of scalars) take a narrow, cheaper instantiation.
constexpr int kGradLanes = 12;
constexpr int kGradLanesSmall = 4;

// Scene reads that attach a derivative seed to every scalar selected in the
// current chunk. Values are read straight from the scene, so the primal part
// of a gradient render is bit-identical to the plain render.
template <int K>
struct DualBinding {
    using Scalar = Dual<K>;

    const Scene* scene;
    std::unordered_map<uint64_t, int> lanes;  // packed param key -> lane

    DualBinding(const Scene& s, const ParameterSelector& sel, size_t chunk_begin,
                size_t chunk_count)
        : scene(&s) {
        for (size_t i = 0; i < chunk_count; ++i)
            lanes.emplace(pack_param_key(sel.entries[chunk_begin + i]), int(i));
    }

    Dual<K> attach(double value, ParamTarget target, int object, int element,
                   int component) const {
        const auto it = lanes.find(pack_param_key({target, object, element, component}));
        if (it == lanes.end()) return Dual<K>(value);
        return Dual<K>::seeded(value, it->second);
    }

    Vec3<Dual<K>> vertex(int mesh, int v) const {
        const Vec3d& p = scene->meshes[mesh].vertices[v];
        return {attach(p.x, ParamTarget::VertexPosition, mesh, v, 0),
                attach(p.y, ParamTarget::VertexPosition, mesh, v, 1),
                attach(p.z, ParamTarget::VertexPosition, mesh, v, 2)};
    }

    MaterialView<Dual<K>> material(int m) const {
        const Material& mat = scene->materials[m];
        MaterialView<Dual<K>> out;
        for (int c = 0; c < 3; ++c) {
            out.rho_d[c] = attach(mat.rho_d[c], ParamTarget::MaterialRhoD, m, 0, c);
            out.rho_s[c] = attach(mat.rho_s[c], ParamTarget::MaterialRhoS, m, 0, c);
        }
        out.shininess = attach(mat.shininess, ParamTarget::MaterialShininess, m, 0, 0);
        return out;
    }

    Spec3<Dual<K>> light_emission(int l) const {
        const Light& light = scene->lights[l];
        const Spectrum& e =
            light.kind == Light::Kind::Point ? light.intensity : light.irradiance;
        Spec3<Dual<K>> out;
        for (int c = 0; c < 3; ++c)
            out[c] = attach(e[c], ParamTarget::LightIntensity, l, 0, c);
        return out;
    }
};

struct GradientRenderResult {
    Image image;                // bit-identical to render(scene, config)
    double loss = 0.0;          // mean over targets of the MSE (Eq. styled loss)
    std::vector<double> grad;   // dloss/dtheta in selector order
    long zeroed_components = 0; // non-finite gradient entries replaced by 0
    RenderStats stats;
};

namespace detail {

template <int K>
GradientRenderResult render_with_gradients_k(const Scene& scene, const ParameterVector& pv,
                                             const std::vector<Image>& targets,
                                             const RenderConfig& cfg) {
    const Camera& cam = scene.camera;
    const Bvh accel(scene);
    const size_t n_params = pv.values.size();
    const size_t n_pixels = size_t(cam.width) * size_t(cam.height);
    const double n_targets = double(targets.size());

    GradientRenderResult out;
    out.image = Image(cam.width, cam.height);
    out.grad.assign(n_params, 0.0);

    std::vector<double> row_loss(size_t(cam.height), 0.0);
    std::vector<RenderStats> row_stats(size_t(cam.height));
    std::vector<std::vector<double>> row_grad(size_t(cam.height));

    for (size_t base = 0; base < std::max<size_t>(n_params, 1); base += K) {
        const size_t count = n_params == 0 ? 0 : std::min<size_t>(K, n_params - base);
        const DualBinding<K> bind(scene, pv.selector, base, count);
        const bool first_chunk = base == 0;

        for (auto& rg : row_grad) rg.assign(count, 0.0);

        parallel_for(size_t(cam.height), [&](size_t row) {
            std::vector<double>& grad_acc = row_grad[row];
            for (int px = 0; px < cam.width; ++px) {
                const Spec3<Dual<K>> val = render_pixel(
                    scene, accel, bind, px, int(row), cfg, &row_stats[row]);
                const Spectrum primal{val.r.v, val.g.v, val.b.v};
                if (first_chunk) out.image.at(px, int(row)) = primal;

                // dL/dI for this pixel, averaged over targets.
                Spectrum dldi;
                double pixel_loss = 0.0;
                for (const Image& t : targets) {
                    const Spectrum diff = primal - t.at(px, int(row));
                    dldi += diff * (2.0 / (3.0 * double(n_pixels) * n_targets));
                    pixel_loss +=
                        (diff.r * diff.r + diff.g * diff.g + diff.b * diff.b) / 3.0;
                }
                if (first_chunk) row_loss[row] += pixel_loss / n_targets;
                for (size_t k = 0; k < count; ++k)
                    grad_acc[k] += dldi.r * val.r.d[k] + dldi.g * val.g.d[k] +
                                   dldi.b * val.b.d[k];
            }
        });

        // Fixed-order reduction keeps the result independent of scheduling.
        for (size_t row = 0; row < size_t(cam.height); ++row)
            for (size_t k = 0; k < count; ++k) out.grad[base + k] += row_grad[row][k];
        if (n_params == 0) break;
    }

    for (size_t row = 0; row < size_t(cam.height); ++row) out.loss += row_loss[row];
    out.loss /= double(n_pixels);
    for (const RenderStats& rs : row_stats) out.stats += rs;

    for (double& g : out.grad)
        if (!std::isfinite(g)) {
            g = 0.0;
            ++out.zeroed_components;
        }
    return out;
}

}  // namespace detail

// Renders the scene once per parameter chunk with derivative-carrying
// scalars and chains the per-pixel image derivatives through the MSE loss.
// Sampling decisions stay frozen (detached), so this is the detached-path
// adjoint: exact for material/light parameters and for geometry as long as
// silhouettes stay put; visibility discontinuities contribute nothing.
inline GradientRenderResult render_with_gradients(const Scene& scene,
                                                  const ParameterVector& pv,
                                                  const std::vector<Image>& targets,
                                                  const RenderConfig& cfg) {
    validate_config(cfg);
    validate_scene(scene);
    validate_selector(scene, pv.selector);
    if (pv.values.size() != pv.selector.size())
        throw ValidationError("render_with_gradients: theta does not match its selector");
    for (size_t i = 0; i < pv.values.size(); ++i)
        if (detail::read_param(scene, pv.selector.entries[i]) != pv.values[i])
            throw ValidationError("render_with_gradients: theta[" + std::to_string(i) +
                                  "] does not match the scene value of " +
                                  pv.selector.name(i));
    if (targets.empty())
        throw ValidationError("render_with_gradients: at least one target is required");
    for (const Image& t : targets)
        if (t.width != scene.camera.width || t.height != scene.camera.height)
            throw ValidationError("render_with_gradients: target dimensions differ from camera");

    if (pv.values.size() <= size_t(kGradLanesSmall))
        return detail::render_with_gradients_k<kGradLanesSmall>(scene, pv, targets, cfg);
    return detail::render_with_gradients_k<kGradLanes>(scene, pv, targets, cfg);
}

// Central-difference step for one coordinate: relative for material/light
// parameters, absolute (scene units) for vertex positions.
inline double fd_step(const ParamEntry& e, double value) {
    if (e.target == ParamTarget::VertexPosition) return 1e-3;
    return std::max(1e-3 * std::abs(value), 1e-4);
}

// Independent gradient oracle: central finite differences of the full render
// loss under common random numbers (identical seed on both sides).
inline std::vector<double> finite_difference_gradient(const Scene& scene,
                                                      const ParameterVector& pv,
                                                      const std::vector<Image>& targets,
                                                      const RenderConfig& cfg,
                                                      std::optional<double> h = std::nullopt) {
    if (h && !(*h > 0.0))
        throw ValidationError("finite_difference_gradient: step must be > 0");
    std::vector<double> grad(pv.values.size(), 0.0);
    for (size_t k = 0; k < pv.values.size(); ++k) {
        const double step = h ? *h : fd_step(pv.selector.entries[k], pv.values[k]);
        ParameterVector probe = pv;

        probe.values[k] = pv.values[k] + step;
        const double loss_hi =
            loss_against_targets(render(apply_raw(scene, probe), cfg), targets);
        probe.values[k] = pv.values[k] - step;
        const double loss_lo =
            loss_against_targets(render(apply_raw(scene, probe), cfg), targets);

        grad[k] = (loss_hi - loss_lo) / (2.0 * step);
    }
    return grad;
}

struct GradcheckRow {
    std::string name;
    double adjoint = 0.0;
    double finite_diff = 0.0;
    double rel_error = 0.0;
    bool is_vertex = false;
};

struct GradcheckReport {
    std::vector<GradcheckRow> rows;
    double cosine_similarity = 1.0;
    double max_rel_material_light = 0.0;
    double max_rel_vertex = 0.0;
    bool pass = true;
};

inline double gradcheck_rel_error(double a, double b) {
    const double denom = std::max(std::abs(a), std::abs(b));
    if (denom < 1e-9) return 0.0;  // both effectively zero
    return std::abs(a - b) / denom;
}

// Compares the adjoint gradient against the finite-difference oracle,
// coordinate by coordinate plus whole-vector cosine similarity.
inline GradcheckReport gradcheck(const Scene& scene, const ParameterVector& pv,
                                 const std::vector<Image>& targets, const RenderConfig& cfg,
                                 std::optional<double> h = std::nullopt,
                                 double tol_material_light = 1e-2, double tol_vertex = 5e-2) {
    const GradientRenderResult res = render_with_gradients(scene, pv, targets, cfg);
    const std::vector<double> fd = finite_difference_gradient(scene, pv, targets, cfg, h);

    GradcheckReport report;
    double dot_av = 0.0, norm_a = 0.0, norm_f = 0.0;
    for (size_t k = 0; k < pv.values.size(); ++k) {
        GradcheckRow row;
        row.name = pv.selector.name(k);
        row.adjoint = res.grad[k];
        row.finite_diff = fd[k];
        row.rel_error = gradcheck_rel_error(res.grad[k], fd[k]);
        row.is_vertex = pv.selector.entries[k].target == ParamTarget::VertexPosition;
        if (row.is_vertex)
            report.max_rel_vertex = std::max(report.max_rel_vertex, row.rel_error);
        else
            report.max_rel_material_light =
                std::max(report.max_rel_material_light, row.rel_error);
        dot_av += res.grad[k] * fd[k];
        norm_a += res.grad[k] * res.grad[k];
        norm_f += fd[k] * fd[k];
        report.rows.push_back(std::move(row));
    }
    if (norm_a > 0.0 && norm_f > 0.0)
        report.cosine_similarity = dot_av / (std::sqrt(norm_a) * std::sqrt(norm_f));
    report.pass = report.max_rel_material_light <= tol_material_light &&
                  report.max_rel_vertex <= tol_vertex;
    return report;
}

}  // namespace drt
