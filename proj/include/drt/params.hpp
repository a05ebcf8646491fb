#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

#include "drt/scene.hpp"

namespace drt {

enum class ParamTarget {
    MaterialRhoD,
    MaterialRhoS,
    MaterialShininess,
    LightIntensity,
    VertexPosition,
};

inline bool is_material_target(ParamTarget t) {
    return t == ParamTarget::MaterialRhoD || t == ParamTarget::MaterialRhoS ||
           t == ParamTarget::MaterialShininess;
}

// One optimizable scalar. `object` indexes the material/light/mesh, `element`
// the vertex (vertex targets only), `component` the channel or axis.
struct ParamEntry {
    ParamTarget target = ParamTarget::MaterialRhoD;
    int object = 0;
    int element = 0;
    int component = 0;

    friend bool operator==(const ParamEntry& a, const ParamEntry& b) {
        return a.target == b.target && a.object == b.object && a.element == b.element &&
               a.component == b.component;
    }
};

inline uint64_t pack_param_key(const ParamEntry& e) {
    return (uint64_t(e.target) << 56) | (uint64_t(uint16_t(e.object)) << 40) |
           (uint64_t(uint32_t(e.element)) << 8) | uint64_t(uint8_t(e.component));
}

struct ParameterSelector {
    std::vector<ParamEntry> entries;

    size_t size() const { return entries.size(); }
    bool empty() const { return entries.empty(); }

    std::string name(size_t i) const {
        static const char* axis = "xyz";
        static const char* chan = "rgb";
        const ParamEntry& e = entries[i];
        switch (e.target) {
            case ParamTarget::MaterialRhoD:
                return "material[" + std::to_string(e.object) + "].rho_d." + chan[e.component];
            case ParamTarget::MaterialRhoS:
                return "material[" + std::to_string(e.object) + "].rho_s." + chan[e.component];
            case ParamTarget::MaterialShininess:
                return "material[" + std::to_string(e.object) + "].shininess";
            case ParamTarget::LightIntensity:
                return "light[" + std::to_string(e.object) + "].intensity." + chan[e.component];
            case ParamTarget::VertexPosition:
                return "mesh[" + std::to_string(e.object) + "].vertex[" +
                       std::to_string(e.element) + "]." + axis[e.component];
        }
        return "?";
    }
};

inline void validate_selector(const Scene& scene, const ParameterSelector& sel) {
    std::unordered_set<uint64_t> seen;
    for (size_t i = 0; i < sel.entries.size(); ++i) {
        const ParamEntry& e = sel.entries[i];
        const std::string where = "selector entry " + std::to_string(i);
        if (e.component < 0 || e.component > 2)
            throw ValidationError(where + ": component out of range");
        switch (e.target) {
            case ParamTarget::MaterialRhoD:
            case ParamTarget::MaterialRhoS:
            case ParamTarget::MaterialShininess:
                if (e.object < 0 || size_t(e.object) >= scene.materials.size())
                    throw ValidationError(where + ": material index out of range");
                if (e.target == ParamTarget::MaterialShininess && e.component != 0)
                    throw ValidationError(where + ": shininess has a single component");
                break;
            case ParamTarget::LightIntensity:
                if (e.object < 0 || size_t(e.object) >= scene.lights.size())
                    throw ValidationError(where + ": light index out of range");
                break;
            case ParamTarget::VertexPosition:
                if (e.object < 0 || size_t(e.object) >= scene.meshes.size())
                    throw ValidationError(where + ": mesh index out of range");
                if (e.element < 0 ||
                    size_t(e.element) >= scene.meshes[e.object].vertices.size())
                    throw ValidationError(where + ": vertex index out of range");
                break;
        }
        if (!seen.insert(pack_param_key(e)).second)
            throw ValidationError(where + ": duplicate of an earlier entry");
    }
}

// Flat view of the selected scene scalars, in selector order.
struct ParameterVector {
    std::vector<double> values;
    ParameterSelector selector;

    size_t size() const { return values.size(); }
};

namespace detail {

inline double read_param(const Scene& scene, const ParamEntry& e) {
    switch (e.target) {
        case ParamTarget::MaterialRhoD:
            return scene.materials[e.object].rho_d[e.component];
        case ParamTarget::MaterialRhoS:
            return scene.materials[e.object].rho_s[e.component];
        case ParamTarget::MaterialShininess:
            return scene.materials[e.object].shininess;
        case ParamTarget::LightIntensity: {
            const Light& l = scene.lights[e.object];
            return l.kind == Light::Kind::Point ? l.intensity[e.component]
                                                : l.irradiance[e.component];
        }
        case ParamTarget::VertexPosition:
            return scene.meshes[e.object].vertices[e.element][e.component];
    }
    return 0.0;
}

inline void write_param(Scene& scene, const ParamEntry& e, double value) {
    switch (e.target) {
        case ParamTarget::MaterialRhoD:
            scene.materials[e.object].rho_d[e.component] = value;
            break;
        case ParamTarget::MaterialRhoS:
            scene.materials[e.object].rho_s[e.component] = value;
            break;
        case ParamTarget::MaterialShininess:
            scene.materials[e.object].shininess = value;
            break;
        case ParamTarget::LightIntensity: {
            Light& l = scene.lights[e.object];
            (l.kind == Light::Kind::Point ? l.intensity : l.irradiance)[e.component] = value;
            break;
        }
        case ParamTarget::VertexPosition:
            scene.meshes[e.object].vertices[e.element][e.component] = value;
            break;
    }
}

}  // namespace detail

inline ParameterVector flatten(const Scene& scene, const ParameterSelector& sel) {
    validate_selector(scene, sel);
    ParameterVector pv;
    pv.selector = sel;
    pv.values.reserve(sel.size());
    for (const ParamEntry& e : sel.entries) pv.values.push_back(detail::read_param(scene, e));
    return pv;
}

struct ProjectionReport {
    int clamped = 0;   // components moved to a bound
    int rescaled = 0;  // rho_d+rho_s channels scaled back onto the boundary
    bool any() const { return clamped > 0 || rescaled > 0; }
};

// Projects material parameters back into their valid set: rho channels into
// [0,1], rho_d+rho_s onto the energy boundary, shininess into [0, 1e4].
inline void project_material(Material& m, ProjectionReport* report = nullptr) {
    for (int c = 0; c < 3; ++c) {
        for (Spectrum* rho : {&m.rho_d, &m.rho_s}) {
            double& x = (*rho)[c];
            const double clamped = std::clamp(x, 0.0, 1.0);
            if (clamped != x) {
                x = clamped;
                if (report) ++report->clamped;
            }
        }
        const double sum = m.rho_d[c] + m.rho_s[c];
        if (sum > 1.0) {
            m.rho_d[c] /= sum;
            m.rho_s[c] = std::min(m.rho_s[c] / sum, 1.0 - m.rho_d[c]);
            if (report) ++report->rescaled;
        }
    }
    const double shin = std::clamp(m.shininess, 0.0, 1e4);
    if (shin != m.shininess) {
        m.shininess = shin;
        if (report) ++report->clamped;
    }
}

// Writes values back without projection; used by the finite-difference oracle
// so that central differences probe the unconstrained loss.
inline Scene apply_raw(const Scene& scene, const ParameterVector& pv) {
    if (pv.values.size() != pv.selector.size())
        throw ValidationError("apply: value count does not match selector");
    validate_selector(scene, pv.selector);
    Scene out = scene;
    for (size_t i = 0; i < pv.values.size(); ++i)
        detail::write_param(out, pv.selector.entries[i], pv.values[i]);
    return out;
}

inline Scene apply(const Scene& scene, const ParameterVector& pv,
                   ProjectionReport* report = nullptr) {
    Scene out = apply_raw(scene, pv);
    std::vector<int> touched;
    for (const ParamEntry& e : pv.selector.entries)
        if (is_material_target(e.target)) touched.push_back(e.object);
    std::sort(touched.begin(), touched.end());
    touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
    for (int m : touched) project_material(out.materials[m], report);
    return out;
}

}  // namespace drt
