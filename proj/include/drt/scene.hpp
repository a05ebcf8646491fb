#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "drt/spectrum.hpp"
#include "drt/vec.hpp"

namespace drt {

constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Offset applied along the normal when spawning secondary/shadow rays.
constexpr double kRayEpsilon = 1e-4;

// Minimum admissible triangle area.
constexpr double kMinTriangleArea = 1e-12;

// Domain error with the offending field path in the message.
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

struct Ray {
    Vec3d o;
    Vec3d d;  // unit length
    double t_min = 0.0;
    double t_max = kInfinity;
};

struct Camera {
    Vec3d position;
    Vec3d look_at;
    Vec3d up{0.0, 1.0, 0.0};
    double vertical_fov = 45.0;  // degrees
    int width = 1;
    int height = 1;
};

struct TriangleMesh {
    std::vector<Vec3d> vertices;
    std::vector<std::array<int, 3>> indices;
    int material_id = 0;
    std::vector<Vec3d> normals;  // optional, per vertex
};

struct Material {
    Spectrum rho_d;      // diffuse albedo, per channel in [0,1]
    Spectrum rho_s;      // specular reflectance, per channel in [0,1]
    double shininess = 0.0;
};

struct Light {
    enum class Kind { Point, Directional };
    Kind kind = Kind::Point;
    Vec3d position;        // point
    Spectrum intensity;    // point: radiant intensity per steradian
    Vec3d direction;       // directional: unit vector, direction of travel
    Spectrum irradiance;   // directional
};

struct Scene {
    std::vector<TriangleMesh> meshes;
    std::vector<Material> materials;
    std::vector<Light> lights;
    Camera camera;
};

struct HitRecord {
    Vec3d p;
    Vec3d n;  // shading normal, unit, faces the ray origin side
    double t = 0.0;
    int mesh_id = -1;
    int triangle_id = -1;
    double b0 = 0.0, b1 = 0.0, b2 = 0.0;  // barycentrics, sum to 1
};

inline double triangle_area(const Vec3d& a, const Vec3d& b, const Vec3d& c) {
    return 0.5 * length(cross(b - a, c - a));
}

// Energy conservation check allows an ulp of slack so that projected
// materials (rho_d + rho_s scaled back onto the boundary) revalidate.
inline bool material_energy_ok(const Material& m) {
    for (int c = 0; c < 3; ++c)
        if (m.rho_d[c] + m.rho_s[c] > 1.0 + 1e-12) return false;
    return true;
}

inline void validate_material(const Material& m, const std::string& path) {
    for (int c = 0; c < 3; ++c) {
        if (!(m.rho_d[c] >= 0.0 && m.rho_d[c] <= 1.0))
            throw ValidationError(path + ".rho_d: channel " + std::to_string(c) +
                                  " outside [0,1]");
        if (!(m.rho_s[c] >= 0.0 && m.rho_s[c] <= 1.0))
            throw ValidationError(path + ".rho_s: channel " + std::to_string(c) +
                                  " outside [0,1]");
    }
    if (!material_energy_ok(m))
        throw ValidationError(path + ": rho_d + rho_s exceeds 1 in some channel "
                                     "(energy conservation)");
    if (!std::isfinite(m.shininess) || m.shininess < 0.0)
        throw ValidationError(path + ".shininess: must be finite and >= 0");
}

inline void validate_camera(const Camera& cam, const std::string& path = "camera") {
    if (cam.width < 1 || cam.height < 1)
        throw ValidationError(path + ": width and height must be >= 1");
    if (!(cam.vertical_fov > 0.0 && cam.vertical_fov < 180.0))
        throw ValidationError(path + ".vertical_fov: must be in (0, 180)");
    const Vec3d fwd = cam.look_at - cam.position;
    if (length_squared(fwd) == 0.0)
        throw ValidationError(path + ".look_at: must differ from position");
    if (length_squared(cam.up) == 0.0)
        throw ValidationError(path + ".up: must be nonzero");
    if (length_squared(cross(fwd, cam.up)) < 1e-18)
        throw ValidationError(path + ".up: parallel to the view direction");
}

inline void validate_scene(const Scene& scene) {
    validate_camera(scene.camera);
    for (size_t i = 0; i < scene.materials.size(); ++i)
        validate_material(scene.materials[i], "materials[" + std::to_string(i) + "]");
    for (size_t m = 0; m < scene.meshes.size(); ++m) {
        const TriangleMesh& mesh = scene.meshes[m];
        const std::string path = "meshes[" + std::to_string(m) + "]";
        if (mesh.material_id < 0 || size_t(mesh.material_id) >= scene.materials.size())
            throw ValidationError(path + ".material: index " +
                                  std::to_string(mesh.material_id) + " out of range");
        if (!mesh.normals.empty() && mesh.normals.size() != mesh.vertices.size())
            throw ValidationError(path + ".normals: count must match vertices");
        for (size_t t = 0; t < mesh.indices.size(); ++t) {
            const auto& tri = mesh.indices[t];
            for (int k = 0; k < 3; ++k)
                if (tri[k] < 0 || size_t(tri[k]) >= mesh.vertices.size())
                    throw ValidationError(path + ".indices[" + std::to_string(t) +
                                          "]: vertex index out of range");
            const double area = triangle_area(mesh.vertices[tri[0]], mesh.vertices[tri[1]],
                                              mesh.vertices[tri[2]]);
            if (!(area > kMinTriangleArea))
                throw ValidationError(path + ".indices[" + std::to_string(t) +
                                      "]: degenerate triangle (area <= 1e-12)");
        }
    }
    for (size_t l = 0; l < scene.lights.size(); ++l) {
        const Light& light = scene.lights[l];
        const std::string path = "lights[" + std::to_string(l) + "]";
        const Spectrum& e = light.kind == Light::Kind::Point ? light.intensity
                                                             : light.irradiance;
        if (e.r < 0.0 || e.g < 0.0 || e.b < 0.0)
            throw ValidationError(path + ": emission channels must be >= 0");
        if (light.kind == Light::Kind::Directional &&
            std::abs(length(light.direction) - 1.0) > 1e-6)
            throw ValidationError(path + ".direction: must be unit length");
    }
}

// Pinhole ray through pixel (px, py); jitter (0.5, 0.5) hits the pixel
// center. py = 0 is the top image row.
inline Ray generate_ray(const Camera& cam, int px, int py, const Vec2d& jitter) {
    if (px < 0 || px >= cam.width || py < 0 || py >= cam.height)
        throw ValidationError("generate_ray: pixel (" + std::to_string(px) + ", " +
                              std::to_string(py) + ") out of range");

    const Vec3d forward = normalize(cam.look_at - cam.position);
    const Vec3d right = normalize(cross(forward, cam.up));
    const Vec3d up = cross(right, forward);

    const double tan_half = std::tan(0.5 * cam.vertical_fov * (kPi / 180.0));
    const double aspect = double(cam.width) / double(cam.height);

    const double u = (double(px) + jitter.x) / double(cam.width);
    const double v = (double(py) + jitter.y) / double(cam.height);
    const double sx = (2.0 * u - 1.0) * tan_half * aspect;
    const double sy = (1.0 - 2.0 * v) * tan_half;

    Ray ray;
    ray.o = cam.position;
    ray.d = normalize(sx * right + sy * up + forward);
    return ray;
}

// Next-event sample of a delta light as seen from a shading point, templated
// so the incident direction, distance and weight can carry derivatives with
// respect to the shading point and the light's emission.
template <class S>
struct LightSampleT {
    Vec3<S> wi;       // unit, from shading point toward the light
    S distance;       // +inf for directional lights
    Spec3<S> weight;  // incident radiance, excludes cosine and visibility
};

using LightSample = LightSampleT<double>;

template <class S>
inline LightSampleT<S> sample_light_t(const Light& light, const Spec3<S>& emission,
                                      const Vec3<S>& p) {
    LightSampleT<S> out;
    if (light.kind == Light::Kind::Point) {
        const Vec3<S> to_light = Vec3<S>(light.position) - p;
        const S dist = length(to_light);
        if (detach(dist) < 1e-9)
            throw ValidationError("sample_light: shading point coincides with the light");
        out.wi = to_light / dist;
        out.distance = dist;
        out.weight = emission / (dist * dist);
    } else {
        out.wi = Vec3<S>(-light.direction);
        out.distance = S(kInfinity);
        out.weight = emission;
    }
    return out;
}

inline LightSample sample_light(const Light& light, const Vec3d& p) {
    const Spectrum e = light.kind == Light::Kind::Point ? light.intensity : light.irradiance;
    return sample_light_t<double>(light, e, p);
}

}  // namespace drt
