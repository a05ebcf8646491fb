#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <vector>

#include "drt/scene.hpp"

namespace drt {

template <class S>
struct TriHit {
    S t{}, u{}, v{};
};

// Moller-Trumbore, no backface culling. Templated so the gradient pass can
// re-run it with derivative-carrying vertices/origin along a fixed direction;
// the double instantiation is the one the BVH uses, so primal hit values are
// identical in both passes.
template <class S>
inline bool intersect_triangle(const Vec3<S>& a, const Vec3<S>& b, const Vec3<S>& c,
                               const Vec3<S>& o, const Vec3d& dir, TriHit<S>& out) {
    const Vec3<S> e1 = b - a;
    const Vec3<S> e2 = c - a;
    const Vec3<S> pv = cross(Vec3<S>(dir), e2);
    const S det = dot(e1, pv);
    if (std::abs(detach(det)) < 1e-12) return false;
    const S inv_det = 1.0 / det;
    const Vec3<S> tv = o - a;
    const S u = dot(tv, pv) * inv_det;
    if (detach(u) < 0.0 || detach(u) > 1.0) return false;
    const Vec3<S> qv = cross(tv, e1);
    const S v = dot(Vec3<S>(dir), qv) * inv_det;
    if (detach(v) < 0.0 || detach(u) + detach(v) > 1.0) return false;
    out.t = dot(e2, qv) * inv_det;
    out.u = u;
    out.v = v;
    return true;
}

// Shading data at a hit, recomputed from mesh vertices so that it can carry
// derivatives with respect to vertex positions along the fixed ray.
template <class S>
struct SurfacePointT {
    Vec3<S> p;
    Vec3<S> n;  // shading normal, unit, faces the ray origin side
    S t{};
    S b0{}, b1{}, b2{};
};

struct MeshVertexSource {
    const Scene* scene;
    Vec3d operator()(int mesh, int v) const { return scene->meshes[mesh].vertices[v]; }
};

// vertex_of(mesh_id, vertex_id) -> Vec3<S>
template <class S, class VertexSource>
inline SurfacePointT<S> surface_point(const Scene& scene, const VertexSource& vertex_of,
                                      int mesh_id, int tri_id, const Vec3<S>& o,
                                      const Vec3d& dir) {
    const TriangleMesh& mesh = scene.meshes[mesh_id];
    const auto& tri = mesh.indices[tri_id];
    const Vec3<S> a = vertex_of(mesh_id, tri[0]);
    const Vec3<S> b = vertex_of(mesh_id, tri[1]);
    const Vec3<S> c = vertex_of(mesh_id, tri[2]);

    SurfacePointT<S> sp;
    TriHit<S> th;
    if (!intersect_triangle(a, b, c, o, dir, th)) {
        // The traversal guaranteed a hit; a numeric near-miss here would mean
        // inconsistent arithmetic between the two paths.
        th.t = S(0.0);
        th.u = S(0.0);
        th.v = S(0.0);
    }
    sp.t = th.t;
    sp.b1 = th.u;
    sp.b2 = th.v;
    sp.b0 = 1.0 - th.u - th.v;
    sp.p = o + th.t * Vec3<S>(dir);

    Vec3<S> n = normalize(cross(b - a, c - a));
    if (!mesh.normals.empty()) {
        // Interpolated vertex normals are treated as fixed attributes.
        const Vec3<S> n0(mesh.normals[tri[0]]);
        const Vec3<S> n1(mesh.normals[tri[1]]);
        const Vec3<S> n2(mesh.normals[tri[2]]);
        n = normalize(sp.b0 * n0 + sp.b1 * n1 + sp.b2 * n2);
    }
    // Shading normal faces the incoming ray's origin side.
    if (detach(dot(n, Vec3<S>(dir))) > 0.0) n = -n;
    sp.n = n;
    return sp;
}

using SurfacePoint = SurfacePointT<double>;

namespace detail {

struct Aabb {
    Vec3d lo{kInfinity, kInfinity, kInfinity};
    Vec3d hi{-kInfinity, -kInfinity, -kInfinity};

    void grow(const Vec3d& p) {
        for (int c = 0; c < 3; ++c) {
            lo[c] = std::min(lo[c], p[c]);
            hi[c] = std::max(hi[c], p[c]);
        }
    }
    void grow(const Aabb& b) {
        grow(b.lo);
        grow(b.hi);
    }
    int longest_axis() const {
        const Vec3d e = hi - lo;
        if (e.x >= e.y && e.x >= e.z) return 0;
        return e.y >= e.z ? 1 : 2;
    }
    // Conservative slab test; rays parallel to a slab are handled explicitly
    // so a ray lying exactly on a box face never culls a hit.
    bool hit(const Ray& ray, double t_best) const {
        double t0 = ray.t_min;
        double t1 = std::min(ray.t_max, t_best);
        for (int c = 0; c < 3; ++c) {
            const double d = ray.d[c];
            if (std::abs(d) < 1e-300) {
                if (ray.o[c] < lo[c] || ray.o[c] > hi[c]) return false;
                continue;
            }
            const double inv = 1.0 / d;
            double ta = (lo[c] - ray.o[c]) * inv;
            double tb = (hi[c] - ray.o[c]) * inv;
            if (ta > tb) std::swap(ta, tb);
            t0 = std::max(t0, ta);
            t1 = std::min(t1, tb);
            if (t0 > t1) return false;
        }
        return true;
    }
};

}  // namespace detail

// Binary BVH, median split on the longest centroid axis, <= 4 triangles per
// leaf. Immutable after build; safe for concurrent queries.
class Bvh {
public:
    Bvh() = default;

    explicit Bvh(const Scene& scene) : scene_(&scene) {
        for (size_t m = 0; m < scene.meshes.size(); ++m) {
            const TriangleMesh& mesh = scene.meshes[m];
            for (size_t t = 0; t < mesh.indices.size(); ++t) {
                const auto& tri = mesh.indices[t];
                const Vec3d& a = mesh.vertices[tri[0]];
                const Vec3d& b = mesh.vertices[tri[1]];
                const Vec3d& c = mesh.vertices[tri[2]];
                if (!(triangle_area(a, b, c) > kMinTriangleArea))
                    throw ValidationError("build_accel: meshes[" + std::to_string(m) +
                                          "].indices[" + std::to_string(t) +
                                          "]: degenerate triangle");
                Prim prim;
                prim.mesh = int(m);
                prim.tri = int(t);
                prim.box.grow(a);
                prim.box.grow(b);
                prim.box.grow(c);
                prim.centroid = (a + b + c) / 3.0;
                prims_.push_back(prim);
            }
        }
        if (!prims_.empty()) build_node(0, prims_.size());
    }

    std::optional<HitRecord> intersect(const Ray& ray) const {
        int best_prim = -1;
        TriHit<double> best_hit;
        double best_t = kInfinity;
        traverse(ray, [&](int pi, const TriHit<double>& th) {
            const Prim& pr = prims_[pi];
            const bool closer =
                th.t < best_t ||
                (th.t == best_t && best_prim >= 0 &&
                 std::pair(pr.mesh, pr.tri) <
                     std::pair(prims_[best_prim].mesh, prims_[best_prim].tri));
            if (closer) {
                best_t = th.t;
                best_hit = th;
                best_prim = pi;
            }
            return false;  // keep searching for the nearest hit
        });
        if (best_prim < 0) return std::nullopt;

        const Prim& pr = prims_[best_prim];
        const SurfacePoint sp = surface_point<double>(*scene_, MeshVertexSource{scene_},
                                                      pr.mesh, pr.tri, ray.o, ray.d);
        HitRecord rec;
        rec.p = sp.p;
        rec.n = sp.n;
        rec.t = sp.t;
        rec.mesh_id = pr.mesh;
        rec.triangle_id = pr.tri;
        rec.b0 = sp.b0;
        rec.b1 = sp.b1;
        rec.b2 = sp.b2;
        return rec;
    }

    // Any-hit query for shadow rays.
    bool occluded(const Ray& ray) const {
        bool found = false;
        traverse(ray, [&](int, const TriHit<double>&) {
            found = true;
            return true;
        });
        return found;
    }

    size_t triangle_count() const { return prims_.size(); }

private:
    struct Prim {
        detail::Aabb box;
        Vec3d centroid;
        int mesh = 0, tri = 0;
    };
    struct Node {
        detail::Aabb box;
        int left = -1, right = -1;  // internal
        int first = 0, count = 0;   // leaf when count > 0
    };

    static constexpr int kLeafSize = 4;

    int build_node(size_t begin, size_t end) {
        Node node;
        for (size_t i = begin; i < end; ++i) node.box.grow(prims_[i].box);
        const int index = int(nodes_.size());
        nodes_.push_back(node);

        const size_t n = end - begin;
        if (n <= kLeafSize) {
            nodes_[index].first = int(begin);
            nodes_[index].count = int(n);
            return index;
        }

        detail::Aabb cbox;
        for (size_t i = begin; i < end; ++i) cbox.grow(prims_[i].centroid);
        const int axis = cbox.longest_axis();
        const size_t mid = begin + n / 2;
        std::nth_element(prims_.begin() + begin, prims_.begin() + mid, prims_.begin() + end,
                         [axis](const Prim& a, const Prim& b) {
                             if (a.centroid[axis] != b.centroid[axis])
                                 return a.centroid[axis] < b.centroid[axis];
                             return std::pair(a.mesh, a.tri) < std::pair(b.mesh, b.tri);
                         });

        const int left = build_node(begin, mid);
        const int right = build_node(mid, end);
        nodes_[index].left = left;
        nodes_[index].right = right;
        return index;
    }

    // visit(prim_index, tri_hit) -> stop_traversal
    template <class Visit>
    void traverse(const Ray& ray, Visit&& visit) const {
        if (nodes_.empty()) return;
        double t_best = kInfinity;
        int stack[64];
        int sp = 0;
        stack[sp++] = 0;
        while (sp > 0) {
            const Node& node = nodes_[stack[--sp]];
            if (!node.box.hit(ray, t_best)) continue;
            if (node.count > 0) {
                for (int i = node.first; i < node.first + node.count; ++i) {
                    const Prim& pr = prims_[i];
                    const TriangleMesh& mesh = scene_->meshes[pr.mesh];
                    const auto& tri = mesh.indices[pr.tri];
                    TriHit<double> th;
                    if (!intersect_triangle(mesh.vertices[tri[0]], mesh.vertices[tri[1]],
                                            mesh.vertices[tri[2]], ray.o, ray.d, th))
                        continue;
                    if (th.t < ray.t_min || th.t > ray.t_max) continue;
                    if (visit(i, th)) return;
                    t_best = std::min(t_best, th.t);
                }
            } else {
                stack[sp++] = node.left;
                stack[sp++] = node.right;
            }
        }
    }

    const Scene* scene_ = nullptr;
    std::vector<Prim> prims_;
    std::vector<Node> nodes_;
};

inline Bvh build_accel(const Scene& scene) { return Bvh(scene); }

}  // namespace drt
