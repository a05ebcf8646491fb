#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "drt/image_io.hpp"
#include "drt/optim.hpp"
#include "drt/params.hpp"
#include "drt/scene.hpp"

namespace drt {

using json = nlohmann::json;

constexpr int kSchemaVersion = 1;

namespace detail {

inline void check_keys(const json& obj, const std::string& path,
                       std::initializer_list<const char*> allowed) {
    for (const auto& item : obj.items()) {
        bool ok = false;
        for (const char* key : allowed)
            if (item.key() == key) {
                ok = true;
                break;
            }
        if (!ok)
            throw ValidationError(path + ": unknown key '" + item.key() + "'");
    }
}

inline const json& require(const json& obj, const char* key, const std::string& path) {
    const auto it = obj.find(key);
    if (it == obj.end())
        throw ValidationError(path + ": missing required key '" + key + "'");
    return *it;
}

inline double as_number(const json& j, const std::string& path) {
    if (!j.is_number()) throw ValidationError(path + ": expected a number");
    return j.get<double>();
}

inline int as_int(const json& j, const std::string& path) {
    if (!j.is_number_integer()) throw ValidationError(path + ": expected an integer");
    return j.get<int>();
}

inline bool as_bool(const json& j, const std::string& path) {
    if (!j.is_boolean()) throw ValidationError(path + ": expected a boolean");
    return j.get<bool>();
}

inline Vec3d as_vec3(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 3)
        throw ValidationError(path + ": expected an array of 3 numbers");
    return {as_number(j[0], path), as_number(j[1], path), as_number(j[2], path)};
}

inline Spectrum as_spectrum(const json& j, const std::string& path) {
    const Vec3d v = as_vec3(j, path);
    return {v.x, v.y, v.z};
}

inline json vec3_to_json(const Vec3d& v) { return json::array({v.x, v.y, v.z}); }
inline json spectrum_to_json(const Spectrum& s) { return json::array({s.r, s.g, s.b}); }

// Raw triangle list: one triangle per line, nine whitespace-separated
// coordinates (three vertices).
inline void load_triangle_list(const std::filesystem::path& path, TriangleMesh& mesh) {
    std::ifstream in(path);
    if (!in)
        throw IoError("mesh file '" + path.string() + "' is missing or unreadable");
    double c[9];
    while (in >> c[0] >> c[1] >> c[2] >> c[3] >> c[4] >> c[5] >> c[6] >> c[7] >> c[8]) {
        const int base = int(mesh.vertices.size());
        mesh.vertices.push_back({c[0], c[1], c[2]});
        mesh.vertices.push_back({c[3], c[4], c[5]});
        mesh.vertices.push_back({c[6], c[7], c[8]});
        mesh.indices.push_back({base, base + 1, base + 2});
    }
    if (!in.eof())
        throw ValidationError("mesh file '" + path.string() +
                              "': expected 9 numbers per triangle");
}

struct SelectorAddress {
    ParamTarget target;
    int object = 0;
    int element = 0;
    std::optional<int> component;  // absent expands to all components
};

inline SelectorAddress parse_address(const json& j, const std::string& path) {
    SelectorAddress addr;
    const std::string target =
        require(j, "target", path).is_string()
            ? j["target"].get<std::string>()
            : throw ValidationError(path + ".target: expected a string");

    if (target == "material.rho_d" || target == "material.rho_s" ||
        target == "material.shininess") {
        addr.target = target == "material.rho_d"    ? ParamTarget::MaterialRhoD
                      : target == "material.rho_s"  ? ParamTarget::MaterialRhoS
                                                    : ParamTarget::MaterialShininess;
        addr.object = as_int(require(j, "material", path), path + ".material");
    } else if (target == "light.intensity") {
        addr.target = ParamTarget::LightIntensity;
        addr.object = as_int(require(j, "light", path), path + ".light");
    } else if (target == "vertex.position") {
        addr.target = ParamTarget::VertexPosition;
        addr.object = as_int(require(j, "mesh", path), path + ".mesh");
        addr.element = as_int(require(j, "vertex", path), path + ".vertex");
    } else {
        throw ValidationError(path + ".target: unknown target '" + target + "'");
    }
    if (j.contains("component"))
        addr.component = as_int(j["component"], path + ".component");
    if (addr.target == ParamTarget::MaterialShininess) addr.component = 0;
    return addr;
}

inline std::vector<ParamEntry> expand_address(const SelectorAddress& addr) {
    std::vector<ParamEntry> out;
    if (addr.component) {
        out.push_back({addr.target, addr.object, addr.element, *addr.component});
    } else {
        for (int c = 0; c < 3; ++c)
            out.push_back({addr.target, addr.object, addr.element, c});
    }
    return out;
}

}  // namespace detail

struct SceneDocument {
    Scene scene;
    ParameterSelector selector;
};

inline SceneDocument parse_scene_document(const json& doc,
                                          const std::filesystem::path& base_dir) {
    using namespace detail;
    if (!doc.is_object()) throw ValidationError("scene document: expected a JSON object");
    check_keys(doc, "scene", {"schema_version", "camera", "materials", "lights", "meshes",
                              "optimize"});
    const int version = as_int(require(doc, "schema_version", "scene"), "scene.schema_version");
    if (version != kSchemaVersion)
        throw ValidationError("scene.schema_version: unsupported version " +
                              std::to_string(version));

    SceneDocument out;
    Scene& scene = out.scene;

    const json& cam = require(doc, "camera", "scene");
    check_keys(cam, "camera", {"position", "look_at", "up", "vertical_fov", "width", "height"});
    scene.camera.position = as_vec3(require(cam, "position", "camera"), "camera.position");
    scene.camera.look_at = as_vec3(require(cam, "look_at", "camera"), "camera.look_at");
    if (cam.contains("up")) scene.camera.up = as_vec3(cam["up"], "camera.up");
    scene.camera.vertical_fov =
        as_number(require(cam, "vertical_fov", "camera"), "camera.vertical_fov");
    scene.camera.width = as_int(require(cam, "width", "camera"), "camera.width");
    scene.camera.height = as_int(require(cam, "height", "camera"), "camera.height");

    const json& mats = require(doc, "materials", "scene");
    if (!mats.is_array()) throw ValidationError("materials: expected an array");
    for (size_t i = 0; i < mats.size(); ++i) {
        const std::string path = "materials[" + std::to_string(i) + "]";
        check_keys(mats[i], path, {"rho_d", "rho_s", "shininess"});
        Material m;
        if (mats[i].contains("rho_d")) m.rho_d = as_spectrum(mats[i]["rho_d"], path + ".rho_d");
        if (mats[i].contains("rho_s")) m.rho_s = as_spectrum(mats[i]["rho_s"], path + ".rho_s");
        if (mats[i].contains("shininess"))
            m.shininess = as_number(mats[i]["shininess"], path + ".shininess");
        scene.materials.push_back(m);
    }

    const json& lights = require(doc, "lights", "scene");
    if (!lights.is_array()) throw ValidationError("lights: expected an array");
    for (size_t i = 0; i < lights.size(); ++i) {
        const std::string path = "lights[" + std::to_string(i) + "]";
        const std::string type =
            require(lights[i], "type", path).get<std::string>();
        Light light;
        if (type == "point") {
            check_keys(lights[i], path, {"type", "position", "intensity"});
            light.kind = Light::Kind::Point;
            light.position = as_vec3(require(lights[i], "position", path), path + ".position");
            light.intensity =
                as_spectrum(require(lights[i], "intensity", path), path + ".intensity");
        } else if (type == "directional") {
            check_keys(lights[i], path, {"type", "direction", "irradiance"});
            light.kind = Light::Kind::Directional;
            light.direction = normalize(
                as_vec3(require(lights[i], "direction", path), path + ".direction"));
            light.irradiance =
                as_spectrum(require(lights[i], "irradiance", path), path + ".irradiance");
        } else {
            throw ValidationError(path + ".type: unknown light type '" + type + "'");
        }
        scene.lights.push_back(light);
    }

    const json& meshes = require(doc, "meshes", "scene");
    if (!meshes.is_array()) throw ValidationError("meshes: expected an array");
    for (size_t i = 0; i < meshes.size(); ++i) {
        const std::string path = "meshes[" + std::to_string(i) + "]";
        check_keys(meshes[i], path, {"material", "vertices", "indices", "normals", "file"});
        TriangleMesh mesh;
        mesh.material_id = as_int(require(meshes[i], "material", path), path + ".material");
        if (meshes[i].contains("file")) {
            if (meshes[i].contains("vertices") || meshes[i].contains("indices"))
                throw ValidationError(path + ": 'file' excludes inline vertices/indices");
            load_triangle_list(base_dir / meshes[i]["file"].get<std::string>(), mesh);
        } else {
            const json& verts = require(meshes[i], "vertices", path);
            if (!verts.is_array()) throw ValidationError(path + ".vertices: expected an array");
            for (size_t v = 0; v < verts.size(); ++v)
                mesh.vertices.push_back(
                    as_vec3(verts[v], path + ".vertices[" + std::to_string(v) + "]"));
            const json& idx = require(meshes[i], "indices", path);
            if (!idx.is_array()) throw ValidationError(path + ".indices: expected an array");
            for (size_t t = 0; t < idx.size(); ++t) {
                const std::string tp = path + ".indices[" + std::to_string(t) + "]";
                if (!idx[t].is_array() || idx[t].size() != 3)
                    throw ValidationError(tp + ": expected an array of 3 indices");
                mesh.indices.push_back(
                    {as_int(idx[t][0], tp), as_int(idx[t][1], tp), as_int(idx[t][2], tp)});
            }
            if (meshes[i].contains("normals")) {
                const json& norms = meshes[i]["normals"];
                if (!norms.is_array())
                    throw ValidationError(path + ".normals: expected an array");
                for (size_t v = 0; v < norms.size(); ++v)
                    mesh.normals.push_back(normalize(
                        as_vec3(norms[v], path + ".normals[" + std::to_string(v) + "]")));
            }
        }
        scene.meshes.push_back(std::move(mesh));
    }

    if (doc.contains("optimize")) {
        const json& opt = doc["optimize"];
        check_keys(opt, "optimize", {"parameters", "initial"});
        if (opt.contains("parameters")) {
            const json& params = opt["parameters"];
            if (!params.is_array())
                throw ValidationError("optimize.parameters: expected an array");
            for (size_t i = 0; i < params.size(); ++i) {
                const std::string path = "optimize.parameters[" + std::to_string(i) + "]";
                check_keys(params[i], path,
                           {"target", "material", "light", "mesh", "vertex", "component"});
                for (const ParamEntry& e : expand_address(parse_address(params[i], path)))
                    out.selector.entries.push_back(e);
            }
        }
        if (opt.contains("initial")) {
            const json& inits = opt["initial"];
            if (!inits.is_array()) throw ValidationError("optimize.initial: expected an array");
            for (size_t i = 0; i < inits.size(); ++i) {
                const std::string path = "optimize.initial[" + std::to_string(i) + "]";
                check_keys(inits[i], path, {"target", "material", "light", "mesh", "vertex",
                                            "component", "value"});
                const double value =
                    as_number(require(inits[i], "value", path), path + ".value");
                for (const ParamEntry& e : expand_address(parse_address(inits[i], path)))
                    detail::write_param(scene, e, value);
            }
        }
    }

    validate_scene(scene);
    validate_selector(scene, out.selector);
    return out;
}

inline SceneDocument load_scene(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("load_scene: cannot open '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError("load_scene: '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_scene_document(doc, std::filesystem::path(path).parent_path());
}

inline json scene_to_json(const Scene& scene, const ParameterSelector& selector) {
    json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["camera"] = {{"position", detail::vec3_to_json(scene.camera.position)},
                     {"look_at", detail::vec3_to_json(scene.camera.look_at)},
                     {"up", detail::vec3_to_json(scene.camera.up)},
                     {"vertical_fov", scene.camera.vertical_fov},
                     {"width", scene.camera.width},
                     {"height", scene.camera.height}};
    doc["materials"] = json::array();
    for (const Material& m : scene.materials)
        doc["materials"].push_back({{"rho_d", detail::spectrum_to_json(m.rho_d)},
                                    {"rho_s", detail::spectrum_to_json(m.rho_s)},
                                    {"shininess", m.shininess}});
    doc["lights"] = json::array();
    for (const Light& l : scene.lights) {
        if (l.kind == Light::Kind::Point)
            doc["lights"].push_back({{"type", "point"},
                                     {"position", detail::vec3_to_json(l.position)},
                                     {"intensity", detail::spectrum_to_json(l.intensity)}});
        else
            doc["lights"].push_back({{"type", "directional"},
                                     {"direction", detail::vec3_to_json(l.direction)},
                                     {"irradiance", detail::spectrum_to_json(l.irradiance)}});
    }
    doc["meshes"] = json::array();
    for (const TriangleMesh& mesh : scene.meshes) {
        json jm;
        jm["material"] = mesh.material_id;
        jm["vertices"] = json::array();
        for (const Vec3d& v : mesh.vertices) jm["vertices"].push_back(detail::vec3_to_json(v));
        jm["indices"] = json::array();
        for (const auto& t : mesh.indices) jm["indices"].push_back({t[0], t[1], t[2]});
        if (!mesh.normals.empty()) {
            jm["normals"] = json::array();
            for (const Vec3d& n : mesh.normals) jm["normals"].push_back(detail::vec3_to_json(n));
        }
        doc["meshes"].push_back(std::move(jm));
    }
    if (!selector.empty()) {
        json params = json::array();
        for (const ParamEntry& e : selector.entries) {
            json je;
            switch (e.target) {
                case ParamTarget::MaterialRhoD:
                    je = {{"target", "material.rho_d"}, {"material", e.object}};
                    break;
                case ParamTarget::MaterialRhoS:
                    je = {{"target", "material.rho_s"}, {"material", e.object}};
                    break;
                case ParamTarget::MaterialShininess:
                    je = {{"target", "material.shininess"}, {"material", e.object}};
                    break;
                case ParamTarget::LightIntensity:
                    je = {{"target", "light.intensity"}, {"light", e.object}};
                    break;
                case ParamTarget::VertexPosition:
                    je = {{"target", "vertex.position"}, {"mesh", e.object},
                          {"vertex", e.element}};
                    break;
            }
            if (e.target != ParamTarget::MaterialShininess) je["component"] = e.component;
            params.push_back(std::move(je));
        }
        doc["optimize"] = {{"parameters", std::move(params)}};
    }
    return doc;
}

inline void save_scene(const std::string& path, const Scene& scene,
                       const ParameterSelector& selector = {}) {
    std::ofstream out(path);
    if (!out) throw IoError("save_scene: cannot open '" + path + "'");
    out << scene_to_json(scene, selector).dump(2) << "\n";
    if (!out) throw IoError("save_scene: write failed for '" + path + "'");
}

// --- Run configuration document

struct RunConfigDocument {
    OptimizeConfig optimize;  // includes the per-iteration RenderConfig
    std::optional<std::pair<int, int>> resolution;  // overrides camera width/height
};

inline RunConfigDocument parse_run_config(const json& doc) {
    using namespace detail;
    if (!doc.is_object()) throw ValidationError("config document: expected a JSON object");
    check_keys(doc, "config", {"schema_version", "render", "optimize"});
    if (doc.contains("schema_version") &&
        as_int(doc["schema_version"], "config.schema_version") != kSchemaVersion)
        throw ValidationError("config.schema_version: unsupported version");

    RunConfigDocument out;
    if (doc.contains("render")) {
        const json& r = doc["render"];
        check_keys(r, "config.render",
                   {"spp", "max_depth", "seed", "stratified", "resolution"});
        RenderConfig& rc = out.optimize.render;
        if (r.contains("spp")) rc.spp = as_int(r["spp"], "config.render.spp");
        if (r.contains("max_depth"))
            rc.max_depth = as_int(r["max_depth"], "config.render.max_depth");
        if (r.contains("seed")) {
            if (!r["seed"].is_number_integer())
                throw ValidationError("config.render.seed: expected an integer");
            rc.seed = r["seed"].get<uint64_t>();
        }
        if (r.contains("stratified"))
            rc.stratified = as_bool(r["stratified"], "config.render.stratified");
        if (r.contains("resolution")) {
            const json& res = r["resolution"];
            if (!res.is_array() || res.size() != 2)
                throw ValidationError("config.render.resolution: expected [width, height]");
            out.resolution = {as_int(res[0], "config.render.resolution"),
                              as_int(res[1], "config.render.resolution")};
            if (out.resolution->first < 1 || out.resolution->second < 1)
                throw ValidationError("config.render.resolution: must be >= 1");
        }
        validate_config(rc);
    }
    if (doc.contains("optimize")) {
        const json& o = doc["optimize"];
        check_keys(o, "config.optimize",
                   {"iterations", "eta", "beta1", "beta2", "epsilon", "smoothing_beta",
                    "smoothing_enabled", "reg_lambda", "convergence_tol",
                    "convergence_window"});
        OptimizeConfig& oc = out.optimize;
        if (o.contains("iterations"))
            oc.iterations = as_int(o["iterations"], "config.optimize.iterations");
        if (o.contains("eta")) oc.eta = as_number(o["eta"], "config.optimize.eta");
        if (o.contains("beta1")) oc.beta1 = as_number(o["beta1"], "config.optimize.beta1");
        if (o.contains("beta2")) oc.beta2 = as_number(o["beta2"], "config.optimize.beta2");
        if (o.contains("epsilon"))
            oc.epsilon = as_number(o["epsilon"], "config.optimize.epsilon");
        if (o.contains("smoothing_beta"))
            oc.smoothing_beta = as_number(o["smoothing_beta"], "config.optimize.smoothing_beta");
        if (o.contains("smoothing_enabled"))
            oc.smoothing_enabled =
                as_bool(o["smoothing_enabled"], "config.optimize.smoothing_enabled");
        if (o.contains("reg_lambda"))
            oc.reg_lambda = as_number(o["reg_lambda"], "config.optimize.reg_lambda");
        if (o.contains("convergence_tol"))
            oc.convergence_tol =
                as_number(o["convergence_tol"], "config.optimize.convergence_tol");
        if (o.contains("convergence_window"))
            oc.convergence_window =
                as_int(o["convergence_window"], "config.optimize.convergence_window");
        validate_config(oc);
    }
    return out;
}

inline RunConfigDocument load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("load_run_config: cannot open '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError("load_run_config: '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_run_config(doc);
}

// --- Run history: one JSON record per line so partial runs stay parseable.

inline void write_history(const std::string& path, const RunHistory& history) {
    std::ofstream out(path);
    if (!out) throw IoError("write_history: cannot open '" + path + "'");
    for (const IterationRecord& r : history.records) {
        json line = {{"t", r.t},
                     {"loss", r.loss},
                     {"theta", r.theta},
                     {"raw_grad", r.raw},
                     {"smoothed_grad", r.smoothed},
                     {"raw_grad_norm", r.raw_norm},
                     {"smoothed_grad_norm", r.smoothed_norm},
                     {"gn_running", r.gn_running},
                     {"wall_ms", r.wall_ms},
                     {"projections", r.projections}};
        out << line.dump() << "\n";
    }
    if (!out) throw IoError("write_history: write failed for '" + path + "'");
}

inline RunHistory read_history(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("read_history: cannot open '" + path + "'");
    RunHistory history;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw ValidationError("read_history: bad record in '" + path + "': " + e.what());
        }
        IterationRecord r;
        r.t = j.at("t").get<int>();
        r.loss = j.at("loss").get<double>();
        r.theta = j.at("theta").get<std::vector<double>>();
        r.raw = j.at("raw_grad").get<std::vector<double>>();
        r.smoothed = j.at("smoothed_grad").get<std::vector<double>>();
        r.raw_norm = j.at("raw_grad_norm").get<double>();
        r.smoothed_norm = j.at("smoothed_grad_norm").get<double>();
        r.gn_running = j.at("gn_running").get<double>();
        r.wall_ms = j.at("wall_ms").get<double>();
        r.projections = j.at("projections").get<int>();
        if (r.loss < history.best_loss) {
            history.best_loss = r.loss;
            history.best_t = r.t;
        }
        history.records.push_back(std::move(r));
    }
    return history;
}

}  // namespace drt
