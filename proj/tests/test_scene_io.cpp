#include <catch_amalgamated.hpp>

#include <unistd.h>

#include <filesystem>
#include <fstream>

#include "drt/scene_io.hpp"
#include "test_scenes.hpp"

using namespace drt;
using namespace drt::testing;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("drt_scene_io_" + std::to_string(::getpid()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

const char* kMinimalScene = R"({
  "schema_version": 1,
  "camera": {"position": [0,0,4], "look_at": [0,0,0], "up": [0,1,0],
             "vertical_fov": 45.0, "width": 8, "height": 8},
  "materials": [{"rho_d": [0.6, 0.5, 0.4], "rho_s": [0.1, 0.1, 0.1], "shininess": 12.0}],
  "lights": [{"type": "point", "position": [0,0,3], "intensity": [5,5,5]}],
  "meshes": [{"material": 0,
              "vertices": [[-1,-1,0],[1,-1,0],[1,1,0]],
              "indices": [[0,1,2]]}]
})";

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

bool scenes_equal(const Scene& a, const Scene& b) {
    if (a.meshes.size() != b.meshes.size() || a.materials.size() != b.materials.size() ||
        a.lights.size() != b.lights.size())
        return false;
    if (a.camera.position.x != b.camera.position.x ||
        a.camera.vertical_fov != b.camera.vertical_fov || a.camera.width != b.camera.width ||
        a.camera.height != b.camera.height)
        return false;
    for (size_t i = 0; i < a.materials.size(); ++i)
        for (int c = 0; c < 3; ++c) {
            if (a.materials[i].rho_d[c] != b.materials[i].rho_d[c]) return false;
            if (a.materials[i].rho_s[c] != b.materials[i].rho_s[c]) return false;
            if (a.materials[i].shininess != b.materials[i].shininess) return false;
        }
    for (size_t i = 0; i < a.lights.size(); ++i) {
        if (a.lights[i].kind != b.lights[i].kind) return false;
        for (int c = 0; c < 3; ++c) {
            if (a.lights[i].intensity[c] != b.lights[i].intensity[c]) return false;
            if (a.lights[i].irradiance[c] != b.lights[i].irradiance[c]) return false;
        }
    }
    for (size_t m = 0; m < a.meshes.size(); ++m) {
        if (a.meshes[m].material_id != b.meshes[m].material_id) return false;
        if (a.meshes[m].vertices.size() != b.meshes[m].vertices.size()) return false;
        if (a.meshes[m].indices.size() != b.meshes[m].indices.size()) return false;
        for (size_t v = 0; v < a.meshes[m].vertices.size(); ++v)
            for (int c = 0; c < 3; ++c)
                if (a.meshes[m].vertices[v][c] != b.meshes[m].vertices[v][c]) return false;
        for (size_t t = 0; t < a.meshes[m].indices.size(); ++t)
            if (a.meshes[m].indices[t] != b.meshes[m].indices[t]) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("load_scene: minimal document") {
    TempDir tmp;
    const std::string path = tmp.file("min.json");
    write_file(path, kMinimalScene);
    const SceneDocument doc = load_scene(path);
    CHECK(doc.scene.meshes.size() == 1);
    CHECK(doc.scene.meshes[0].indices.size() == 1);
    CHECK(doc.scene.materials[0].shininess == 12.0);
    CHECK(doc.scene.lights[0].intensity.r == 5.0);
    CHECK(doc.selector.empty());
}

TEST_CASE("load_scene: energy violation names the constraint") {
    TempDir tmp;
    const std::string path = tmp.file("energy.json");
    std::string text = kMinimalScene;
    const size_t pos = text.find("[0.6, 0.5, 0.4]");
    text.replace(pos, 15, "[0.9, 0.9, 0.9]");
    const size_t pos2 = text.find("[0.1, 0.1, 0.1]");
    text.replace(pos2, 15, "[0.3, 0.3, 0.3]");
    write_file(path, text);
    CHECK_THROWS_WITH(load_scene(path), Catch::Matchers::ContainsSubstring("energy") &&
                                            Catch::Matchers::ContainsSubstring("materials[0]"));
}

TEST_CASE("load_scene: unknown keys are rejected with their path") {
    TempDir tmp;
    const std::string path = tmp.file("unknown.json");
    std::string text = kMinimalScene;
    text.replace(text.find("\"shininess\""), 11, "\"glossiness\"");
    write_file(path, text);
    CHECK_THROWS_WITH(load_scene(path),
                      Catch::Matchers::ContainsSubstring("glossiness") &&
                          Catch::Matchers::ContainsSubstring("materials[0]"));
}

TEST_CASE("load_scene: missing mesh file is reported") {
    TempDir tmp;
    const std::string path = tmp.file("meshref.json");
    std::string text = kMinimalScene;
    const size_t pos = text.find("\"vertices\"");
    const size_t end = text.find("]]", text.find("\"indices\"")) + 2;
    text.replace(pos, end - pos, "\"file\": \"does_not_exist.tri\"");
    write_file(path, text);
    CHECK_THROWS_WITH(load_scene(path),
                      Catch::Matchers::ContainsSubstring("does_not_exist.tri"));
}

TEST_CASE("load_scene: triangle-list mesh file") {
    TempDir tmp;
    write_file(tmp.file("tris.tri"),
               "-1 -1 0   1 -1 0   1 1 0\n"
               "-1 -1 0   1 1 0   -1 1 0\n");
    const std::string path = tmp.file("withfile.json");
    std::string text = kMinimalScene;
    const size_t pos = text.find("\"vertices\"");
    const size_t end = text.find("]]", text.find("\"indices\"")) + 2;
    text.replace(pos, end - pos, "\"file\": \"tris.tri\"");
    write_file(path, text);
    const SceneDocument doc = load_scene(path);
    CHECK(doc.scene.meshes[0].indices.size() == 2);
    CHECK(doc.scene.meshes[0].vertices.size() == 6);
}

TEST_CASE("save/load round trip is lossless field by field") {
    TempDir tmp;
    Scene scene = make_three_material_scene(24);
    scene.materials[0].rho_d = {0.123456789012345, 0.2, 0.3};
    scene.lights.push_back(Light{Light::Kind::Directional,
                                 {},
                                 {},
                                 normalize(Vec3d{0.3, -0.4, -0.85}),
                                 {0.7, 0.6, 0.5}});
    ParameterSelector sel;
    for (int c = 0; c < 3; ++c) sel.entries.push_back({ParamTarget::MaterialRhoD, 0, 0, c});
    sel.entries.push_back({ParamTarget::MaterialShininess, 1, 0, 0});
    sel.entries.push_back({ParamTarget::VertexPosition, 2, 1, 2});

    const std::string p1 = tmp.file("scene1.json");
    const std::string p2 = tmp.file("scene2.json");
    save_scene(p1, scene, sel);
    const SceneDocument doc1 = load_scene(p1);
    CHECK(scenes_equal(scene, doc1.scene));
    REQUIRE(doc1.selector.size() == sel.size());
    for (size_t i = 0; i < sel.size(); ++i) CHECK(doc1.selector.entries[i] == sel.entries[i]);

    save_scene(p2, doc1.scene, doc1.selector);
    const SceneDocument doc2 = load_scene(p2);
    CHECK(scenes_equal(doc1.scene, doc2.scene));
}

TEST_CASE("optimize block: selector expansion and initial overrides") {
    TempDir tmp;
    const std::string path = tmp.file("opt.json");
    std::string text = kMinimalScene;
    text.insert(text.rfind('}'), R"(,
  "optimize": {
    "parameters": [
      {"target": "material.rho_d", "material": 0},
      {"target": "light.intensity", "light": 0, "component": 1}
    ],
    "initial": [
      {"target": "material.rho_d", "material": 0, "value": 0.25}
    ]
  })");
    write_file(path, text);
    const SceneDocument doc = load_scene(path);
    REQUIRE(doc.selector.size() == 4);  // 3 rho_d channels + 1 intensity channel
    CHECK(doc.selector.entries[0].target == ParamTarget::MaterialRhoD);
    CHECK(doc.selector.entries[3].target == ParamTarget::LightIntensity);
    CHECK(doc.selector.entries[3].component == 1);
    for (int c = 0; c < 3; ++c) CHECK(doc.scene.materials[0].rho_d[c] == 0.25);
}

TEST_CASE("scene document rejects malformed structure") {
    TempDir tmp;
    const std::string path = tmp.file("bad.json");
    SECTION("not json") {
        write_file(path, "not json at all {");
        CHECK_THROWS_AS(load_scene(path), ValidationError);
    }
    SECTION("wrong schema version") {
        std::string text = kMinimalScene;
        text.replace(text.find("\"schema_version\": 1"), 19, "\"schema_version\": 9");
        write_file(path, text);
        CHECK_THROWS_WITH(load_scene(path),
                          Catch::Matchers::ContainsSubstring("schema_version"));
    }
    SECTION("bad index arity") {
        std::string text = kMinimalScene;
        text.replace(text.find("[[0,1,2]]"), 9, "[[0,1]]");
        write_file(path, text);
        CHECK_THROWS_AS(load_scene(path), ValidationError);
    }
    SECTION("missing file entirely") {
        CHECK_THROWS_AS(load_scene(tmp.file("absent.json")), IoError);
    }
}

TEST_CASE("run config: defaults, overrides, validation") {
    TempDir tmp;
    const std::string path = tmp.file("cfg.json");
    SECTION("full document") {
        write_file(path, R"({
          "render": {"spp": 64, "max_depth": 2, "seed": 7, "stratified": false,
                     "resolution": [32, 24]},
          "optimize": {"iterations": 120, "eta": 0.05, "smoothing_beta": 0.6,
                       "reg_lambda": 0.01, "convergence_tol": 1e-4}
        })");
        const RunConfigDocument cfg = load_run_config(path);
        CHECK(cfg.optimize.render.spp == 64);
        CHECK(cfg.optimize.render.max_depth == 2);
        CHECK(cfg.optimize.render.seed == 7);
        CHECK(cfg.optimize.render.stratified == false);
        REQUIRE(cfg.resolution);
        CHECK(cfg.resolution->first == 32);
        CHECK(cfg.resolution->second == 24);
        CHECK(cfg.optimize.iterations == 120);
        CHECK(cfg.optimize.eta == 0.05);
        CHECK(cfg.optimize.smoothing_beta == 0.6);
        CHECK(cfg.optimize.reg_lambda == 0.01);
        CHECK(cfg.optimize.convergence_tol == 1e-4);
        // untouched fields keep their defaults
        CHECK(cfg.optimize.beta1 == 0.9);
        CHECK(cfg.optimize.smoothing_enabled == true);
    }
    SECTION("ranges are validated at parse time") {
        write_file(path, R"({"render": {"spp": 0}})");
        CHECK_THROWS_AS(load_run_config(path), ValidationError);
        write_file(path, R"({"optimize": {"beta1": 1.0}})");
        CHECK_THROWS_AS(load_run_config(path), ValidationError);
        write_file(path, R"({"render": {"sppp": 4}})");
        CHECK_THROWS_WITH(load_run_config(path),
                          Catch::Matchers::ContainsSubstring("sppp"));
    }
}

TEST_CASE("history: line-delimited records round trip") {
    TempDir tmp;
    RunHistory h;
    for (int t = 1; t <= 3; ++t) {
        IterationRecord r;
        r.t = t;
        r.loss = 1.0 / t;
        r.theta = {0.1 * t, 0.2};
        r.raw = {0.01 * t, -0.02};
        r.smoothed = {0.005 * t, -0.01};
        r.raw_norm = l2_norm(r.raw);
        r.smoothed_norm = l2_norm(r.smoothed);
        r.gn_running = 0.001 * t;
        r.wall_ms = 12.5;
        r.projections = t % 2;
        h.records.push_back(r);
    }
    const std::string path = tmp.file("run.log");
    write_history(path, h);

    // every line parses on its own (partial runs stay usable)
    std::ifstream in(path);
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) {
        CHECK_NOTHROW(json::parse(line));
        ++lines;
    }
    CHECK(lines == 3);

    const RunHistory back = read_history(path);
    REQUIRE(back.records.size() == 3);
    CHECK(back.records[1].loss == 0.5);
    CHECK(back.records[2].theta[0] == Catch::Approx(0.3).epsilon(1e-15));
    CHECK(back.records[0].raw == h.records[0].raw);
    CHECK(back.best_t == 3);
    CHECK(gn_metric(back) == Catch::Approx(gn_metric(h)).epsilon(1e-15));
}
