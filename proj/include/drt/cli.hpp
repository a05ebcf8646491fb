#pragma once

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "drt/ablation.hpp"
#include "drt/grad.hpp"
#include "drt/image_io.hpp"
#include "drt/metrics.hpp"
#include "drt/optim.hpp"
#include "drt/scene_io.hpp"

namespace drt {

namespace detail {

inline std::vector<double> load_param_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open parameter file '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError("parameter file '" + path + "' is not valid JSON: " + e.what());
    }
    if (!j.is_array()) throw ValidationError("parameter file '" + path + "': expected an array");
    std::vector<double> out;
    for (const auto& v : j) {
        if (!v.is_number())
            throw ValidationError("parameter file '" + path + "': expected numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

inline RunConfigDocument load_config_or_default(const std::string& path) {
    if (path.empty()) return RunConfigDocument{};
    return load_run_config(path);
}

inline void apply_resolution(Scene& scene, const RunConfigDocument& cfg) {
    if (cfg.resolution) {
        scene.camera.width = cfg.resolution->first;
        scene.camera.height = cfg.resolution->second;
    }
}

}  // namespace detail

inline int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"drt: differentiable path tracer and inverse-rendering optimizer"};
    app.require_subcommand(1);
    // long-form help only; gradcheck uses --h for the step size
    app.set_help_flag("--help", "print usage");

    // render
    auto* render_cmd = app.add_subcommand("render", "render a scene to a PFM image");
    std::string r_scene, r_config, r_out, r_png;
    render_cmd->add_option("--scene", r_scene, "scene JSON document")->required();
    render_cmd->add_option("--config", r_config, "run configuration JSON");
    render_cmd->add_option("--out", r_out, "output PFM path")->required();
    render_cmd->add_option("--png", r_png, "optional 8-bit sRGB preview PNG");

    // optimize
    auto* opt_cmd = app.add_subcommand("optimize", "recover scene parameters from targets");
    std::string o_scene, o_config, o_out_scene, o_history;
    std::vector<std::string> o_targets;
    opt_cmd->add_option("--scene", o_scene, "initial scene JSON (with optimize block)")
        ->required();
    opt_cmd->add_option("--target", o_targets, "target PFM image (repeatable)")->required();
    opt_cmd->add_option("--config", o_config, "run configuration JSON");
    opt_cmd->add_option("--out-scene", o_out_scene, "path for the recovered scene JSON");
    opt_cmd->add_option("--history", o_history, "line-delimited iteration log");

    // gradcheck
    auto* gc_cmd = app.add_subcommand("gradcheck",
                                      "compare adjoint gradients against finite differences");
    gc_cmd->set_help_flag("--help", "print usage");
    std::string g_scene, g_config;
    double g_h = 0.0;
    double g_threshold = 0.0;
    gc_cmd->add_option("--scene", g_scene, "scene JSON (with optimize block)")->required();
    gc_cmd->add_option("--config", g_config, "run configuration JSON");
    gc_cmd->add_option("--h", g_h, "finite-difference step override");
    gc_cmd->add_option("--threshold", g_threshold,
                       "relative-error threshold override for all parameters");

    // metrics
    auto* met_cmd = app.add_subcommand("metrics", "compute RE/MPEA from PFM images");
    std::string m_gt, m_render, m_params_gt, m_params_est, m_history, m_out;
    met_cmd->add_option("--gt", m_gt, "ground-truth PFM")->required();
    met_cmd->add_option("--render", m_render, "rendered PFM")->required();
    met_cmd->add_option("--params-gt", m_params_gt, "JSON array of true material parameters");
    met_cmd->add_option("--params-est", m_params_est,
                        "JSON array of estimated material parameters");
    met_cmd->add_option("--history", m_history, "iteration log; adds the GN metric");
    met_cmd->add_option("--out", m_out, "write the report as JSON");

    // ablate
    auto* ab_cmd = app.add_subcommand("ablate",
                                      "run {full, no-smoothing, no-regularization} and tabulate");
    std::string a_scene, a_config;
    std::vector<std::string> a_targets;
    ab_cmd->add_option("--scene", a_scene, "initial scene JSON (with optimize block)")
        ->required();
    ab_cmd->add_option("--target", a_targets, "target PFM image (repeatable)")->required();
    ab_cmd->add_option("--config", a_config, "run configuration JSON");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help();
        return 2;
    }

    try {
        if (render_cmd->parsed()) {
            const RunConfigDocument cfg = detail::load_config_or_default(r_config);
            SceneDocument doc = load_scene(r_scene);
            detail::apply_resolution(doc.scene, cfg);
            const Image img = render(doc.scene, cfg.optimize.render);
            write_image_pfm(img, r_out);
            if (!r_png.empty()) write_image_png(img, r_png);
            std::printf("rendered %dx%d at %d spp -> %s\n", img.width, img.height,
                        cfg.optimize.render.spp, r_out.c_str());
            return 0;
        }

        if (opt_cmd->parsed()) {
            const RunConfigDocument cfg = detail::load_config_or_default(o_config);
            SceneDocument doc = load_scene(o_scene);
            detail::apply_resolution(doc.scene, cfg);
            if (doc.selector.empty())
                throw ValidationError("optimize: the scene has no optimize.parameters block");
            std::vector<Image> targets;
            for (const std::string& t : o_targets) targets.push_back(read_image_pfm(t));
            auto [final_scene, history] = reconstruct(doc.scene, doc.selector, targets,
                                                      cfg.optimize);
            if (!o_history.empty()) write_history(o_history, history);
            if (!o_out_scene.empty()) save_scene(o_out_scene, final_scene, doc.selector);
            std::printf("iterations: %zu\n", history.records.size());
            std::printf("converged at: %s\n",
                        history.converged() ? std::to_string(history.converged_at).c_str()
                                            : "not converged");
            std::printf("best loss: %.8g (iteration %d)\n", history.best_loss,
                        history.best_t);
            return 0;
        }

        if (gc_cmd->parsed()) {
            const RunConfigDocument cfg = detail::load_config_or_default(g_config);
            SceneDocument doc = load_scene(g_scene);
            detail::apply_resolution(doc.scene, cfg);
            if (doc.selector.empty())
                throw ValidationError("gradcheck: the scene has no optimize.parameters block");

            // Self-generated target: the same scene rendered with a shifted
            // seed, so residuals are nonzero but structuring is identical.
            RenderConfig target_cfg = cfg.optimize.render;
            target_cfg.seed += 1;
            const std::vector<Image> targets = {render(doc.scene, target_cfg)};

            const ParameterVector theta = flatten(doc.scene, doc.selector);
            const std::optional<double> h =
                g_h > 0.0 ? std::optional<double>(g_h) : std::nullopt;
            const double tol_ml = g_threshold > 0.0 ? g_threshold : 1e-2;
            const double tol_v = g_threshold > 0.0 ? g_threshold : 5e-2;
            const GradcheckReport report =
                gradcheck(doc.scene, theta, targets, cfg.optimize.render, h, tol_ml, tol_v);

            std::printf("%-28s %16s %16s %12s\n", "parameter", "adjoint", "finite-diff",
                        "rel-error");
            for (const GradcheckRow& row : report.rows)
                std::printf("%-28s %16.8g %16.8g %12.4g\n", row.name.c_str(), row.adjoint,
                            row.finite_diff, row.rel_error);
            std::printf("cosine similarity: %.6f\n", report.cosine_similarity);
            std::printf("max rel error: material/light %.4g, vertex %.4g\n",
                        report.max_rel_material_light, report.max_rel_vertex);
            std::printf("%s\n", report.pass ? "PASS" : "FAIL");
            return report.pass ? 0 : 1;
        }

        if (met_cmd->parsed()) {
            const Image gt = read_image_pfm(m_gt);
            const Image rendered = read_image_pfm(m_render);
            MetricsReport report;
            report.re = re_metric(gt, rendered);
            json out = {{"re", report.re}};
            std::printf("%-8s %s\n", "metric", "value");
            std::printf("%-8s %.8g\n", "RE", report.re);
            if (!m_params_gt.empty() || !m_params_est.empty()) {
                if (m_params_gt.empty() || m_params_est.empty())
                    throw ValidationError(
                        "metrics: --params-gt and --params-est must be given together");
                report.mpea = mpea_metric(detail::load_param_file(m_params_gt),
                                          detail::load_param_file(m_params_est));
                std::printf("%-8s %.8g\n", "MPEA", report.mpea);
                out["mpea"] = report.mpea;
            }
            if (!m_history.empty()) {
                report.gn = gn_metric(read_history(m_history));
                std::printf("%-8s %.8g\n", "GN", report.gn);
                out["gn"] = report.gn;
            }
            if (!m_out.empty()) {
                std::ofstream f(m_out);
                if (!f) throw IoError("metrics: cannot open '" + m_out + "'");
                f << out.dump(2) << "\n";
            }
            return 0;
        }

        if (ab_cmd->parsed()) {
            const RunConfigDocument cfg = detail::load_config_or_default(a_config);
            SceneDocument doc = load_scene(a_scene);
            detail::apply_resolution(doc.scene, cfg);
            if (doc.selector.empty())
                throw ValidationError("ablate: the scene has no optimize.parameters block");
            std::vector<Image> targets;
            for (const std::string& t : a_targets) targets.push_back(read_image_pfm(t));
            const std::vector<AblationRow> rows =
                run_ablation(doc.scene, doc.selector, targets, cfg.optimize);
            std::fputs(format_ablation_table(rows).c_str(), stdout);
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

inline int run_cli(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_cli(args);
}

}  // namespace drt
