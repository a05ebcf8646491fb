#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include "drt/optim.hpp"

namespace drt {

struct AblationRow {
    std::string method;
    double re = 0.0;       // final render vs first target
    int cs = 0;            // iterations to convergence (cap when never reached)
    double gn = 0.0;
    double final_loss = 0.0;
};

// Runs {full, no-smoothing, no-regularization} with identical seeds and
// initialization; rows mirror the ablation table (RE, CS).
inline std::vector<AblationRow> run_ablation(const Scene& initial,
                                             const ParameterSelector& selector,
                                             const std::vector<Image>& targets,
                                             const OptimizeConfig& cfg) {
    struct Variant {
        const char* name;
        bool smoothing;
        double lambda;
    };
    const Variant variants[] = {
        {"full", cfg.smoothing_enabled, cfg.reg_lambda},
        {"no smoothing", false, cfg.reg_lambda},
        {"no regularization", cfg.smoothing_enabled, 0.0},
    };

    std::vector<AblationRow> rows;
    for (const Variant& v : variants) {
        OptimizeConfig run_cfg = cfg;
        run_cfg.smoothing_enabled = v.smoothing;
        run_cfg.reg_lambda = v.lambda;
        auto [final_scene, history] = reconstruct(initial, selector, targets, run_cfg);

        // All rows are evaluated with the same render seed.
        RenderConfig eval = cfg.render;
        const Image rendered = render(final_scene, eval);

        AblationRow row;
        row.method = v.name;
        row.re = re_metric(targets.front(), rendered);
        row.cs = history.converged() ? history.converged_at : cfg.iterations;
        row.gn = gn_metric(history);
        row.final_loss = history.best_loss;
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::string format_ablation_table(const std::vector<AblationRow>& rows) {
    char buf[128];
    std::string out = "method                Reconstruction Error (RE)  Convergence Speed (CS)\n";
    for (const AblationRow& r : rows) {
        std::snprintf(buf, sizeof(buf), "%-21s %-26.6g %d\n", r.method.c_str(), r.re, r.cs);
        out += buf;
    }
    return out;
}

}  // namespace drt
