#pragma once

#include <chrono>
#include <cmath>
#include <optional>
#include <vector>

#include "drt/grad.hpp"
#include "drt/metrics.hpp"
#include "drt/params.hpp"

namespace drt {

struct AdamState {
    std::vector<double> m;  // first-moment accumulator
    std::vector<double> v;  // second-moment accumulator
    long t = 0;
    double eta = 0.02;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    long zeroed_components = 0;  // non-finite gradient entries treated as 0

    explicit AdamState(size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

// One Adam update: bias-corrected moments, epsilon inside the square root.
inline std::vector<double> adam_step(AdamState& state, const std::vector<double>& theta,
                                     const std::vector<double>& grad) {
    if (theta.size() != grad.size())
        throw ValidationError("adam_step: theta and gradient lengths differ");
    if (state.m.size() != theta.size()) {
        if (state.t != 0)
            throw ValidationError("adam_step: state length does not match theta");
        state.m.assign(theta.size(), 0.0);
        state.v.assign(theta.size(), 0.0);
    }
    ++state.t;
    const double bc1 = 1.0 - std::pow(state.beta1, double(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, double(state.t));
    std::vector<double> out(theta.size());
    for (size_t i = 0; i < theta.size(); ++i) {
        double g = grad[i];
        if (!std::isfinite(g)) {
            g = 0.0;
            ++state.zeroed_components;
        }
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
        const double m_hat = state.m[i] / bc1;
        const double v_hat = state.v[i] / bc2;
        out[i] = theta[i] - state.eta * m_hat / std::sqrt(v_hat + state.epsilon);
    }
    return out;
}

// Exponential moving average of the raw gradient stream. The first call (no
// previous state) passes the raw gradient through unchanged.
inline std::vector<double> smooth_gradient(const std::vector<double>& raw,
                                           const std::optional<std::vector<double>>& prev,
                                           double beta) {
    if (!prev) return raw;
    if (prev->size() != raw.size())
        throw ValidationError("smooth_gradient: state length does not match gradient");
    std::vector<double> out(raw.size());
    for (size_t i = 0; i < raw.size(); ++i)
        out[i] = beta * (*prev)[i] + (1.0 - beta) * raw[i];
    return out;
}

// L2 pull of material parameters toward a prior; vertex and light components
// pass through untouched.
inline std::vector<double> regularize(const ParameterVector& theta,
                                      const std::vector<double>& grad, double lambda,
                                      const ParameterVector& prior) {
    if (grad.size() != theta.values.size() || prior.values.size() != theta.values.size())
        throw ValidationError("regularize: length mismatch");
    std::vector<double> out = grad;
    if (lambda == 0.0) return out;
    for (size_t i = 0; i < out.size(); ++i)
        if (is_material_target(theta.selector.entries[i].target))
            out[i] += 2.0 * lambda * (theta.values[i] - prior.values[i]);
    return out;
}

struct OptimizeConfig {
    int iterations = 200;
    double eta = 0.02;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double smoothing_beta = 0.5;
    bool smoothing_enabled = true;
    double reg_lambda = 1e-3;
    double convergence_tol = 1e-5;  // relative loss change over the window
    int convergence_window = 10;
    RenderConfig render;
};

inline void validate_config(const OptimizeConfig& cfg) {
    validate_config(cfg.render);
    if (cfg.iterations < 1) throw ValidationError("optimize config: iterations must be >= 1");
    if (!(cfg.eta > 0.0)) throw ValidationError("optimize config: eta must be > 0");
    for (double b : {cfg.beta1, cfg.beta2, cfg.smoothing_beta})
        if (!(b >= 0.0 && b < 1.0))
            throw ValidationError("optimize config: decay rates must be in [0, 1)");
    if (cfg.reg_lambda < 0.0)
        throw ValidationError("optimize config: reg_lambda must be >= 0");
    if (!(cfg.convergence_tol > 0.0))
        throw ValidationError("optimize config: convergence_tol must be > 0");
}

struct IterationRecord {
    int t = 0;
    double loss = 0.0;
    std::vector<double> theta;     // parameters the loss was evaluated at
    std::vector<double> raw;       // unsmoothed gradient g_t
    std::vector<double> smoothed;  // gradient after EMA smoothing
    double raw_norm = 0.0;
    double smoothed_norm = 0.0;
    double gn_running = 0.0;  // mean of ||smoothed - raw||^2 up to t
    double wall_ms = 0.0;
    int projections = 0;
};

struct RunHistory {
    std::vector<IterationRecord> records;
    int converged_at = -1;  // first iteration meeting the window criterion, -1 if never
    int best_t = -1;
    double best_loss = kInfinity;

    bool converged() const { return converged_at >= 0; }
};

// Gradient-noise metric: mean over iterations of the squared distance
// between smoothed and raw gradients.
inline double gn_metric(const RunHistory& history) {
    if (history.records.empty())
        throw ValidationError("gn_metric: history has no iterations");
    double sum = 0.0;
    for (const IterationRecord& r : history.records) {
        if (r.raw.size() != r.smoothed.size() || r.raw.empty())
            throw ValidationError("gn_metric: iteration is missing gradient records");
        for (size_t i = 0; i < r.raw.size(); ++i) {
            const double d = r.smoothed[i] - r.raw[i];
            sum += d * d;
        }
    }
    return sum / double(history.records.size());
}

// Convergence rule: first t where every loss across the trailing window of
// `window` iterations stays within a relative tol of the window's start.
// Losses are Monte Carlo estimates; demanding a stable stretch rather than a
// single coincidental pair keeps noise from triggering early.
inline int detect_convergence(const std::vector<double>& losses, double tol, int window) {
    for (size_t t = size_t(window); t < losses.size(); ++t) {
        const size_t start = t - size_t(window);
        const double ref = std::max(std::abs(losses[start]), 1e-12);
        bool stable = true;
        for (size_t tau = start + 1; tau <= t && stable; ++tau)
            stable = std::abs(losses[tau] - losses[start]) / ref < tol;
        if (stable) return int(t) + 1;
    }
    return -1;
}

inline double l2_norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

inline double sq_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

// The reconstruction loop: render, loss + gradients, smoothing,
// regularization, Adam update with projection, until the loss converges or
// the iteration budget runs out. Each iteration renders with a fresh
// deterministic seed; the returned scene is the lowest-loss iterate.
inline std::pair<Scene, RunHistory> reconstruct(const Scene& initial,
                                                const ParameterSelector& selector,
                                                const std::vector<Image>& targets,
                                                const OptimizeConfig& cfg) {
    validate_config(cfg);
    validate_scene(initial);
    if (targets.empty()) throw ValidationError("reconstruct: at least one target is required");

    Scene scene = initial;
    ParameterVector theta = flatten(scene, selector);
    const ParameterVector prior = theta;

    AdamState adam(theta.size());
    adam.eta = cfg.eta;
    adam.beta1 = cfg.beta1;
    adam.beta2 = cfg.beta2;
    adam.epsilon = cfg.epsilon;

    RunHistory history;
    std::optional<std::vector<double>> ema_state;
    std::vector<double> best_theta = theta.values;
    std::vector<double> losses;
    double gn_sum = 0.0;

    for (int t = 1; t <= cfg.iterations; ++t) {
        const auto t0 = std::chrono::steady_clock::now();

        RenderConfig rc = cfg.render;
        rc.seed = cfg.render.seed + uint64_t(t);
        const GradientRenderResult res = render_with_gradients(scene, theta, targets, rc);

        std::vector<double> smoothed = cfg.smoothing_enabled
                                           ? smooth_gradient(res.grad, ema_state, cfg.smoothing_beta)
                                           : res.grad;
        if (cfg.smoothing_enabled) ema_state = smoothed;

        const std::vector<double> descent =
            regularize(theta, smoothed, cfg.reg_lambda, prior);

        IterationRecord rec;
        rec.t = t;
        rec.loss = res.loss;
        rec.theta = theta.values;
        rec.raw = res.grad;
        rec.smoothed = smoothed;
        rec.raw_norm = l2_norm(res.grad);
        rec.smoothed_norm = l2_norm(smoothed);
        gn_sum += sq_distance(smoothed, res.grad);
        rec.gn_running = gn_sum / double(t);

        if (res.loss < history.best_loss) {
            history.best_loss = res.loss;
            history.best_t = t;
            best_theta = theta.values;
        }
        losses.push_back(res.loss);

        // Update parameters for the next iteration.
        ParameterVector next = theta;
        next.values = adam_step(adam, theta.values, descent);
        ProjectionReport proj;
        scene = apply(scene, next, &proj);
        theta = flatten(scene, selector);  // re-read projected values
        rec.projections = proj.clamped + proj.rescaled;

        rec.wall_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
        history.records.push_back(std::move(rec));

        if (res.loss <= 1e-12) {
            history.converged_at = t;
            break;
        }
        const int conv = detect_convergence(losses, cfg.convergence_tol,
                                            cfg.convergence_window);
        if (conv >= 0) {
            history.converged_at = conv;
            break;
        }
    }

    ParameterVector best = theta;
    best.values = best_theta;
    Scene final_scene = apply(initial, best);
    return {std::move(final_scene), std::move(history)};
}

}  // namespace drt
