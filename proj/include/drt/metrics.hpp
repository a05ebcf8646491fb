#pragma once

#include <vector>

#include "drt/render.hpp"

namespace drt {

// Mean over pixels and channels of the squared difference. This one kernel
// is both the optimization loss and the reconstruction-error metric.
inline double mse_loss(const Image& rendered, const Image& observed) {
    if (!rendered.same_size(observed))
        throw ValidationError("mse_loss: image dimensions differ");
    const size_t n = rendered.pixels.size();
    double sum = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const Spectrum d = rendered.pixels[i] - observed.pixels[i];
        sum += (d.r * d.r + d.g * d.g + d.b * d.b) / 3.0;
    }
    return sum / double(n);
}

// Reconstruction error; definitionally the same kernel as mse_loss.
inline double re_metric(const Image& ground_truth, const Image& rendered) {
    return mse_loss(rendered, ground_truth);
}

// Mean squared error over material parameters.
inline double mpea_metric(const std::vector<double>& p_gt, const std::vector<double>& p_est) {
    if (p_gt.size() != p_est.size())
        throw ValidationError("mpea_metric: parameter vectors differ in length");
    if (p_gt.empty()) throw ValidationError("mpea_metric: empty parameter vectors");
    double sum = 0.0;
    for (size_t i = 0; i < p_gt.size(); ++i) {
        const double d = p_gt[i] - p_est[i];
        sum += d * d;
    }
    return sum / double(p_gt.size());
}

// Loss against a set of target views of the same camera: mean of per-target
// MSE.
inline double loss_against_targets(const Image& rendered, const std::vector<Image>& targets) {
    if (targets.empty()) throw ValidationError("loss: at least one target is required");
    double sum = 0.0;
    for (const Image& t : targets) sum += mse_loss(rendered, t);
    return sum / double(targets.size());
}

struct MetricsReport {
    double re = 0.0;
    double mpea = 0.0;
    double gn = 0.0;
    int cs = 0;  // iterations to convergence
};

}  // namespace drt
