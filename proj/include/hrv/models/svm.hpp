#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "hrv/models/common.hpp"
#include "hrv/rng.hpp"

namespace hrv {

// Linear SVM by dual coordinate descent on the L2-regularized, class-weighted
// hinge loss (per-sample box C_i = C * w_class). The bias is an augmented
// constant feature. Stopping rule: maximal projected-gradient violation
// below the tolerance.
inline TrainedModel train_svm(const std::vector<FeatureWindow>& rows, const ClassWeights& weights,
                              std::uint64_t seed, const SvmParams& params = {}) {
    const TrainingData data = TrainingData::from_rows(rows);
    data.require_two_classes();

    const std::size_t n = data.x.size();
    const std::size_t dim = kFeatureCount + 1;  // augmented bias feature

    std::vector<double> y(n), qd(n), box(n), alpha(n, 0.0), w(dim, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = data.y[i] ? 1.0 : -1.0;
        double sq = 1.0;  // bias feature contributes 1
        for (double v : data.x[i]) sq += v * v;
        qd[i] = sq;
        box[i] = params.c * weights.of(data.y[i]);
    }

    auto dot_w = [&](std::size_t i) {
        double d = w[kFeatureCount];
        for (std::size_t f = 0; f < kFeatureCount; ++f) d += w[f] * data.x[i][f];
        return d;
    };

    Rng rng(derive_seed(seed, "svm"));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    double max_violation = 0.0;
    bool converged = false;
    for (int pass = 0; pass < params.max_passes; ++pass) {
        rng.shuffle(order);
        max_violation = 0.0;
        for (std::size_t i : order) {
            const double g = y[i] * dot_w(i) - 1.0;
            double pg = g;
            if (alpha[i] <= 0.0) pg = std::min(g, 0.0);
            else if (alpha[i] >= box[i]) pg = std::max(g, 0.0);
            max_violation = std::max(max_violation, std::abs(pg));
            if (pg == 0.0) continue;

            const double old = alpha[i];
            alpha[i] = std::clamp(old - g / qd[i], 0.0, box[i]);
            const double delta = (alpha[i] - old) * y[i];
            if (delta != 0.0) {
                for (std::size_t f = 0; f < kFeatureCount; ++f) w[f] += delta * data.x[i][f];
                w[kFeatureCount] += delta;
            }
        }
        if (max_violation < params.tolerance) {
            converged = true;
            break;
        }
    }
    if (!converged)
        throw ConvergenceError("SVM did not converge within " + std::to_string(params.max_passes) +
                               " passes; final projected-gradient violation " +
                               std::to_string(max_violation));

    TrainedModel model;
    model.kind = ModelKind::SVM;
    model.hyperparams.svm = params;
    model.meta.seed = seed;
    const auto& canon = feature_names();
    model.feature_names_.assign(canon.begin(), canon.end());
    for (std::size_t f = 0; f < kFeatureCount; ++f) model.svm.weights[f] = w[f];
    model.svm.bias = w[kFeatureCount];
    return model;
}

}  // namespace hrv
