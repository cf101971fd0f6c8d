#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "hrv/models/common.hpp"
#include "hrv/rng.hpp"

namespace hrv {

namespace detail {

struct MlpGradient {
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;

    static MlpGradient zeros_like(const MlpModelData& m) {
        MlpGradient g;
        for (const auto& w : m.weights) g.weights.emplace_back(w.size(), 0.0);
        for (const auto& b : m.biases) g.biases.emplace_back(b.size(), 0.0);
        return g;
    }
};

// Forward + backward for one batch of the weighted binary cross-entropy.
// loss = sum_i cw(y_i) * bce_i / batch_size. `input_keep` is the inverted
// dropout mask applied to the input layer (empty = dropout disabled).
inline double mlp_loss_and_gradient(const MlpModelData& m,
                                    const std::vector<std::array<double, kFeatureCount>>& x,
                                    const std::vector<int>& y, const ClassWeights& cw,
                                    MlpGradient* grad,
                                    const std::vector<std::vector<double>>& input_keep = {}) {
    const std::size_t n_layers = m.weights.size();
    const double inv_n = 1.0 / static_cast<double>(x.size());
    double loss = 0.0;

    std::vector<std::vector<double>> act(n_layers + 1), pre(n_layers);
    for (std::size_t s = 0; s < x.size(); ++s) {
        act[0].assign(x[s].begin(), x[s].end());
        if (!input_keep.empty())
            for (std::size_t i = 0; i < act[0].size(); ++i) act[0][i] *= input_keep[s][i];

        for (std::size_t l = 0; l < n_layers; ++l) {
            const std::size_t n_in = act[l].size();
            const std::size_t n_out = m.biases[l].size();
            pre[l].assign(n_out, 0.0);
            act[l + 1].assign(n_out, 0.0);
            for (std::size_t o = 0; o < n_out; ++o) {
                double z = m.biases[l][o];
                for (std::size_t i = 0; i < n_in; ++i) z += m.weights[l][o * n_in + i] * act[l][i];
                pre[l][o] = z;
                act[l + 1][o] = l + 1 < n_layers ? std::max(0.0, z) : sigmoid(z);
            }
        }

        const double p = act[n_layers][0];
        const double t = y[s] ? 1.0 : 0.0;
        const double w = cw.of(y[s]);
        constexpr double eps = 1e-12;
        loss += w * -(t * std::log(p + eps) + (1.0 - t) * std::log(1.0 - p + eps)) * inv_n;

        if (!grad) continue;

        // delta at the sigmoid output collapses to (p - t)
        std::vector<double> delta{w * (p - t) * inv_n};
        for (std::size_t l = n_layers; l-- > 0;) {
            const std::size_t n_in = act[l].size();
            const std::size_t n_out = delta.size();
            for (std::size_t o = 0; o < n_out; ++o) {
                grad->biases[l][o] += delta[o];
                for (std::size_t i = 0; i < n_in; ++i)
                    grad->weights[l][o * n_in + i] += delta[o] * act[l][i];
            }
            if (l == 0) break;
            std::vector<double> prev(n_in, 0.0);
            for (std::size_t i = 0; i < n_in; ++i) {
                double acc = 0.0;
                for (std::size_t o = 0; o < n_out; ++o)
                    acc += m.weights[l][o * n_in + i] * delta[o];
                prev[i] = pre[l - 1][i] > 0.0 ? acc : 0.0;
            }
            delta = std::move(prev);
        }
    }
    return loss;
}

inline MlpModelData mlp_init(const MlpParams& params, Rng& rng) {
    MlpModelData m;
    m.layer_sizes = {static_cast<int>(kFeatureCount)};
    for (int h : params.hidden) m.layer_sizes.push_back(h);
    m.layer_sizes.push_back(1);
    for (std::size_t l = 0; l + 1 < m.layer_sizes.size(); ++l) {
        const auto n_in = static_cast<std::size_t>(m.layer_sizes[l]);
        const auto n_out = static_cast<std::size_t>(m.layer_sizes[l + 1]);
        const double bound = 1.0 / std::sqrt(static_cast<double>(n_in));
        std::vector<double> w(n_in * n_out);
        for (double& v : w) v = rng.uniform(-bound, bound);
        m.weights.push_back(std::move(w));
        m.biases.emplace_back(n_out, 0.0);
    }
    return m;
}

}  // namespace detail

// 22 -> dropout(0.2) -> 12 ReLU -> 6 ReLU -> 1 sigmoid, trained with SGD
// (lr 0.001, batch 256) on class-weighted BCE. Early stopping on a seeded
// stratified 20% validation split, patience 15, best weights restored.
inline TrainedModel train_mlp(const std::vector<FeatureWindow>& rows, const ClassWeights& weights,
                              std::uint64_t seed, const MlpParams& params = {}) {
    const TrainingData data = TrainingData::from_rows(rows);
    data.require_two_classes();
    if (data.x.size() < 20)
        throw InsufficientDataError("MLP training needs at least 20 samples");

    Rng rng(derive_seed(seed, "mlp"));
    MlpModelData net = detail::mlp_init(params, rng);

    // stratified validation split
    std::vector<std::size_t> idx0, idx1;
    for (std::size_t i = 0; i < data.x.size(); ++i) (data.y[i] ? idx1 : idx0).push_back(i);
    rng.shuffle(idx0);
    rng.shuffle(idx1);
    std::vector<std::size_t> train_idx, val_idx;
    auto split = [&](std::vector<std::size_t>& idx) {
        const auto n_val = std::max<std::size_t>(
            1, static_cast<std::size_t>(params.validation_fraction *
                                        static_cast<double>(idx.size())));
        for (std::size_t i = 0; i < idx.size(); ++i)
            (i < n_val ? val_idx : train_idx).push_back(idx[i]);
    };
    split(idx0);
    split(idx1);
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(val_idx.begin(), val_idx.end());

    std::vector<std::array<double, kFeatureCount>> val_x;
    std::vector<int> val_y;
    for (std::size_t i : val_idx) {
        val_x.push_back(data.x[i]);
        val_y.push_back(data.y[i]);
    }

    double best_val = std::numeric_limits<double>::infinity();
    MlpModelData best = net;
    int since_best = 0;
    const double keep_scale = 1.0 / (1.0 - params.dropout);

    // Adam state; the configured learning rate is an Adam step size (plain
    // SGD cannot converge at 0.001 within the epoch budget)
    auto m1 = detail::MlpGradient::zeros_like(net);
    auto m2 = detail::MlpGradient::zeros_like(net);
    constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kAdamEps = 1e-8;
    long step = 0;

    for (int epoch = 0; epoch < params.max_epochs; ++epoch) {
        rng.shuffle(train_idx);
        for (std::size_t start = 0; start < train_idx.size();
             start += static_cast<std::size_t>(params.batch_size)) {
            const std::size_t end =
                std::min(train_idx.size(), start + static_cast<std::size_t>(params.batch_size));
            std::vector<std::array<double, kFeatureCount>> bx;
            std::vector<int> by;
            std::vector<std::vector<double>> keep;
            for (std::size_t k = start; k < end; ++k) {
                bx.push_back(data.x[train_idx[k]]);
                by.push_back(data.y[train_idx[k]]);
                std::vector<double> mask(kFeatureCount);
                for (double& v : mask)
                    v = rng.uniform() < params.dropout ? 0.0 : keep_scale;
                keep.push_back(std::move(mask));
            }
            auto grad = detail::MlpGradient::zeros_like(net);
            const double loss = detail::mlp_loss_and_gradient(net, bx, by, weights, &grad, keep);
            if (!std::isfinite(loss)) throw DivergenceError("training loss became non-finite");
            ++step;
            const double corr1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
            const double corr2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
            auto adam_update = [&](double& p, double g, double& m, double& v) {
                m = kBeta1 * m + (1.0 - kBeta1) * g;
                v = kBeta2 * v + (1.0 - kBeta2) * g * g;
                p -= params.learning_rate * (m / corr1) /
                     (std::sqrt(v / corr2) + kAdamEps);
            };
            for (std::size_t l = 0; l < net.weights.size(); ++l) {
                for (std::size_t i = 0; i < net.weights[l].size(); ++i)
                    adam_update(net.weights[l][i], grad.weights[l][i], m1.weights[l][i],
                                m2.weights[l][i]);
                for (std::size_t i = 0; i < net.biases[l].size(); ++i)
                    adam_update(net.biases[l][i], grad.biases[l][i], m1.biases[l][i],
                                m2.biases[l][i]);
            }
        }

        const double val_loss = detail::mlp_loss_and_gradient(net, val_x, val_y, weights, nullptr);
        if (!std::isfinite(val_loss)) throw DivergenceError("validation loss became non-finite");
        if (val_loss < best_val) {
            best_val = val_loss;
            best = net;
            since_best = 0;
        } else if (++since_best >= params.patience) {
            break;
        }
    }

    TrainedModel model;
    model.kind = ModelKind::MLP;
    model.hyperparams.mlp = params;
    model.meta.seed = seed;
    const auto& canon = feature_names();
    model.feature_names_.assign(canon.begin(), canon.end());
    model.mlp = std::move(best);
    return model;
}

}  // namespace hrv
