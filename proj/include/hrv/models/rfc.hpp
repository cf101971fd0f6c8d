#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "hrv/models/common.hpp"
#include "hrv/rng.hpp"

namespace hrv {

namespace detail {

struct TreeBuilder {
    const TrainingData& data;
    const ClassWeights& weights;
    int max_depth;
    std::size_t features_per_node;
    Rng& rng;
    std::vector<TreeNode> nodes;

    int build(std::vector<std::size_t> sample_idx, int depth) {
        double w_stress = 0.0, w_total = 0.0;
        for (std::size_t i : sample_idx) {
            const double w = weights.of(data.y[i]);
            w_total += w;
            if (data.y[i]) w_stress += w;
        }
        const double p = w_total > 0.0 ? w_stress / w_total : 0.0;

        const int node_id = static_cast<int>(nodes.size());
        nodes.push_back({});
        nodes.back().prob_stress = p;

        if (depth >= max_depth || sample_idx.size() < 2 || p <= 0.0 || p >= 1.0)
            return node_id;

        // random feature subset (partial Fisher-Yates)
        std::vector<std::size_t> feats(kFeatureCount);
        std::iota(feats.begin(), feats.end(), std::size_t{0});
        for (std::size_t i = 0; i < features_per_node; ++i)
            std::swap(feats[i], feats[i + rng.below(kFeatureCount - i)]);
        feats.resize(features_per_node);

        const double parent_gini = 2.0 * p * (1.0 - p) * w_total;
        double best_gain = 1e-12;
        int best_feature = -1;
        double best_threshold = 0.0;

        std::vector<std::pair<double, std::size_t>> vals;
        for (std::size_t f : feats) {
            vals.clear();
            for (std::size_t i : sample_idx) vals.emplace_back(data.x[i][f], i);
            std::sort(vals.begin(), vals.end());

            double left_w = 0.0, left_s = 0.0;
            for (std::size_t k = 0; k + 1 < vals.size(); ++k) {
                const std::size_t i = vals[k].second;
                const double w = weights.of(data.y[i]);
                left_w += w;
                if (data.y[i]) left_s += w;
                if (vals[k].first == vals[k + 1].first) continue;

                const double right_w = w_total - left_w;
                const double right_s = w_stress - left_s;
                const double pl = left_s / left_w;
                const double pr = right_s / right_w;
                const double child_gini =
                    2.0 * pl * (1.0 - pl) * left_w + 2.0 * pr * (1.0 - pr) * right_w;
                const double gain = parent_gini - child_gini;
                if (gain > best_gain) {
                    best_gain = gain;
                    best_feature = static_cast<int>(f);
                    best_threshold = 0.5 * (vals[k].first + vals[k + 1].first);
                }
            }
        }
        if (best_feature < 0) return node_id;

        std::vector<std::size_t> left_idx, right_idx;
        for (std::size_t i : sample_idx)
            (data.x[i][static_cast<std::size_t>(best_feature)] <= best_threshold ? left_idx
                                                                                 : right_idx)
                .push_back(i);
        if (left_idx.empty() || right_idx.empty()) return node_id;

        sample_idx.clear();
        sample_idx.shrink_to_fit();
        const int left = build(std::move(left_idx), depth + 1);
        const int right = build(std::move(right_idx), depth + 1);
        nodes[static_cast<std::size_t>(node_id)].feature = best_feature;
        nodes[static_cast<std::size_t>(node_id)].threshold = best_threshold;
        nodes[static_cast<std::size_t>(node_id)].left = left;
        nodes[static_cast<std::size_t>(node_id)].right = right;
        return node_id;
    }
};

}  // namespace detail

// 200 bootstrap-resampled trees, depth <= 5, weighted Gini splits over a
// random ceil(sqrt(22)) = 5 features per node; prediction averages per-tree
// stress probabilities.
inline TrainedModel train_rfc(const std::vector<FeatureWindow>& rows, const ClassWeights& weights,
                              std::uint64_t seed, const RfcParams& params = {}) {
    const TrainingData data = TrainingData::from_rows(rows);
    data.require_two_classes();

    TrainedModel model;
    model.kind = ModelKind::RFC;
    model.hyperparams.rfc = params;
    model.meta.seed = seed;
    const auto& canon = feature_names();
    model.feature_names_.assign(canon.begin(), canon.end());

    const std::size_t n = data.x.size();
    const auto features_per_node =
        static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(kFeatureCount))));

    model.rfc.trees.reserve(static_cast<std::size_t>(params.n_trees));
    for (int t = 0; t < params.n_trees; ++t) {
        Rng rng(derive_seed(seed, "rfc-tree-" + std::to_string(t)));
        std::vector<std::size_t> boot(n);
        for (auto& idx : boot) idx = rng.below(n);
        std::sort(boot.begin(), boot.end());

        detail::TreeBuilder builder{data, weights, params.max_depth, features_per_node, rng, {}};
        builder.build(std::move(boot), 0);
        model.rfc.trees.push_back(std::move(builder.nodes));
    }
    return model;
}

}  // namespace hrv
