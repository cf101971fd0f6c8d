#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "hrv/errors.hpp"
#include "hrv/features.hpp"
#include "hrv/table.hpp"

namespace hrv {

enum class ModelKind { RFC, SVM, MLP };

inline std::string to_string(ModelKind k) {
    switch (k) {
        case ModelKind::RFC: return "RFC";
        case ModelKind::SVM: return "SVM";
        default: return "MLP";
    }
}

inline ModelKind model_kind_from_string(const std::string& s) {
    if (s == "RFC" || s == "rfc") return ModelKind::RFC;
    if (s == "SVM" || s == "svm") return ModelKind::SVM;
    if (s == "MLP" || s == "mlp") return ModelKind::MLP;
    throw SchemaError("unknown model kind: " + s);
}

struct ClassWeights {
    double no_stress = 1.0;
    double stress = 1.0;

    double of(Label l) const { return l == Label::stress ? stress : no_stress; }
    double of(int y) const { return y ? stress : no_stress; }
};

// Balanced scheme: w_c = N / (K * n_c) with K = 2 classes.
inline ClassWeights compute_class_weights(const std::vector<Label>& labels) {
    std::size_t n_stress = 0, n_calm = 0;
    for (Label l : labels) (l == Label::stress ? n_stress : n_calm)++;
    if (n_stress == 0 || n_calm == 0)
        throw DegenerateLabelsError("both classes must be present to compute weights");
    const double n = static_cast<double>(labels.size());
    ClassWeights w;
    w.no_stress = n / (2.0 * static_cast<double>(n_calm));
    w.stress = n / (2.0 * static_cast<double>(n_stress));
    return w;
}

struct RfcParams {
    int n_trees = 200;
    int max_depth = 5;
};

struct SvmParams {
    double c = 1.0;
    double tolerance = 1e-3;  // projected-gradient stop; stricter than common solver defaults
    int max_passes = 20000;
};

struct MlpParams {
    std::vector<int> hidden = {12, 6};
    double dropout = 0.2;
    double learning_rate = 0.001;
    int batch_size = 256;
    int patience = 15;
    int max_epochs = 500;
    double validation_fraction = 0.2;
};

struct Hyperparams {
    RfcParams rfc;
    SvmParams svm;
    MlpParams mlp;
};

struct TrainingMeta {
    std::uint64_t seed = 0;
    std::vector<std::string> dataset_ids;
    std::string fold_id;
};

// --- model parameter payloads ----------------------------------------------

struct TreeNode {
    int feature = -1;           // -1 marks a leaf
    double threshold = 0.0;
    int left = -1, right = -1;  // child node indices
    double prob_stress = 0.0;   // leaf payload
};

struct RfcModelData {
    std::vector<std::vector<TreeNode>> trees;
};

struct SvmModelData {
    std::array<double, kFeatureCount> weights{};
    double bias = 0.0;
};

struct MlpModelData {
    // dense layers as row-major weight matrices [out x in] plus biases
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;
    std::vector<int> layer_sizes;  // {22, 12, 6, 1}
};

struct TrainedModel {
    ModelKind kind = ModelKind::RFC;
    Hyperparams hyperparams;
    std::vector<std::string> feature_names_;
    TrainingMeta meta;

    RfcModelData rfc;
    SvmModelData svm;
    MlpModelData mlp;
};

struct Prediction {
    Label label = Label::no_stress;
    double score = 0.0;  // in [0, 1], stress probability-like
};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

namespace detail {

inline double rfc_score(const RfcModelData& m, const std::array<double, kFeatureCount>& x) {
    double acc = 0.0;
    for (const auto& tree : m.trees) {
        int node = 0;
        while (tree[static_cast<std::size_t>(node)].feature >= 0) {
            const auto& nd = tree[static_cast<std::size_t>(node)];
            node = x[static_cast<std::size_t>(nd.feature)] <= nd.threshold ? nd.left : nd.right;
        }
        acc += tree[static_cast<std::size_t>(node)].prob_stress;
    }
    return acc / static_cast<double>(m.trees.size());
}

inline double svm_decision(const SvmModelData& m, const std::array<double, kFeatureCount>& x) {
    double d = m.bias;
    for (std::size_t f = 0; f < kFeatureCount; ++f) d += m.weights[f] * x[f];
    return d;
}

inline double mlp_forward(const MlpModelData& m, const std::array<double, kFeatureCount>& x) {
    std::vector<double> act(x.begin(), x.end());
    for (std::size_t l = 0; l < m.weights.size(); ++l) {
        const std::size_t n_in = act.size();
        const std::size_t n_out = m.biases[l].size();
        std::vector<double> next(n_out);
        for (std::size_t o = 0; o < n_out; ++o) {
            double z = m.biases[l][o];
            for (std::size_t i = 0; i < n_in; ++i) z += m.weights[l][o * n_in + i] * act[i];
            next[o] = l + 1 < m.weights.size() ? std::max(0.0, z) : sigmoid(z);
        }
        act = std::move(next);
    }
    return act[0];
}

}  // namespace detail

inline Prediction predict(const TrainedModel& m, const FeatureVector& v,
                          const std::vector<std::string>& names) {
    if (names.size() != m.feature_names_.size())
        throw SchemaError("feature roster size mismatch");
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] != m.feature_names_[i])
            throw SchemaError("feature roster mismatch at position " + std::to_string(i) + ": " +
                              names[i] + " vs " + m.feature_names_[i]);

    double score = 0.0;
    switch (m.kind) {
        case ModelKind::RFC: score = detail::rfc_score(m.rfc, v.values); break;
        case ModelKind::SVM: score = sigmoid(detail::svm_decision(m.svm, v.values)); break;
        case ModelKind::MLP: score = detail::mlp_forward(m.mlp, v.values); break;
    }
    Prediction p;
    p.score = score;
    p.label = score >= 0.5 ? Label::stress : Label::no_stress;
    return p;
}

inline Prediction predict(const TrainedModel& m, const FeatureVector& v) {
    const auto& canon = feature_names();
    return predict(m, v, std::vector<std::string>(canon.begin(), canon.end()));
}

// Shared view of training rows as a dense design matrix.
struct TrainingData {
    std::vector<std::array<double, kFeatureCount>> x;
    std::vector<int> y;  // 1 = stress

    static TrainingData from_rows(const std::vector<FeatureWindow>& rows) {
        TrainingData d;
        d.x.reserve(rows.size());
        d.y.reserve(rows.size());
        for (const auto& r : rows) {
            if (r.label == Label::unlabeled) continue;
            d.x.push_back(r.features.values);
            d.y.push_back(r.label == Label::stress ? 1 : 0);
        }
        return d;
    }

    void require_two_classes() const {
        bool has0 = false, has1 = false;
        for (int v : y) (v ? has1 : has0) = true;
        if (!has0 || !has1)
            throw DegenerateLabelsError("training data must contain both classes");
    }
};

}  // namespace hrv
