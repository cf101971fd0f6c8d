#pragma once

#include "hrv/models/common.hpp"
#include "hrv/models/io.hpp"
#include "hrv/models/mlp.hpp"
#include "hrv/models/rfc.hpp"
#include "hrv/models/svm.hpp"

namespace hrv {

inline TrainedModel train_model(ModelKind kind, const std::vector<FeatureWindow>& rows,
                                const ClassWeights& weights, std::uint64_t seed,
                                const Hyperparams& hp = {}) {
    switch (kind) {
        case ModelKind::RFC: return train_rfc(rows, weights, seed, hp.rfc);
        case ModelKind::SVM: return train_svm(rows, weights, seed, hp.svm);
        default: return train_mlp(rows, weights, seed, hp.mlp);
    }
}

}  // namespace hrv
