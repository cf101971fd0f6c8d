#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hrv/errors.hpp"
#include "hrv/models/common.hpp"

namespace hrv {

inline constexpr int kModelFormatVersion = 1;

inline nlohmann::json model_to_json(const TrainedModel& m) {
    nlohmann::json j;
    j["format_version"] = kModelFormatVersion;
    j["kind"] = to_string(m.kind);
    j["feature_names"] = m.feature_names_;
    j["training_meta"] = {{"seed", m.meta.seed},
                          {"dataset_ids", m.meta.dataset_ids},
                          {"fold_id", m.meta.fold_id}};
    switch (m.kind) {
        case ModelKind::RFC: {
            j["hyperparams"] = {{"n_trees", m.hyperparams.rfc.n_trees},
                                {"max_depth", m.hyperparams.rfc.max_depth}};
            nlohmann::json trees = nlohmann::json::array();
            for (const auto& tree : m.rfc.trees) {
                nlohmann::json nodes = nlohmann::json::array();
                for (const auto& nd : tree)
                    nodes.push_back({nd.feature, nd.threshold, nd.left, nd.right, nd.prob_stress});
                trees.push_back(std::move(nodes));
            }
            j["parameters"] = {{"trees", std::move(trees)}};
            break;
        }
        case ModelKind::SVM: {
            j["hyperparams"] = {{"kernel", "linear"},
                                {"C", m.hyperparams.svm.c},
                                {"tolerance", m.hyperparams.svm.tolerance}};
            j["parameters"] = {{"weights", m.svm.weights}, {"bias", m.svm.bias}};
            break;
        }
        case ModelKind::MLP: {
            j["hyperparams"] = {{"hidden", m.hyperparams.mlp.hidden},
                                {"dropout", m.hyperparams.mlp.dropout},
                                {"learning_rate", m.hyperparams.mlp.learning_rate},
                                {"batch_size", m.hyperparams.mlp.batch_size},
                                {"patience", m.hyperparams.mlp.patience},
                                {"max_epochs", m.hyperparams.mlp.max_epochs},
                                {"validation_fraction", m.hyperparams.mlp.validation_fraction}};
            j["parameters"] = {{"layer_sizes", m.mlp.layer_sizes},
                               {"weights", m.mlp.weights},
                               {"biases", m.mlp.biases}};
            break;
        }
    }
    return j;
}

inline TrainedModel model_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format_version").get<int>() != kModelFormatVersion)
            throw ModelFormatError("unsupported model format version");
        TrainedModel m;
        m.kind = model_kind_from_string(j.at("kind").get<std::string>());
        m.feature_names_ = j.at("feature_names").get<std::vector<std::string>>();
        const auto& meta = j.at("training_meta");
        m.meta.seed = meta.at("seed").get<std::uint64_t>();
        m.meta.dataset_ids = meta.at("dataset_ids").get<std::vector<std::string>>();
        m.meta.fold_id = meta.at("fold_id").get<std::string>();
        const auto& hp = j.at("hyperparams");
        const auto& params = j.at("parameters");
        switch (m.kind) {
            case ModelKind::RFC: {
                m.hyperparams.rfc.n_trees = hp.at("n_trees").get<int>();
                m.hyperparams.rfc.max_depth = hp.at("max_depth").get<int>();
                for (const auto& tree : params.at("trees")) {
                    std::vector<TreeNode> nodes;
                    for (const auto& nd : tree) {
                        nodes.push_back({nd.at(0).get<int>(), nd.at(1).get<double>(),
                                         nd.at(2).get<int>(), nd.at(3).get<int>(),
                                         nd.at(4).get<double>()});
                    }
                    m.rfc.trees.push_back(std::move(nodes));
                }
                break;
            }
            case ModelKind::SVM: {
                m.hyperparams.svm.c = hp.at("C").get<double>();
                m.hyperparams.svm.tolerance = hp.at("tolerance").get<double>();
                const auto w = params.at("weights").get<std::vector<double>>();
                if (w.size() != kFeatureCount)
                    throw ModelFormatError("SVM weight vector has wrong length");
                std::copy(w.begin(), w.end(), m.svm.weights.begin());
                m.svm.bias = params.at("bias").get<double>();
                break;
            }
            case ModelKind::MLP: {
                m.hyperparams.mlp.hidden = hp.at("hidden").get<std::vector<int>>();
                m.hyperparams.mlp.dropout = hp.at("dropout").get<double>();
                m.hyperparams.mlp.learning_rate = hp.at("learning_rate").get<double>();
                m.hyperparams.mlp.batch_size = hp.at("batch_size").get<int>();
                m.hyperparams.mlp.patience = hp.at("patience").get<int>();
                m.hyperparams.mlp.max_epochs = hp.at("max_epochs").get<int>();
                m.hyperparams.mlp.validation_fraction = hp.at("validation_fraction").get<double>();
                m.mlp.layer_sizes = params.at("layer_sizes").get<std::vector<int>>();
                m.mlp.weights = params.at("weights").get<std::vector<std::vector<double>>>();
                m.mlp.biases = params.at("biases").get<std::vector<std::vector<double>>>();
                break;
            }
        }
        return m;
    } catch (const ModelFormatError&) {
        throw;
    } catch (const nlohmann::json::exception& e) {
        throw ModelFormatError(std::string("malformed model file: ") + e.what());
    }
}

inline void save_model(const TrainedModel& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write model file: " + path);
    out << model_to_json(m).dump(2) << '\n';
}

inline TrainedModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open model file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ModelFormatError(std::string(path) + ": " + e.what());
    }
    return model_from_json(j);
}

}  // namespace hrv
