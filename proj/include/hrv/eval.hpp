#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "hrv/errors.hpp"
#include "hrv/io.hpp"
#include "hrv/models.hpp"
#include "hrv/table.hpp"

namespace hrv {

struct Confusion {
    std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
    std::int64_t total() const { return tp + fp + fn + tn; }

    void add(Label truth, Label predicted) {
        if (truth == Label::stress)
            predicted == Label::stress ? ++tp : ++fn;
        else
            predicted == Label::stress ? ++fp : ++tn;
    }
};

struct Metrics {
    double accuracy = 0.0;
    double f1_pos = 0.0;    // stress as the positive class
    double f1_macro = 0.0;
};

// Zero-denominator f1 is defined as 0.
inline Metrics metrics(const Confusion& c) {
    if (c.total() == 0) throw InvalidSpecError("cannot compute metrics of an empty confusion");
    auto f1 = [](std::int64_t tp, std::int64_t fp, std::int64_t fn) {
        const std::int64_t denom = 2 * tp + fp + fn;
        return denom ? 2.0 * static_cast<double>(tp) / static_cast<double>(denom) : 0.0;
    };
    Metrics m;
    m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
    m.f1_pos = f1(c.tp, c.fp, c.fn);
    m.f1_macro = 0.5 * (m.f1_pos + f1(c.tn, c.fn, c.fp));
    return m;
}

struct FoldResult {
    std::string held_out_participant;
    Confusion confusion;
    Metrics metrics;
    std::string model_ref;          // path of the persisted fold model, if any
    std::string source_dataset;     // dataset the held-out participant came from
    bool skipped = false;
    std::string skip_reason;
};

struct MeanStd {
    double mean = 0.0;
    double stddev = 0.0;
};

struct EvaluationReport {
    std::string protocol;  // within | cross | combined
    ModelKind model_kind = ModelKind::RFC;
    std::vector<std::string> source_datasets;
    std::string target_dataset;
    std::vector<FoldResult> folds;
    MeanStd accuracy, f1_pos, f1_macro;
    std::map<std::string, Metrics> per_source_means;       // combined protocol
    std::optional<Confusion> concatenated;                 // cross protocol
    std::uint64_t seed = 0;
    Hyperparams hyperparams;
};

namespace detail {

inline MeanStd mean_std(const std::vector<double>& v) {
    MeanStd m;
    if (v.empty()) return m;
    for (double x : v) m.mean += x;
    m.mean /= static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += (x - m.mean) * (x - m.mean);
    m.stddev = std::sqrt(s / static_cast<double>(v.size()));
    return m;
}

inline void summarize(EvaluationReport& r) {
    std::vector<double> acc, f1p, f1m;
    for (const auto& f : r.folds) {
        if (f.skipped) continue;
        acc.push_back(f.metrics.accuracy);
        f1p.push_back(f.metrics.f1_pos);
        f1m.push_back(f.metrics.f1_macro);
    }
    r.accuracy = mean_std(acc);
    r.f1_pos = mean_std(f1p);
    r.f1_macro = mean_std(f1m);

    std::map<std::string, std::vector<const FoldResult*>> by_source;
    for (const auto& f : r.folds)
        if (!f.skipped && !f.source_dataset.empty()) by_source[f.source_dataset].push_back(&f);
    if (by_source.size() > 1) {
        for (const auto& [src, folds] : by_source) {
            Metrics m;
            for (const auto* f : folds) {
                m.accuracy += f->metrics.accuracy;
                m.f1_pos += f->metrics.f1_pos;
                m.f1_macro += f->metrics.f1_macro;
            }
            const double n = static_cast<double>(folds.size());
            m.accuracy /= n;
            m.f1_pos /= n;
            m.f1_macro /= n;
            r.per_source_means[src] = m;
        }
    }
}

// Run fn(i) for i in [0, n) on up to `parallelism` threads. Results must be
// written into pre-sized slots so scheduling cannot reorder anything.
inline void parallel_for(std::size_t n, int parallelism,
                         const std::function<void(std::size_t)>& fn) {
    if (parallelism <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(parallelism));
    for (int t = 0; t < parallelism; ++t) {
        workers.emplace_back([&, t] {
            try {
                for (std::size_t i = next++; i < n; i = next++) fn(i);
            } catch (...) {
                errors[static_cast<std::size_t>(t)] = std::current_exception();
            }
        });
    }
    for (auto& w : workers) w.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace detail

struct LosoOptions {
    int parallelism = 1;
    std::string model_dir;  // when set, fold models are persisted here
    Hyperparams hyperparams;
};

struct LosoOutcome {
    EvaluationReport report;
    std::vector<TrainedModel> models;  // indexed like report.folds; skipped folds hold no trees
};

// One fold per participant: train on everyone else (class weights recomputed
// per fold), test on the held-out participant. Fold seeds derive from the
// master seed and the held-out id, so results do not depend on scheduling.
inline LosoOutcome loso(const FeatureTable& table, ModelKind kind, std::uint64_t seed,
                        const LosoOptions& opts = {}) {
    const auto participants = table.participant_ids();
    if (participants.size() < 2)
        throw InvalidSpecError("LOSO needs at least 2 participants");

    LosoOutcome out;
    out.report.protocol = "within";
    out.report.model_kind = kind;
    out.report.seed = seed;
    out.report.hyperparams = opts.hyperparams;
    {
        std::set<std::string> ds;
        for (const auto& r : table.rows) ds.insert(r.dataset_id);
        out.report.source_datasets.assign(ds.begin(), ds.end());
        out.report.target_dataset = out.report.source_datasets.size() == 1
                                        ? out.report.source_datasets.front()
                                        : "combined";
    }

    out.report.folds.resize(participants.size());
    out.models.resize(participants.size());

    const auto& canon = feature_names();
    const std::vector<std::string> roster(canon.begin(), canon.end());

    detail::parallel_for(participants.size(), opts.parallelism, [&](std::size_t k) {
        const std::string& held_out = participants[k];
        FoldResult fold;
        fold.held_out_participant = held_out;

        std::vector<FeatureWindow> train_rows;
        std::vector<const FeatureWindow*> test_rows;
        for (const auto& r : table.rows) {
            if (r.participant_id == held_out)
                test_rows.push_back(&r);
            else
                train_rows.push_back(r);
        }
        fold.source_dataset = test_rows.front()->dataset_id;

        std::vector<Label> train_labels;
        for (const auto& r : train_rows) train_labels.push_back(r.label);
        const bool has_both =
            std::count(train_labels.begin(), train_labels.end(), Label::stress) > 0 &&
            std::count(train_labels.begin(), train_labels.end(), Label::no_stress) > 0;
        if (!has_both) {
            fold.skipped = true;
            fold.skip_reason = "training fold lacks a class";
            out.report.folds[k] = std::move(fold);
            return;
        }

        const ClassWeights weights = compute_class_weights(train_labels);
        const std::uint64_t fold_seed = derive_seed(seed, "fold-" + held_out);
        TrainedModel model = train_model(kind, train_rows, weights, fold_seed, opts.hyperparams);
        model.meta.fold_id = held_out;
        model.meta.dataset_ids = out.report.source_datasets;

        for (const auto* r : test_rows)
            fold.confusion.add(r->label, predict(model, r->features, roster).label);
        fold.metrics = metrics(fold.confusion);

        if (!opts.model_dir.empty()) {
            // combined-protocol fold ids are namespaced ("dataset/participant");
            // keep the file name flat
            std::string fold_name = held_out;
            std::replace(fold_name.begin(), fold_name.end(), '/', '_');
            fold.model_ref =
                opts.model_dir + "/" + to_string(kind) + "_fold_" + fold_name + ".json";
            save_model(model, fold.model_ref);
        }
        out.models[k] = std::move(model);
        out.report.folds[k] = std::move(fold);
    });

    detail::summarize(out.report);
    return out;
}

// Every source LOSO model scores the entire target table; the report holds
// per-model metrics, their mean/std, and the concatenated confusion.
inline EvaluationReport cross_dataset(const std::vector<TrainedModel>& models,
                                      const FeatureTable& target) {
    if (models.empty()) throw InvalidSpecError("cross-dataset evaluation needs source models");
    if (target.rows.empty()) throw EmptyTableError("target table is empty");

    EvaluationReport report;
    report.protocol = "cross";
    report.model_kind = models.front().kind;
    {
        std::set<std::string> ds;
        for (const auto& m : models)
            ds.insert(m.meta.dataset_ids.begin(), m.meta.dataset_ids.end());
        report.source_datasets.assign(ds.begin(), ds.end());
        std::set<std::string> tgt;
        for (const auto& r : target.rows) tgt.insert(r.dataset_id);
        report.target_dataset = tgt.size() == 1 ? *tgt.begin() : "combined";
    }

    const auto& canon = feature_names();
    const std::vector<std::string> roster(canon.begin(), canon.end());
    Confusion concat;
    for (const auto& model : models) {
        FoldResult fold;
        fold.held_out_participant = "model:" + model.meta.fold_id;
        for (const auto& r : target.rows) {
            if (r.label == Label::unlabeled) continue;
            const Label pred = predict(model, r.features, roster).label;
            fold.confusion.add(r.label, pred);
            concat.add(r.label, pred);
        }
        fold.metrics = metrics(fold.confusion);
        report.folds.push_back(std::move(fold));
    }
    report.concatenated = concat;
    detail::summarize(report);
    return report;
}

// Union of tables with dataset-namespaced participant ids, then LOSO over all
// participants; per-source-dataset means are added to the report.
inline LosoOutcome combine_and_loso(const std::vector<FeatureTable>& tables, ModelKind kind,
                                    std::uint64_t seed, const LosoOptions& opts = {}) {
    FeatureTable combined;
    std::set<std::string> seen;
    for (const auto& t : tables) {
        for (FeatureWindow r : t.rows) {
            r.participant_id = r.dataset_id + "/" + r.participant_id;
            combined.rows.push_back(std::move(r));
        }
        for (const auto& id : t.participant_ids()) {
            const std::string namespaced =
                (t.rows.empty() ? "" : t.rows.front().dataset_id) + "/" + id;
            if (!seen.insert(namespaced).second)
                throw ManifestError("duplicate namespaced participant id: " + namespaced);
        }
    }
    LosoOutcome out = loso(combined, kind, seed, opts);
    out.report.protocol = "combined";
    return out;
}

// --- report emission --------------------------------------------------------

inline constexpr int kReportFormatVersion = 1;

inline nlohmann::json report_to_json(const EvaluationReport& r) {
    nlohmann::json j;
    j["format_version"] = kReportFormatVersion;
    j["protocol"] = r.protocol;
    j["model_kind"] = to_string(r.model_kind);
    j["source_datasets"] = r.source_datasets;
    j["target_dataset"] = r.target_dataset;
    j["config"] = {{"seed", r.seed},
                   {"feature_roster", feature_names()},
                   {"hyperparams",
                    {{"rfc",
                      {{"n_trees", r.hyperparams.rfc.n_trees},
                       {"max_depth", r.hyperparams.rfc.max_depth}}},
                     {"svm",
                      {{"kernel", "linear"},
                       {"C", r.hyperparams.svm.c},
                       {"tolerance", r.hyperparams.svm.tolerance}}},
                     {"mlp",
                      {{"hidden", r.hyperparams.mlp.hidden},
                       {"dropout", r.hyperparams.mlp.dropout},
                       {"learning_rate", r.hyperparams.mlp.learning_rate},
                       {"batch_size", r.hyperparams.mlp.batch_size},
                       {"patience", r.hyperparams.mlp.patience},
                       {"max_epochs", r.hyperparams.mlp.max_epochs}}}}}};
    nlohmann::json folds = nlohmann::json::array();
    for (const auto& f : r.folds) {
        nlohmann::json fj;
        fj["held_out"] = f.held_out_participant;
        fj["source_dataset"] = f.source_dataset;
        if (f.skipped) {
            fj["skipped"] = true;
            fj["skip_reason"] = f.skip_reason;
        } else {
            fj["confusion"] = {{"tp", f.confusion.tp},
                               {"fp", f.confusion.fp},
                               {"fn", f.confusion.fn},
                               {"tn", f.confusion.tn}};
            fj["accuracy"] = f.metrics.accuracy;
            fj["f1_pos"] = f.metrics.f1_pos;
            fj["f1_macro"] = f.metrics.f1_macro;
            if (!f.model_ref.empty()) fj["model_ref"] = f.model_ref;
        }
        folds.push_back(std::move(fj));
    }
    j["folds"] = std::move(folds);
    j["summary"] = {{"accuracy", {{"mean", r.accuracy.mean}, {"std", r.accuracy.stddev}}},
                    {"f1_pos", {{"mean", r.f1_pos.mean}, {"std", r.f1_pos.stddev}}},
                    {"f1_macro", {{"mean", r.f1_macro.mean}, {"std", r.f1_macro.stddev}}}};
    if (!r.per_source_means.empty()) {
        nlohmann::json per;
        for (const auto& [src, m] : r.per_source_means)
            per[src] = {{"accuracy", m.accuracy}, {"f1_pos", m.f1_pos}, {"f1_macro", m.f1_macro}};
        j["per_source_means"] = std::move(per);
    }
    if (r.concatenated) {
        j["concatenated_confusion"] = {{"tp", r.concatenated->tp},
                                       {"fp", r.concatenated->fp},
                                       {"fn", r.concatenated->fn},
                                       {"tn", r.concatenated->tn}};
    }
    return j;
}

inline EvaluationReport report_from_json(const nlohmann::json& j) {
    EvaluationReport r;
    r.protocol = j.at("protocol").get<std::string>();
    r.model_kind = model_kind_from_string(j.at("model_kind").get<std::string>());
    r.source_datasets = j.at("source_datasets").get<std::vector<std::string>>();
    r.target_dataset = j.at("target_dataset").get<std::string>();
    r.seed = j.at("config").at("seed").get<std::uint64_t>();
    for (const auto& fj : j.at("folds")) {
        FoldResult f;
        f.held_out_participant = fj.at("held_out").get<std::string>();
        f.source_dataset = fj.value("source_dataset", "");
        if (fj.value("skipped", false)) {
            f.skipped = true;
            f.skip_reason = fj.value("skip_reason", "");
        } else {
            const auto& c = fj.at("confusion");
            f.confusion = {c.at("tp").get<std::int64_t>(), c.at("fp").get<std::int64_t>(),
                           c.at("fn").get<std::int64_t>(), c.at("tn").get<std::int64_t>()};
            f.metrics.accuracy = fj.at("accuracy").get<double>();
            f.metrics.f1_pos = fj.at("f1_pos").get<double>();
            f.metrics.f1_macro = fj.at("f1_macro").get<double>();
            f.model_ref = fj.value("model_ref", "");
        }
        r.folds.push_back(std::move(f));
    }
    detail::summarize(r);
    if (j.contains("concatenated_confusion")) {
        const auto& c = j.at("concatenated_confusion");
        r.concatenated = Confusion{c.at("tp").get<std::int64_t>(), c.at("fp").get<std::int64_t>(),
                                   c.at("fn").get<std::int64_t>(), c.at("tn").get<std::int64_t>()};
    }
    return r;
}

inline std::string report_to_text(const EvaluationReport& r) {
    std::ostringstream os;
    os << "protocol: " << r.protocol << "  model: " << to_string(r.model_kind) << "\n";
    os << "sources:";
    for (const auto& s : r.source_datasets) os << ' ' << s;
    os << "  target: " << r.target_dataset << "\n\n";
    os << "fold                         f1_pos   f1_macro accuracy\n";
    bool any_skipped = false;
    for (const auto& f : r.folds) {
        std::string name = f.held_out_participant;
        if (name.size() > 28) name.resize(28);
        name.resize(28, ' ');
        if (f.skipped) {
            os << name << " skipped*\n";
            any_skipped = true;
        } else {
            char buf[64];
            std::snprintf(buf, sizeof(buf), " %.4f   %.4f   %.4f", f.metrics.f1_pos,
                          f.metrics.f1_macro, f.metrics.accuracy);
            os << name << buf << "\n";
        }
    }
    char buf[96];
    std::snprintf(buf, sizeof(buf), " %.4f   %.4f   %.4f", r.f1_pos.mean, r.f1_macro.mean,
                  r.accuracy.mean);
    std::string mean_label = "mean";
    mean_label.resize(28, ' ');
    os << mean_label << buf << "\n";
    if (!r.per_source_means.empty()) {
        os << "\nper-source means\n";
        for (const auto& [src, m] : r.per_source_means) {
            std::string name = src;
            name.resize(28, ' ');
            std::snprintf(buf, sizeof(buf), " %.4f   %.4f   %.4f", m.f1_pos, m.f1_macro,
                          m.accuracy);
            os << name << buf << "\n";
        }
    }
    if (any_skipped) os << "\n* fold skipped: training set lacked a class\n";
    return os.str();
}

// Writes <path>.json and <path>.txt with deterministic bytes.
inline void emit_report(const EvaluationReport& r, const std::string& path_stem) {
    std::ofstream js(path_stem + ".json");
    if (!js) throw IoError("cannot write report: " + path_stem + ".json");
    js << report_to_json(r).dump(2) << '\n';
    std::ofstream txt(path_stem + ".txt");
    if (!txt) throw IoError("cannot write report: " + path_stem + ".txt");
    txt << report_to_text(r);
}

}  // namespace hrv
