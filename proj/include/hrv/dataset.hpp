#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "hrv/errors.hpp"
#include "hrv/features.hpp"
#include "hrv/io.hpp"
#include "hrv/peaks.hpp"
#include "hrv/signal.hpp"
#include "hrv/table.hpp"

namespace hrv {

struct Recording {
    std::string file_path;  // resolved against the manifest's directory
    std::string condition_id;
    double t_start_s = 0.0;
    double t_end_s = 0.0;
};

struct ParticipantEntry {
    std::string participant_id;
    std::string neutral_condition_id;
    std::vector<Recording> recordings;
};

struct DatasetManifest {
    std::string dataset_id;
    Modality modality = Modality::ECG;
    double rate_hz = 0.0;
    std::vector<ParticipantEntry> participants;
};

enum class ConditionClass { stress, no_stress, exclude };

struct LabelScheme {
    std::map<std::string, ConditionClass> conditions;

    // unmapped conditions are excluded
    ConditionClass classify(const std::string& condition_id) const {
        const auto it = conditions.find(condition_id);
        return it == conditions.end() ? ConditionClass::exclude : it->second;
    }

    void validate() const {
        bool has_stress = false, has_calm = false;
        for (const auto& [_, c] : conditions) {
            if (c == ConditionClass::stress) has_stress = true;
            if (c == ConditionClass::no_stress) has_calm = true;
        }
        if (!has_stress || !has_calm)
            throw ManifestError("label scheme must map at least one stress and one no_stress condition");
    }
};

// Labeling rules of the four supported datasets. VerBIO's preparation phase
// is unmapped by the source material and therefore excluded.
inline std::map<std::string, LabelScheme> built_in_schemes() {
    std::map<std::string, LabelScheme> s;
    s["WESAD"].conditions = {{"neutral", ConditionClass::no_stress},
                             {"amusement", ConditionClass::no_stress},
                             {"stress", ConditionClass::stress}};
    s["SWELL-KW"].conditions = {{"neutral", ConditionClass::no_stress},
                                {"email_interruptions", ConditionClass::stress},
                                {"time_pressure", ConditionClass::stress}};
    s["ForDigitStress"].conditions = {{"interview", ConditionClass::stress},
                                      {"post_interview", ConditionClass::no_stress},
                                      {"preparation", ConditionClass::exclude}};
    s["VerBIO"].conditions = {{"relaxation", ConditionClass::no_stress},
                              {"presentation", ConditionClass::stress},
                              {"preparation", ConditionClass::exclude}};
    return s;
}

inline LabelScheme scheme_from_json(const nlohmann::json& j) {
    LabelScheme s;
    for (const auto& [cond, cls] : j.items()) {
        const std::string v = cls.get<std::string>();
        if (v == "stress") s.conditions[cond] = ConditionClass::stress;
        else if (v == "no_stress") s.conditions[cond] = ConditionClass::no_stress;
        else if (v == "exclude") s.conditions[cond] = ConditionClass::exclude;
        else throw ManifestError("label scheme maps " + cond + " to unknown class " + v);
    }
    s.validate();
    return s;
}

inline DatasetManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IngestionError("cannot open manifest: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ManifestError(path + ": invalid JSON: " + e.what());
    }

    DatasetManifest m;
    std::vector<std::string> bad_fields;
    try {
        m.dataset_id = j.at("dataset_id").get<std::string>();
        const std::string mod = j.at("modality").get<std::string>();
        if (mod == "ECG") m.modality = Modality::ECG;
        else if (mod == "BVP") m.modality = Modality::BVP;
        else bad_fields.push_back("modality");
        m.rate_hz = j.at("rate_hz").get<double>();
        if (!(m.rate_hz > 0.0)) bad_fields.push_back("rate_hz");

        const auto base = std::filesystem::path(path).parent_path();
        for (const auto& pj : j.at("participants")) {
            ParticipantEntry p;
            p.participant_id = pj.at("participant_id").get<std::string>();
            p.neutral_condition_id = pj.value("neutral_condition_id", "neutral");
            for (const auto& rj : pj.at("recordings")) {
                Recording r;
                r.file_path = (base / rj.at("file_path").get<std::string>()).string();
                r.condition_id = rj.at("condition_id").get<std::string>();
                r.t_start_s = rj.at("t_start_s").get<double>();
                r.t_end_s = rj.at("t_end_s").get<double>();
                if (!(r.t_end_s > r.t_start_s))
                    bad_fields.push_back(p.participant_id + ".recordings.t_end_s");
                p.recordings.push_back(std::move(r));
            }
            m.participants.push_back(std::move(p));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ManifestError(path + ": schema violation: " + e.what());
    }
    if (!bad_fields.empty()) {
        std::string msg = path + ": invalid fields:";
        for (const auto& f : bad_fields) msg += " " + f;
        throw ManifestError(msg);
    }

    // condition intervals must not overlap within a participant
    for (const auto& p : m.participants) {
        std::vector<std::pair<double, double>> spans;
        for (const auto& r : p.recordings) spans.emplace_back(r.t_start_s, r.t_end_s);
        std::sort(spans.begin(), spans.end());
        for (std::size_t i = 1; i < spans.size(); ++i)
            if (spans[i].first < spans[i - 1].second)
                throw ManifestError(path + ": overlapping condition intervals for participant " +
                                    p.participant_id);
    }
    for (const auto& p : m.participants)
        for (const auto& r : p.recordings)
            if (!std::filesystem::exists(r.file_path))
                throw IngestionError("manifest references missing file: " + r.file_path);
    return m;
}

struct Exclusion {
    std::string participant_id;
    std::string reason;
};

struct BuildResult {
    FeatureTable table;
    std::vector<Exclusion> exclusions;
    std::size_t dropped_windows = 0;  // windows failing the 10-interval floor
};

struct BuildOptions {
    bool plausibility_filter = false;
};

// Full per-participant pipeline: preprocess, detect peaks, intervals,
// windows, features, then min-max normalization fitted on that participant's
// neutral windows only. Participants without a usable neutral calibration
// are excluded and reported.
inline BuildResult build_feature_table(const DatasetManifest& m, const LabelScheme& scheme,
                                       const BuildOptions& opts = {}) {
    scheme.validate();
    BuildResult out;

    for (const auto& p : m.participants) {
        const bool has_neutral =
            std::any_of(p.recordings.begin(), p.recordings.end(),
                        [&](const Recording& r) { return r.condition_id == p.neutral_condition_id; });
        if (!has_neutral) {
            out.exclusions.push_back({p.participant_id, "no neutral-condition recording"});
            continue;
        }

        std::vector<FeatureWindow> windows;        // all windows, recording-absolute times
        std::vector<FeatureWindow> neutral_windows;  // times relative to the neutral segment
        double neutral_elapsed = 0.0;
        bool failed = false;

        for (const auto& rec : p.recordings) {
            Waveform w;
            try {
                w = load_waveform_csv(rec.file_path, m.rate_hz, m.modality, p.participant_id,
                                      rec.condition_id);
                const Waveform raw = w;
                w = m.modality == Modality::ECG ? preprocess_ecg(w) : preprocess_bvp(w);
                const PeakSeries peaks = m.modality == Modality::ECG
                                             ? detect_r_peaks(w)
                                             : detect_systolic_peaks(w, &raw);
                if (peaks.size() < 2) continue;
                IbiSeries ibi = ibis_from_peaks(peaks);
                if (opts.plausibility_filter) ibi = plausibility_filter(ibi);
                if (ibi.size() == 0) continue;

                const Segmentation seg = segment_windows(ibi);
                out.dropped_windows += seg.dropped;
                for (const auto& slice : seg.windows) {
                    FeatureWindow fw;
                    fw.start_s = rec.t_start_s + slice.start_s;
                    fw.end_s = fw.start_s + kWindowLenS;
                    fw.features = extract_features(slice.ibi);
                    fw.participant_id = p.participant_id;
                    fw.dataset_id = m.dataset_id;
                    fw.condition_id = rec.condition_id;
                    switch (scheme.classify(rec.condition_id)) {
                        case ConditionClass::stress: fw.label = Label::stress; break;
                        case ConditionClass::no_stress: fw.label = Label::no_stress; break;
                        case ConditionClass::exclude: fw.label = Label::unlabeled; break;
                    }
                    if (rec.condition_id == p.neutral_condition_id) {
                        FeatureWindow nw = fw;
                        nw.start_s = neutral_elapsed + slice.start_s;
                        neutral_windows.push_back(std::move(nw));
                    }
                    windows.push_back(std::move(fw));
                }
                if (rec.condition_id == p.neutral_condition_id)
                    neutral_elapsed += rec.t_end_s - rec.t_start_s;
            } catch (const InsufficientDataError&) {
                continue;  // recording too short to contribute windows
            } catch (const Error& e) {
                out.exclusions.push_back({p.participant_id, e.what()});
                failed = true;
                break;
            }
        }
        if (failed) continue;

        NormalizationParams params;
        try {
            params = fit_normalization(neutral_windows);
        } catch (const CalibrationError&) {
            out.exclusions.push_back({p.participant_id, "neutral calibration failed"});
            continue;
        }

        for (auto& fw : windows) {
            if (fw.label == Label::unlabeled) continue;  // exclude-mapped condition
            fw.features = apply_normalization(params, fw.features);
            out.table.rows.push_back(std::move(fw));
        }
    }

    if (out.table.rows.empty())
        throw EmptyTableError("all participants were excluded or produced no labeled windows");
    return out;
}

inline void save_exclusion_report(const std::vector<Exclusion>& ex, const std::string& path) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& e : ex) j.push_back({{"participant_id", e.participant_id}, {"reason", e.reason}});
    std::ofstream out(path);
    if (!out) throw IoError("cannot write exclusion report: " + path);
    out << j.dump(2) << '\n';
}

}  // namespace hrv
