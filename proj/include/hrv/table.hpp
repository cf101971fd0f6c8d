#pragma once

#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "hrv/errors.hpp"
#include "hrv/features.hpp"
#include "hrv/io.hpp"

namespace hrv {

// Persisted feature windows with labels and participant/dataset keys.
struct FeatureTable {
    std::vector<FeatureWindow> rows;

    std::vector<std::string> participant_ids() const {
        std::set<std::string> ids;
        for (const auto& r : rows) ids.insert(r.participant_id);
        return {ids.begin(), ids.end()};
    }
};

inline void save_table(const FeatureTable& t, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write feature table: " + path);
    out << "dataset_id,participant_id,condition_id,start_s,label";
    for (const auto& name : feature_names()) out << ',' << name;
    out << '\n';
    for (const auto& r : t.rows) {
        out << r.dataset_id << ',' << r.participant_id << ',' << r.condition_id << ','
            << format_g9(r.start_s) << ',' << to_string(r.label);
        for (std::size_t f = 0; f < kFeatureCount; ++f) out << ',' << format_g9(r.features[f]);
        out << '\n';
    }
}

inline FeatureTable load_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open feature table: " + path);

    std::string line;
    if (!std::getline(in, line)) throw TableFormatError(path + ": empty file (line 1)");
    {
        std::string expected = "dataset_id,participant_id,condition_id,start_s,label";
        for (const auto& name : feature_names()) expected += "," + name;
        if (line != expected)
            throw TableFormatError(path + ": line 1: header does not match the feature schema");
    }

    FeatureTable t;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 5 + kFeatureCount)
            throw TableFormatError(path + ": line " + std::to_string(lineno) + ": expected " +
                                   std::to_string(5 + kFeatureCount) + " columns, got " +
                                   std::to_string(fields.size()));
        FeatureWindow w;
        w.dataset_id = fields[0];
        w.participant_id = fields[1];
        w.condition_id = fields[2];
        try {
            w.start_s = std::stod(fields[3]);
            w.end_s = w.start_s + kWindowLenS;
            w.label = label_from_string(fields[4]);
            for (std::size_t f = 0; f < kFeatureCount; ++f)
                w.features[f] = std::stod(fields[5 + f]);
        } catch (const TableFormatError&) {
            throw;
        } catch (const std::exception&) {
            throw TableFormatError(path + ": line " + std::to_string(lineno) +
                                   ": non-numeric value");
        }
        t.rows.push_back(std::move(w));
    }
    return t;
}

}  // namespace hrv
