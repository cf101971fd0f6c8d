#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hrv/errors.hpp"
#include "hrv/signal.hpp"

namespace hrv {

// Shortest-precision-9 serialization used everywhere numbers cross a file
// boundary; deterministic bytes for identical values.
inline std::string format_g9(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

// Waveform files are two-column CSV `t_seconds,value` with a header row and
// fixed step 1/rate_hz; the rate comes from the dataset manifest.
inline Waveform load_waveform_csv(const std::string& path, double rate_hz, Modality modality,
                                  const std::string& participant_id = "",
                                  const std::string& session_id = "") {
    std::ifstream in(path);
    if (!in) throw IngestionError("cannot open waveform file: " + path);

    Waveform w;
    w.rate_hz = rate_hz;
    w.modality = modality;
    w.participant_id = participant_id;
    w.session_id = session_id;

    std::string line;
    if (!std::getline(in, line) || line.rfind("t_seconds,", 0) != 0)
        throw IngestionError("waveform CSV missing `t_seconds,value` header: " + path);

    const double dt = 1.0 / rate_hz;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 2)
            throw IngestionError(path + ": line " + std::to_string(row + 2) +
                                 " does not have 2 columns");
        double t, v;
        try {
            t = std::stod(fields[0]);
            v = std::stod(fields[1]);
        } catch (const std::exception&) {
            throw IngestionError(path + ": line " + std::to_string(row + 2) + " is not numeric");
        }
        if (!std::isfinite(v))
            throw InvalidSpecError(path + ": non-finite sample at line " + std::to_string(row + 2));
        if (std::abs(t - static_cast<double>(row) * dt) > dt * 0.01)
            throw IngestionError(path + ": timestamp at line " + std::to_string(row + 2) +
                                 " deviates from the declared rate");
        w.samples.push_back(v);
        ++row;
    }
    w.validate();
    return w;
}

inline void save_waveform_csv(const Waveform& w, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write waveform file: " + path);
    out << "t_seconds,value\n";
    for (std::size_t i = 0; i < w.samples.size(); ++i)
        out << format_g9(static_cast<double>(i) / w.rate_hz) << ',' << format_g9(w.samples[i])
            << '\n';
}

}  // namespace hrv
