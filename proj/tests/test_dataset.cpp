#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hrv/dataset.hpp"
#include "hrv/synth.hpp"

using namespace hrv;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "hrvbench-dataset-tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// Render a BVP recording of the given length and write it next to the manifest.
void write_recording(const fs::path& dir, const std::string& file, double duration_s,
                     double hr_bpm, std::uint64_t seed) {
    SynthSpec spec;
    spec.modality = Modality::BVP;
    spec.rate_hz = 64.0;
    spec.duration_s = duration_s;
    spec.mean_hr_bpm = hr_bpm;
    spec.hrv_modulation = {0.1, 25.0};
    spec.seed = seed;
    save_waveform_csv(synth_bvp(spec).waveform, (dir / file).string());
}

struct RecEntry {
    std::string file, cond;
    double t0, t1;
};

nlohmann::json participant_json(const std::string& id, const std::vector<RecEntry>& recs,
                                const std::string& neutral_id = "neutral") {
    nlohmann::json p;
    p["participant_id"] = id;
    p["neutral_condition_id"] = neutral_id;
    p["recordings"] = nlohmann::json::array();
    for (const auto& r : recs)
        p["recordings"].push_back({{"file_path", r.file},
                                   {"condition_id", r.cond},
                                   {"t_start_s", r.t0},
                                   {"t_end_s", r.t1}});
    return p;
}

fs::path write_manifest(const fs::path& dir, const nlohmann::json& participants,
                        const std::string& modality = "BVP", double rate = 64.0) {
    nlohmann::json m;
    m["dataset_id"] = "testset";
    m["modality"] = modality;
    m["rate_hz"] = rate;
    m["participants"] = participants;
    const auto path = dir / "manifest.json";
    std::ofstream out(path);
    out << m.dump(2);
    return path;
}

LabelScheme task_scheme() {
    LabelScheme s;
    s.conditions = {{"neutral", ConditionClass::no_stress}, {"task", ConditionClass::stress}};
    return s;
}

}  // namespace

TEST_CASE("built-in schemes map the documented conditions") {
    const auto schemes = built_in_schemes();
    REQUIRE(schemes.count("WESAD") == 1);
    CHECK(schemes.at("WESAD").classify("neutral") == ConditionClass::no_stress);
    CHECK(schemes.at("WESAD").classify("amusement") == ConditionClass::no_stress);
    CHECK(schemes.at("WESAD").classify("stress") == ConditionClass::stress);
    CHECK(schemes.at("WESAD").classify("unknown_condition") == ConditionClass::exclude);

    CHECK(schemes.at("SWELL-KW").classify("time_pressure") == ConditionClass::stress);
    CHECK(schemes.at("SWELL-KW").classify("email_interruptions") == ConditionClass::stress);
    CHECK(schemes.at("ForDigitStress").classify("interview") == ConditionClass::stress);
    CHECK(schemes.at("ForDigitStress").classify("preparation") == ConditionClass::exclude);
    CHECK(schemes.at("VerBIO").classify("presentation") == ConditionClass::stress);
    CHECK(schemes.at("VerBIO").classify("relaxation") == ConditionClass::no_stress);
    for (const auto& [name, scheme] : schemes) CHECK_NOTHROW(scheme.validate());
}

TEST_CASE("label schemes parse from JSON and are validated") {
    const auto s = scheme_from_json({{"baseline", "no_stress"}, {"exam", "stress"},
                                     {"warmup", "exclude"}});
    CHECK(s.classify("exam") == ConditionClass::stress);
    CHECK(s.classify("warmup") == ConditionClass::exclude);

    CHECK_THROWS_AS(scheme_from_json({{"a", "mystery"}}), ManifestError);
    // a scheme without both classes is unusable
    CHECK_THROWS_AS(scheme_from_json({{"a", "stress"}}), ManifestError);
}

TEST_CASE("manifest loading validates structure and files") {
    const auto dir = fresh_dir("manifest-errors");
    write_recording(dir, "n.csv", 30.0, 70.0, 1);

    SECTION("missing referenced file") {
        const auto path = write_manifest(
            dir, nlohmann::json::array({participant_json("p1", {{"ghost.csv", "neutral", 0, 30}})}));
        CHECK_THROWS_AS(load_manifest(path.string()), IngestionError);
    }
    SECTION("overlapping condition intervals") {
        const auto path = write_manifest(
            dir, nlohmann::json::array({participant_json(
                     "p1", {{"n.csv", "neutral", 0, 30}, {"n.csv", "task", 20, 50}})}));
        CHECK_THROWS_AS(load_manifest(path.string()), ManifestError);
    }
    SECTION("bad modality") {
        const auto path = write_manifest(
            dir, nlohmann::json::array({participant_json("p1", {{"n.csv", "neutral", 0, 30}})}),
            "EEG");
        CHECK_THROWS_AS(load_manifest(path.string()), ManifestError);
    }
    SECTION("empty interval") {
        const auto path = write_manifest(
            dir, nlohmann::json::array({participant_json("p1", {{"n.csv", "neutral", 30, 30}})}));
        CHECK_THROWS_AS(load_manifest(path.string()), ManifestError);
    }
    SECTION("invalid JSON") {
        std::ofstream(dir / "broken.json") << "{ not json";
        CHECK_THROWS_AS(load_manifest((dir / "broken.json").string()), ManifestError);
        CHECK_THROWS_AS(load_manifest((dir / "missing.json").string()), IngestionError);
    }
}

TEST_CASE("feature tables build end to end from a manifest") {
    const auto dir = fresh_dir("build");
    write_recording(dir, "p1_neutral.csv", 180.0, 65.0, 11);
    write_recording(dir, "p1_task.csv", 180.0, 85.0, 12);
    write_recording(dir, "p2_neutral.csv", 180.0, 60.0, 13);
    write_recording(dir, "p2_task.csv", 180.0, 90.0, 14);

    const auto path = write_manifest(
        dir, nlohmann::json::array(
                 {participant_json("p1", {{"p1_neutral.csv", "neutral", 0, 180},
                                          {"p1_task.csv", "task", 180, 360}}),
                  participant_json("p2", {{"p2_neutral.csv", "neutral", 0, 180},
                                          {"p2_task.csv", "task", 180, 360}})}));
    const DatasetManifest m = load_manifest(path.string());
    CHECK(m.dataset_id == "testset");
    CHECK(m.modality == Modality::BVP);
    REQUIRE(m.participants.size() == 2);

    const BuildResult result = build_feature_table(m, task_scheme());
    CHECK(result.exclusions.empty());
    REQUIRE_FALSE(result.table.rows.empty());

    std::size_t n_stress = 0, n_calm = 0;
    for (const auto& r : result.table.rows) {
        CHECK(r.dataset_id == "testset");
        CHECK((r.participant_id == "p1" || r.participant_id == "p2"));
        if (r.condition_id == "task") {
            CHECK(r.label == Label::stress);
            CHECK(r.start_s >= 180.0);
            ++n_stress;
        } else {
            CHECK(r.condition_id == "neutral");
            CHECK(r.label == Label::no_stress);
            CHECK(r.start_s < 180.0);
            ++n_calm;
        }
        for (std::size_t f = 0; f < kFeatureCount; ++f) CHECK(std::isfinite(r.features[f]));
    }
    CHECK(n_stress > 50);
    CHECK(n_calm > 50);

    // building with the plausibility filter on still succeeds on clean data
    BuildOptions opts;
    opts.plausibility_filter = true;
    CHECK_FALSE(build_feature_table(m, task_scheme(), opts).table.rows.empty());
}

TEST_CASE("participants without usable neutral data are excluded with reasons") {
    const auto dir = fresh_dir("exclusions");
    write_recording(dir, "good_neutral.csv", 180.0, 70.0, 21);
    write_recording(dir, "good_task.csv", 180.0, 88.0, 22);
    write_recording(dir, "short_neutral.csv", 45.0, 70.0, 23);  // < one window
    write_recording(dir, "orphan_task.csv", 180.0, 92.0, 24);

    const auto path = write_manifest(
        dir,
        nlohmann::json::array(
            {participant_json("good", {{"good_neutral.csv", "neutral", 0, 180},
                                       {"good_task.csv", "task", 180, 360}}),
             participant_json("no_neutral", {{"orphan_task.csv", "task", 0, 180}}),
             participant_json("short_neutral", {{"short_neutral.csv", "neutral", 0, 45},
                                                {"orphan_task.csv", "task", 45, 225}})}));
    const DatasetManifest m = load_manifest(path.string());
    const BuildResult result = build_feature_table(m, task_scheme());

    REQUIRE(result.exclusions.size() == 2);
    for (const auto& e : result.exclusions) {
        if (e.participant_id == "no_neutral")
            CHECK(e.reason == "no neutral-condition recording");
        else if (e.participant_id == "short_neutral")
            CHECK(e.reason == "neutral calibration failed");
        else
            FAIL("unexpected exclusion: " + e.participant_id);
    }
    for (const auto& r : result.table.rows) CHECK(r.participant_id == "good");

    const auto report_path = dir / "exclusions.json";
    save_exclusion_report(result.exclusions, report_path.string());
    nlohmann::json j;
    std::ifstream(report_path) >> j;
    REQUIRE(j.is_array());
    CHECK(j.size() == 2);
    CHECK(j[0].contains("participant_id"));
    CHECK(j[0].contains("reason"));
}

TEST_CASE("exclude-mapped conditions contribute no rows") {
    const auto dir = fresh_dir("exclude-cond");
    write_recording(dir, "n.csv", 180.0, 68.0, 31);
    write_recording(dir, "t.csv", 180.0, 86.0, 32);
    write_recording(dir, "prep.csv", 180.0, 75.0, 33);

    const auto path = write_manifest(
        dir, nlohmann::json::array({participant_json("p1", {{"n.csv", "neutral", 0, 180},
                                                            {"t.csv", "task", 180, 360},
                                                            {"prep.csv", "prep", 360, 540}})}));
    const BuildResult result = build_feature_table(load_manifest(path.string()), task_scheme());
    for (const auto& r : result.table.rows) CHECK(r.condition_id != "prep");
}

TEST_CASE("an entirely excluded dataset raises EmptyTableError") {
    const auto dir = fresh_dir("empty");
    write_recording(dir, "t.csv", 180.0, 80.0, 41);
    const auto path = write_manifest(
        dir, nlohmann::json::array({participant_json("p1", {{"t.csv", "task", 0, 180}})}));
    CHECK_THROWS_AS(build_feature_table(load_manifest(path.string()), task_scheme()),
                    EmptyTableError);
}
