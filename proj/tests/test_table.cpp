#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "hrv/synth.hpp"
#include "hrv/table.hpp"

using namespace hrv;

namespace {

std::filesystem::path temp_file(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "hrvbench-table-tests";
    std::filesystem::create_directories(dir);
    return dir / name;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string header_line() {
    std::string h = "dataset_id,participant_id,condition_id,start_s,label";
    for (const auto& n : feature_names()) h += "," + n;
    return h;
}

void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream out(p);
    out << content;
}

std::string sample_row(const std::string& label = "stress") {
    std::string row = "ds,p1,task,12.5," + label;
    for (std::size_t f = 0; f < kFeatureCount; ++f) row += "," + std::to_string(0.25 * (f + 1));
    return row;
}

}  // namespace

TEST_CASE("feature table round-trips through CSV") {
    const FeatureTable t = synth_feature_sets(25, 3.0, 4, 17);
    const auto path = temp_file("roundtrip.csv");
    save_table(t, path.string());
    const FeatureTable r = load_table(path.string());

    REQUIRE(r.rows.size() == t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        CHECK(r.rows[i].dataset_id == t.rows[i].dataset_id);
        CHECK(r.rows[i].participant_id == t.rows[i].participant_id);
        CHECK(r.rows[i].condition_id == t.rows[i].condition_id);
        CHECK(r.rows[i].label == t.rows[i].label);
        CHECK(r.rows[i].start_s == Catch::Approx(t.rows[i].start_s).epsilon(1e-8));
        for (std::size_t f = 0; f < kFeatureCount; ++f)
            CHECK(r.rows[i].features[f] ==
                  Catch::Approx(t.rows[i].features[f]).epsilon(1e-8).margin(1e-8));
    }

    // a second save of the loaded table reproduces the file byte for byte
    const auto path2 = temp_file("roundtrip2.csv");
    save_table(r, path2.string());
    CHECK(slurp(path) == slurp(path2));
}

TEST_CASE("participant_ids are sorted and unique") {
    const FeatureTable t = synth_feature_sets(7, 1.0, 3, 1);
    const auto ids = t.participant_ids();
    REQUIRE(ids.size() == 3);
    CHECK(ids == std::vector<std::string>{"p0", "p1", "p2"});
}

TEST_CASE("load_table rejects a mismatched header") {
    const auto path = temp_file("badheader.csv");
    write_file(path, "dataset,participant\n" + sample_row() + "\n");
    try {
        load_table(path.string());
        FAIL("expected TableFormatError");
    } catch (const TableFormatError& e) {
        CHECK(std::string(e.what()).find("line 1") != std::string::npos);
    }
}

TEST_CASE("load_table rejects an empty file") {
    const auto path = temp_file("empty.csv");
    write_file(path, "");
    CHECK_THROWS_AS(load_table(path.string()), TableFormatError);
}

TEST_CASE("load_table reports the line of a short row") {
    const auto path = temp_file("shortrow.csv");
    write_file(path, header_line() + "\n" + sample_row() + "\nds,p1,task,1.0,stress,0.5\n");
    try {
        load_table(path.string());
        FAIL("expected TableFormatError");
    } catch (const TableFormatError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("line 3") != std::string::npos);
        CHECK(msg.find("27") != std::string::npos);
    }
}

TEST_CASE("load_table rejects unknown labels and non-numeric values") {
    const auto bad_label = temp_file("badlabel.csv");
    write_file(bad_label, header_line() + "\n" + sample_row("maybe") + "\n");
    CHECK_THROWS_AS(load_table(bad_label.string()), TableFormatError);

    std::string row = "ds,p1,task,oops,stress";
    for (std::size_t f = 0; f < kFeatureCount; ++f) row += ",0.5";
    const auto bad_num = temp_file("badnum.csv");
    write_file(bad_num, header_line() + "\n" + row + "\n");
    try {
        load_table(bad_num.string());
        FAIL("expected TableFormatError");
    } catch (const TableFormatError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

TEST_CASE("load_table skips blank lines and accepts unlabeled rows") {
    const auto path = temp_file("blank.csv");
    write_file(path, header_line() + "\n\n" + sample_row("unlabeled") + "\n\n");
    const FeatureTable t = load_table(path.string());
    REQUIRE(t.rows.size() == 1);
    CHECK(t.rows[0].label == Label::unlabeled);
    CHECK(t.rows[0].end_s == Catch::Approx(12.5 + kWindowLenS));
}

TEST_CASE("missing table file raises IoError") {
    CHECK_THROWS_AS(load_table("/nonexistent/table.csv"), IoError);
}
