#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "feature_oracles.hpp"
#include "hrv/features.hpp"
#include "hrv/rng.hpp"

using namespace hrv;

namespace {

IbiSeries steady_ibis(double interval_ms, double total_s) {
    IbiSeries w;
    double t = 0.0;
    while (t + interval_ms / 1000.0 <= total_s) {
        t += interval_ms / 1000.0;
        w.intervals_ms.push_back(interval_ms);
        w.beat_times_s.push_back(t);
    }
    return w;
}

}  // namespace

TEST_CASE("ibis_from_peaks converts apex times to millisecond intervals") {
    PeakSeries p;
    p.rate_hz = 100.0;
    p.indices = {100, 180, 270};
    p.times_s = {1.0, 1.8, 2.7};
    p.apex_times_s = {1.001, 1.802, 2.697};
    const auto ibi = ibis_from_peaks(p);
    REQUIRE(ibi.size() == 2);
    CHECK(ibi.intervals_ms[0] == Catch::Approx(801.0).margin(1e-9));
    CHECK(ibi.intervals_ms[1] == Catch::Approx(895.0).margin(1e-9));
    CHECK(ibi.beat_times_s[0] == Catch::Approx(1.802));
    CHECK(ibi.start_s() == Catch::Approx(1.001));
    CHECK(ibi.span_s() == Catch::Approx(2.697 - 1.001));
}

TEST_CASE("ibis_from_peaks rejects degenerate peak series") {
    PeakSeries p;
    p.rate_hz = 100.0;
    p.indices = {100};
    p.times_s = {1.0};
    p.apex_times_s = {1.0};
    CHECK_THROWS_AS(ibis_from_peaks(p), InsufficientDataError);

    PeakSeries q;
    q.rate_hz = 100.0;
    q.indices = {100, 100};
    q.times_s = {1.0, 1.0};
    q.apex_times_s = {1.0, 1.0};
    CHECK_THROWS_AS(ibis_from_peaks(q), InvalidSpecError);
}

TEST_CASE("plausibility filter drops intervals outside 250-2000 ms") {
    IbiSeries w;
    w.intervals_ms = {800.0, 100.0, 900.0, 2500.0, 250.0, 2000.0};
    w.beat_times_s = {1.0, 1.1, 2.0, 4.5, 4.75, 6.75};
    const auto f = plausibility_filter(w);
    REQUIRE(f.size() == 4);
    CHECK(f.intervals_ms == std::vector<double>{800.0, 900.0, 250.0, 2000.0});
    CHECK(f.beat_times_s == std::vector<double>{1.0, 2.0, 4.75, 6.75});
}

TEST_CASE("time and Poincare features match an independent oracle to 1e-9") {
    Rng rng(42);
    for (int trial = 0; trial < 200; ++trial) {
        const IbiSeries w = oracle::random_window(rng);
        const FeatureVector v = extract_features(w);
        const auto t = oracle::time_features(w.intervals_ms);
        const auto p = oracle::poincare(w.intervals_ms);

        CHECK(oracle::close_rel(v[feature_index("MeanNN")], t.mean_nn, 1e-9));
        CHECK(oracle::close_rel(v[feature_index("SDNN")], t.sdnn, 1e-9));
        CHECK(oracle::close_rel(v[feature_index("RMSSD")], t.rmssd, 1e-9));
        CHECK(oracle::close_rel(v[feature_index("SDSD")], t.sdsd, 1e-9));
        CHECK(oracle::close_rel(v[feature_index("CVNN")], t.cvnn, 1e-9));
        CHECK(oracle::close_rel(v[feature_index("CVSD")], t.cvsd, 1e-9));
        CHECK(oracle::close_rel(v[feature_index("MedianNN")], t.median_nn, 1e-9));
        CHECK(oracle::close_rel(v[feature_index("MadNN")], t.mad_nn, 1e-9));
        CHECK(oracle::close_rel(v[feature_index("MCVNN")], t.mcvnn, 1e-9));
        CHECK(oracle::close_rel(v[feature_index("IQRNN")], t.iqr_nn, 1e-9));
        CHECK(oracle::close_rel(v[feature_index("pNN20")], t.pnn20, 1e-9));
        CHECK(oracle::close_rel(v[feature_index("pNN50")], t.pnn50, 1e-9));
        CHECK(oracle::close_rel(v[feature_index("RangeNN")], t.range_nn, 1e-9));
        CHECK(oracle::close_rel(v[feature_index("SD1")], p.sd1, 1e-9));
        CHECK(oracle::close_rel(v[feature_index("SD2")], p.sd2, 1e-9));
        CHECK(oracle::close_rel(v[feature_index("SD1_SD2")], p.ratio, 1e-9));
        CHECK(oracle::close_rel(v[feature_index("EllipseArea")], p.area, 1e-9));
    }
}

TEST_CASE("band powers match an independent spline + DFT oracle within 5%") {
    Rng rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        const IbiSeries w = oracle::random_window(rng);
        const FeatureVector v = extract_features(w);
        const auto bp = oracle::band_powers(w);
        CHECK(oracle::close_rel(v[feature_index("LF")], bp.lf, 0.05, 1e-9));
        CHECK(oracle::close_rel(v[feature_index("HF")], bp.hf, 0.05, 1e-9));
    }
}

TEST_CASE("spectral identities: normalized powers sum to 1 and ratios are consistent") {
    Rng rng(99);
    for (int trial = 0; trial < 100; ++trial) {
        const IbiSeries w = oracle::random_window(rng);
        const FeatureVector v = extract_features(w);
        const double lf = v[feature_index("LF")], hf = v[feature_index("HF")];
        if (lf + hf > 0.0) {
            CHECK(oracle::close_rel(v[feature_index("LFnu")] + v[feature_index("HFnu")], 1.0, 1e-9));
            if (hf > 0.0) CHECK(oracle::close_rel(v[feature_index("LF_HF")], lf / hf, 1e-9));
        }
    }
}

TEST_CASE("Poincare identities hold against population statistics") {
    Rng rng(123);
    for (int trial = 0; trial < 100; ++trial) {
        const IbiSeries w = oracle::random_window(rng);
        const FeatureVector v = extract_features(w);
        const double sdsd_pop = oracle::population_sd(oracle::diffs(w.intervals_ms));
        const double sdnn_pop = oracle::population_sd(w.intervals_ms);
        const double sd1 = v[feature_index("SD1")], sd2 = v[feature_index("SD2")];
        CHECK(oracle::close_rel(sd1, sdsd_pop / std::sqrt(2.0), 1e-9));
        CHECK(oracle::close_rel(sd1 * sd1 + sd2 * sd2, 2.0 * sdnn_pop * sdnn_pop, 1e-9));
    }
}

TEST_CASE("pNN thresholds are strict") {
    IbiSeries w;
    double t = 0.0;
    // differences alternate exactly +20 / -20 ms: none exceed the threshold
    for (int i = 0; i < 12; ++i) {
        const double iv = 800.0 + (i % 2 ? 20.0 : 0.0);
        t += iv / 1000.0;
        w.intervals_ms.push_back(iv);
        w.beat_times_s.push_back(t + 30.0 * i);  // stretch span past 30 s
    }
    FeatureVector v;
    time_features(w, v);
    CHECK(v[feature_index("pNN20")] == 0.0);
    CHECK(v[feature_index("pNN50")] == 0.0);
}

TEST_CASE("constant interval series has zero variability and a degenerate spectrum") {
    const IbiSeries w = steady_ibis(800.0, 70.0);
    const FeatureVector v = extract_features(w);
    CHECK(v[feature_index("SDNN")] == 0.0);
    CHECK(v[feature_index("RMSSD")] == 0.0);
    CHECK(v[feature_index("RangeNN")] == 0.0);
    CHECK(v[feature_index("SD1")] == 0.0);
    CHECK(v[feature_index("EllipseArea")] == 0.0);
    CHECK(v[feature_index("LF")] + v[feature_index("HF")] <= 1e-9);
    CHECK(v.degenerate_spectrum);
}

TEST_CASE("feature extraction enforces interval and span floors") {
    IbiSeries tiny = steady_ibis(800.0, 5.0);  // < 10 intervals
    CHECK_THROWS_AS(extract_features(tiny), InsufficientDataError);

    IbiSeries brief = steady_ibis(500.0, 12.0);  // 23 intervals but ~12 s span
    CHECK_THROWS_AS(extract_features(brief), InsufficientDataError);
}

TEST_CASE("feature_index resolves every canonical name and rejects unknowns") {
    const auto& names = feature_names();
    for (std::size_t i = 0; i < names.size(); ++i) CHECK(feature_index(names[i]) == i);
    CHECK_THROWS_AS(feature_index("NotAFeature"), SchemaError);
}

TEST_CASE("segment_windows assigns intervals by ending beat time") {
    // beats every second from t=1 to t=100
    const IbiSeries ibi = steady_ibis(1000.0, 100.0);
    const Segmentation seg = segment_windows(ibi);
    // window starts 0..40 inclusive fit inside the 100 s span
    REQUIRE(seg.windows.size() == 41);
    CHECK(seg.dropped == 0);
    CHECK_FALSE(seg.span_too_short);
    for (std::size_t k = 0; k < seg.windows.size(); ++k) {
        const auto& w = seg.windows[k];
        CHECK(w.start_s == Catch::Approx(static_cast<double>(k)));
        for (double bt : w.ibi.beat_times_s) {
            CHECK(bt >= w.start_s);
            CHECK(bt < w.start_s + kWindowLenS);
        }
        // beats at integer times: ends in [k, k+60) are k+1 .. k+59 for k=0
        // and k .. k+59 otherwise
        CHECK(w.ibi.size() == (k == 0 ? 59 : 60));
    }
}

TEST_CASE("segment_windows drops sparse windows and counts them") {
    // 10 s intervals: every window holds only 6 intervals
    const IbiSeries ibi = steady_ibis(10000.0, 200.0);
    const Segmentation seg = segment_windows(ibi);
    CHECK(seg.windows.empty());
    CHECK(seg.dropped > 0);
    CHECK_FALSE(seg.span_too_short);
}

TEST_CASE("segment_windows flags spans shorter than one window") {
    const IbiSeries ibi = steady_ibis(800.0, 45.0);
    const Segmentation seg = segment_windows(ibi);
    CHECK(seg.windows.empty());
    CHECK(seg.dropped == 0);
    CHECK(seg.span_too_short);
}

namespace {

FeatureWindow window_at(double start_s, double value) {
    FeatureWindow w;
    w.start_s = start_s;
    w.end_s = start_s + kWindowLenS;
    w.participant_id = "p1";
    for (std::size_t f = 0; f < kFeatureCount; ++f) w.features[f] = value;
    return w;
}

}  // namespace

TEST_CASE("normalization fits on the first 300 s when enough windows exist") {
    std::vector<FeatureWindow> wins;
    for (int i = 0; i < 35; ++i) wins.push_back(window_at(i, static_cast<double>(i)));
    wins.push_back(window_at(400.0, 1000.0));  // outside the budget, must be ignored
    const auto p = fit_normalization(wins);
    CHECK(p.mins[0] == 0.0);
    CHECK(p.maxs[0] == 34.0);
    CHECK(p.participant_id == "p1");
}

TEST_CASE("normalization falls back to all windows when the budget holds fewer than 30") {
    std::vector<FeatureWindow> wins;
    for (int i = 0; i < 10; ++i) wins.push_back(window_at(50.0 * i, static_cast<double>(i)));
    const auto p = fit_normalization(wins);  // only 6 within 300 s -> use all 10
    CHECK(p.maxs[0] == 9.0);
}

TEST_CASE("normalization maps the fitted range to [0,1] without clamping") {
    std::vector<FeatureWindow> wins;
    for (int i = 0; i < 3; ++i) wins.push_back(window_at(i, static_cast<double>(i)));
    const auto p = fit_normalization(wins);  // range [0, 2]

    FeatureVector v;
    for (std::size_t f = 0; f < kFeatureCount; ++f) v[f] = 1.0;
    CHECK(apply_normalization(p, v)[0] == Catch::Approx(0.5));
    for (std::size_t f = 0; f < kFeatureCount; ++f) v[f] = 5.0;
    CHECK(apply_normalization(p, v)[0] == Catch::Approx(2.5));  // no clamping
    for (std::size_t f = 0; f < kFeatureCount; ++f) v[f] = -2.0;
    CHECK(apply_normalization(p, v)[0] == Catch::Approx(-1.0));
}

TEST_CASE("degenerate normalization ranges map to zero") {
    std::vector<FeatureWindow> wins{window_at(0.0, 3.0), window_at(1.0, 3.0)};
    const auto p = fit_normalization(wins);
    FeatureVector v;
    for (std::size_t f = 0; f < kFeatureCount; ++f) v[f] = 7.0;
    CHECK(apply_normalization(p, v)[0] == 0.0);
}

TEST_CASE("normalization requires at least one neutral window") {
    CHECK_THROWS_AS(fit_normalization({}), CalibrationError);
}
