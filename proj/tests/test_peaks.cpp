#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "hrv/peaks.hpp"
#include "hrv/signal.hpp"
#include "hrv/synth.hpp"

using namespace hrv;

TEST_CASE("clean 60 bpm ECG yields one peak per beat within 10 ms") {
    SynthSpec spec;
    spec.modality = Modality::ECG;
    spec.rate_hz = 700.0;
    spec.duration_s = 60.0;
    spec.mean_hr_bpm = 60.0;
    const auto synth = synth_ecg(spec);

    const auto peaks = detect_r_peaks(preprocess_ecg(synth.waveform));
    CHECK(std::abs(static_cast<long>(peaks.size()) -
                   static_cast<long>(synth.true_beats_s.size())) <= 1);

    const auto stats = match_beats(synth.true_beats_s, peaks.apex_times_s, 0.010);
    CHECK(stats.sensitivity() >= 0.99);
    CHECK(stats.ppv() >= 0.99);
}

TEST_CASE("noisy ECG detection stays above 0.99 sensitivity and PPV") {
    SynthSpec spec;
    spec.modality = Modality::ECG;
    spec.rate_hz = 700.0;
    spec.duration_s = 60.0;
    spec.mean_hr_bpm = 60.0;
    spec.noise.baseline_amp = 0.2;
    spec.noise.baseline_freq_hz = 0.3;
    spec.noise.powerline_amp = 0.1;
    spec.noise.powerline_freq_hz = 50.0;
    spec.noise.white_snr_db = 10.0;
    spec.seed = 5;
    const auto synth = synth_ecg(spec);

    const auto peaks = detect_r_peaks(preprocess_ecg(synth.waveform));
    const auto stats = match_beats(synth.true_beats_s, peaks.apex_times_s, 0.010);
    CHECK(stats.sensitivity() >= 0.99);
    CHECK(stats.ppv() >= 0.99);
}

TEST_CASE("degenerate ECG inputs") {
    Waveform flat;
    flat.rate_hz = 700.0;
    flat.modality = Modality::ECG;
    flat.samples.assign(7000, 0.0);
    CHECK(detect_r_peaks(flat).size() == 0);

    Waveform brief;
    brief.rate_hz = 700.0;
    brief.samples.assign(700, 0.0);  // 1 s
    CHECK_THROWS_AS(detect_r_peaks(brief), InsufficientDataError);
    CHECK_THROWS_AS(detect_systolic_peaks(brief), InsufficientDataError);
}

TEST_CASE("clean 75 bpm BVP beats are recovered within 20 ms") {
    SynthSpec spec;
    spec.modality = Modality::BVP;
    spec.rate_hz = 64.0;
    spec.duration_s = 120.0;
    spec.mean_hr_bpm = 75.0;
    const auto synth = synth_bvp(spec);

    const auto peaks = detect_systolic_peaks(preprocess_bvp(synth.waveform));
    CHECK(std::abs(static_cast<long>(peaks.size()) -
                   static_cast<long>(synth.true_beats_s.size())) <= 2);
    const auto stats = match_beats(synth.true_beats_s, peaks.apex_times_s, 0.020);
    CHECK(stats.sensitivity() >= 0.98);
    CHECK(stats.ppv() >= 0.98);
}

TEST_CASE("the taller of two close candidates survives the 0.333 s rule") {
    // two bumps 0.2 s apart, heights 1.0 and 0.6, on an otherwise flat signal
    Waveform w;
    w.rate_hz = 64.0;
    w.modality = Modality::BVP;
    w.samples.assign(64 * 4, 0.0);
    auto bump = [&](double center_s, double amp) {
        for (std::size_t i = 0; i < w.samples.size(); ++i) {
            const double dt = static_cast<double>(i) / w.rate_hz - center_s;
            w.samples[i] += amp * std::exp(-0.5 * dt * dt / (0.03 * 0.03));
        }
    };
    bump(1.5, 1.0);
    bump(1.7, 0.6);

    const auto peaks = detect_systolic_peaks(w);
    REQUIRE(peaks.size() == 1);
    CHECK(std::abs(peaks.times_s[0] - 1.5) < 0.05);
}

TEST_CASE("27 Hz BVP with wander, mains, and white noise stays above 0.98") {
    SynthSpec spec;
    spec.modality = Modality::BVP;
    spec.rate_hz = 27.0;
    spec.duration_s = 300.0;
    spec.mean_hr_bpm = 70.0;
    spec.hrv_modulation = {0.1, 20.0};
    spec.noise.baseline_amp = 0.2;
    spec.noise.baseline_freq_hz = 0.3;
    spec.noise.powerline_amp = 0.1;
    spec.noise.powerline_freq_hz = 50.0;
    spec.noise.white_snr_db = 10.0;
    spec.seed = 11;
    const auto synth = synth_bvp(spec);

    const auto peaks = detect_systolic_peaks(preprocess_bvp(synth.waveform), &synth.waveform);
    const auto stats = match_beats(synth.true_beats_s, peaks.apex_times_s, 0.020);
    CHECK(stats.sensitivity() >= 0.98);
    CHECK(stats.ppv() >= 0.98);
}

TEST_CASE("detector invariants: ordering, refractory gap, scale invariance") {
    SynthSpec spec;
    spec.modality = Modality::BVP;
    spec.rate_hz = 64.0;
    spec.duration_s = 90.0;
    spec.mean_hr_bpm = 90.0;
    spec.noise.white_snr_db = 12.0;
    spec.seed = 3;
    const auto filtered = preprocess_bvp(synth_bvp(spec).waveform);

    const auto peaks = detect_systolic_peaks(filtered);
    REQUIRE(peaks.size() >= 2);
    for (std::size_t i = 1; i < peaks.times_s.size(); ++i) {
        CHECK(peaks.times_s[i] > peaks.times_s[i - 1]);
        CHECK(peaks.times_s[i] - peaks.times_s[i - 1] >= kBvpMinPeakGapS);
    }

    Waveform scaled = filtered;
    for (double& v : scaled.samples) v *= 37.5;
    CHECK(detect_systolic_peaks(scaled).indices == peaks.indices);

    SynthSpec espec;
    espec.rate_hz = 700.0;
    espec.duration_s = 30.0;
    espec.mean_hr_bpm = 72.0;
    const auto efiltered = preprocess_ecg(synth_ecg(espec).waveform);
    const auto epeaks = detect_r_peaks(efiltered);
    Waveform escaled = efiltered;
    for (double& v : escaled.samples) v *= 0.004;
    CHECK(detect_r_peaks(escaled).indices == epeaks.indices);
}

TEST_CASE("median detected interval tracks ground truth within 5%") {
    for (double bpm : {40.0, 70.0, 110.0, 150.0, 180.0}) {
        SynthSpec spec;
        spec.rate_hz = 700.0;
        spec.duration_s = 60.0;
        spec.mean_hr_bpm = bpm;
        const auto synth = synth_ecg(spec);
        const auto peaks = detect_r_peaks(preprocess_ecg(synth.waveform));
        REQUIRE(peaks.size() >= 3);
        std::vector<double> ibis;
        for (std::size_t i = 1; i < peaks.times_s.size(); ++i)
            ibis.push_back(peaks.times_s[i] - peaks.times_s[i - 1]);
        std::sort(ibis.begin(), ibis.end());
        const double median = ibis[ibis.size() / 2];
        CHECK(std::abs(median - 60.0 / bpm) <= 0.05 * (60.0 / bpm));
    }
}
