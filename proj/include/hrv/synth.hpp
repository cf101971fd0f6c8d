#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "hrv/errors.hpp"
#include "hrv/features.hpp"
#include "hrv/rng.hpp"
#include "hrv/signal.hpp"
#include "hrv/table.hpp"

namespace hrv {

struct HrvModulation {
    double freq_hz = 0.0;
    double depth_ms = 0.0;
};

struct NoiseSpec {
    double baseline_amp = 0.0;
    double baseline_freq_hz = 0.3;
    double powerline_amp = 0.0;
    double powerline_freq_hz = 50.0;
    double white_snr_db = 0.0;  // 0 disables white noise
};

struct SynthSpec {
    Modality modality = Modality::ECG;
    double rate_hz = 700.0;
    double duration_s = 60.0;
    double mean_hr_bpm = 60.0;
    HrvModulation hrv_modulation;
    NoiseSpec noise;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(mean_hr_bpm >= 30.0 && mean_hr_bpm <= 220.0))
            throw InvalidSpecError("mean_hr_bpm must be in [30, 220]");
        if (!(duration_s >= 10.0)) throw InvalidSpecError("duration must be >= 10 s");
        if (!(rate_hz > 0.0)) throw InvalidSpecError("rate_hz must be positive");
    }
};

struct AnnotatedWaveform {
    Waveform waveform;
    std::vector<double> true_beats_s;
};

namespace detail {

// Beat times by accumulating intervals 60000/hr + depth*sin(2 pi f t); the
// interval sequence itself is the modulation target, so diff(true_beats_s)
// recovers it exactly.
inline std::vector<double> synth_beat_times(const SynthSpec& spec) {
    std::vector<double> beats;
    const double base_ms = 60000.0 / spec.mean_hr_bpm;
    double t = 0.6;  // leave room to render the first beat's upstroke
    while (t < spec.duration_s - 0.6) {
        beats.push_back(t);
        double interval_ms = base_ms;
        if (spec.hrv_modulation.depth_ms != 0.0)
            interval_ms += spec.hrv_modulation.depth_ms *
                           std::sin(2.0 * kPi * spec.hrv_modulation.freq_hz * t);
        t += interval_ms / 1000.0;
    }
    return beats;
}

inline void add_gaussian_bump(std::vector<double>& x, double rate, double center_s, double amp,
                              double sigma_s) {
    const double half_span = 5.0 * sigma_s;
    const auto lo = static_cast<std::ptrdiff_t>(std::floor((center_s - half_span) * rate));
    const auto hi = static_cast<std::ptrdiff_t>(std::ceil((center_s + half_span) * rate));
    for (std::ptrdiff_t i = std::max<std::ptrdiff_t>(0, lo);
         i <= std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(x.size()) - 1, hi); ++i) {
        const double dt = static_cast<double>(i) / rate - center_s;
        x[static_cast<std::size_t>(i)] += amp * std::exp(-0.5 * dt * dt / (sigma_s * sigma_s));
    }
}

inline void add_noise(std::vector<double>& x, const SynthSpec& spec, Rng& rng) {
    const std::size_t n = x.size();
    double sig_power = 0.0;
    for (double v : x) sig_power += v * v;
    sig_power /= static_cast<double>(n);

    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / spec.rate_hz;
        if (spec.noise.baseline_amp != 0.0)
            x[i] += spec.noise.baseline_amp * std::sin(2.0 * kPi * spec.noise.baseline_freq_hz * t);
        if (spec.noise.powerline_amp != 0.0)
            x[i] += spec.noise.powerline_amp * std::sin(2.0 * kPi * spec.noise.powerline_freq_hz * t);
    }
    if (spec.noise.white_snr_db != 0.0 && sig_power > 0.0) {
        const double noise_sd = std::sqrt(sig_power / std::pow(10.0, spec.noise.white_snr_db / 10.0));
        for (double& v : x) v += noise_sd * rng.normal();
    }
}

}  // namespace detail

// Template-rendered ECG: per beat a 100 ms-wide Gaussian QRS bump plus
// smaller P and T bumps; annotations sit at the R apex.
inline AnnotatedWaveform synth_ecg(const SynthSpec& spec) {
    spec.validate();
    const auto beats = detail::synth_beat_times(spec);
    const std::size_t n = static_cast<std::size_t>(spec.duration_s * spec.rate_hz);

    AnnotatedWaveform out;
    out.waveform.samples.assign(n, 0.0);
    out.waveform.rate_hz = spec.rate_hz;
    out.waveform.modality = Modality::ECG;
    out.true_beats_s = beats;

    constexpr double kQrsSigma = 0.100 / 6.0;  // ~100 ms wide at the base
    for (double b : beats) {
        detail::add_gaussian_bump(out.waveform.samples, spec.rate_hz, b, 1.0, kQrsSigma);
        detail::add_gaussian_bump(out.waveform.samples, spec.rate_hz, b - 0.17, 0.12, 0.025);  // P
        detail::add_gaussian_bump(out.waveform.samples, spec.rate_hz, b + 0.22, 0.25, 0.045);  // T
    }
    Rng rng(derive_seed(spec.seed, "synth-ecg"));
    detail::add_noise(out.waveform.samples, spec, rng);
    return out;
}

// Template-rendered BVP: asymmetric systolic pulse (fast rise, slow decay)
// with a small dicrotic bump; annotations at the systolic apex.
inline AnnotatedWaveform synth_bvp(const SynthSpec& spec) {
    spec.validate();
    const auto beats = detail::synth_beat_times(spec);
    const std::size_t n = static_cast<std::size_t>(spec.duration_s * spec.rate_hz);

    AnnotatedWaveform out;
    out.waveform.samples.assign(n, 0.0);
    out.waveform.rate_hz = spec.rate_hz;
    out.waveform.modality = Modality::BVP;
    out.true_beats_s = beats;

    for (double b : beats) {
        // asymmetric pulse: narrow rising half, wide falling half
        const double half_span = 0.45;
        const auto lo = static_cast<std::ptrdiff_t>(std::floor((b - half_span) * spec.rate_hz));
        const auto hi = static_cast<std::ptrdiff_t>(std::ceil((b + half_span) * spec.rate_hz));
        for (std::ptrdiff_t i = std::max<std::ptrdiff_t>(0, lo);
             i <= std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(n) - 1, hi); ++i) {
            const double dt = static_cast<double>(i) / spec.rate_hz - b;
            const double sigma = dt < 0.0 ? 0.062 : 0.075;
            out.waveform.samples[static_cast<std::size_t>(i)] +=
                std::exp(-0.5 * dt * dt / (sigma * sigma));
        }
        // dicrotic bump inside the 0.333 s refractory of the systolic apex
        detail::add_gaussian_bump(out.waveform.samples, spec.rate_hz, b + 0.25, 0.15, 0.035);
    }
    Rng rng(derive_seed(spec.seed, "synth-bvp"));
    detail::add_noise(out.waveform.samples, spec, rng);
    return out;
}

// Two Gaussian classes in feature space; the class-mean separation equals
// separation_sigma times the within-class std (split evenly across the 22
// dimensions). Rows go round-robin to participants, each with a small
// per-participant mean jitter.
inline FeatureTable synth_feature_sets(std::size_t n_per_class, double separation_sigma,
                                       std::size_t n_participants, std::uint64_t seed,
                                       const std::string& dataset_id = "synth") {
    if (n_per_class < 1 || n_participants < 1)
        throw InvalidSpecError("n_per_class and n_participants must be >= 1");

    Rng rng(derive_seed(seed, "synth-features"));
    const double shift = separation_sigma / (2.0 * std::sqrt(static_cast<double>(kFeatureCount)));

    std::vector<std::array<double, kFeatureCount>> participant_jitter(n_participants);
    for (auto& j : participant_jitter)
        for (double& v : j) v = 0.25 * rng.normal();

    FeatureTable t;
    for (std::size_t cls = 0; cls < 2; ++cls) {
        for (std::size_t i = 0; i < n_per_class; ++i) {
            const std::size_t pid = (cls * n_per_class + i) % n_participants;
            FeatureWindow w;
            w.dataset_id = dataset_id;
            w.participant_id = "p" + std::to_string(pid);
            w.condition_id = cls ? "stress_task" : "neutral";
            w.label = cls ? Label::stress : Label::no_stress;
            w.start_s = static_cast<double>(i);
            w.end_s = w.start_s + kWindowLenS;
            for (std::size_t f = 0; f < kFeatureCount; ++f) {
                const double mu = (cls ? shift : -shift) + participant_jitter[pid][f];
                w.features[f] = mu + rng.normal();
            }
            t.rows.push_back(std::move(w));
        }
    }
    return t;
}

// Ground-truth detector scoring: greedy one-to-one match within a tolerance.
struct MatchStats {
    std::size_t true_positives = 0;
    std::size_t false_positives = 0;
    std::size_t false_negatives = 0;

    double sensitivity() const {
        const auto denom = true_positives + false_negatives;
        return denom ? static_cast<double>(true_positives) / static_cast<double>(denom) : 0.0;
    }
    double ppv() const {
        const auto denom = true_positives + false_positives;
        return denom ? static_cast<double>(true_positives) / static_cast<double>(denom) : 0.0;
    }
};

inline MatchStats match_beats(const std::vector<double>& truth, const std::vector<double>& detected,
                              double tolerance_s) {
    MatchStats stats;
    std::size_t j = 0;
    std::vector<bool> used(detected.size(), false);
    for (double t : truth) {
        while (j < detected.size() && detected[j] < t - tolerance_s) ++j;
        bool matched = false;
        for (std::size_t k = j; k < detected.size() && detected[k] <= t + tolerance_s; ++k) {
            if (!used[k]) {
                used[k] = true;
                matched = true;
                break;
            }
        }
        matched ? ++stats.true_positives : ++stats.false_negatives;
    }
    stats.false_positives = detected.size() - stats.true_positives;
    return stats;
}

}  // namespace hrv
