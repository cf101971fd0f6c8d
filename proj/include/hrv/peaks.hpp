#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "hrv/errors.hpp"
#include "hrv/signal.hpp"

namespace hrv {

// Detected beat locations in a filtered waveform. times_s is the sample grid
// (indices / rate); apex_times_s adds parabolic sub-sample refinement, which
// matters at low rates (a 27 Hz grid alone is coarser than the timing budget).
struct PeakSeries {
    std::vector<std::size_t> indices;
    std::vector<double> times_s;
    std::vector<double> apex_times_s;
    double rate_hz = 0.0;
    Modality modality = Modality::ECG;

    std::size_t size() const { return indices.size(); }
};

inline constexpr double kBvpMinPeakGapS = 0.333;

namespace detail {

inline std::vector<double> moving_average(const std::vector<double>& x, std::size_t win) {
    if (win < 1) win = 1;
    std::vector<double> out(x.size(), 0.0);
    double acc = 0.0;
    const std::size_t half = win / 2;
    // centered window, truncated at the edges
    for (std::size_t i = 0; i < x.size(); ++i) {
        const std::size_t lo = i >= half ? i - half : 0;
        const std::size_t hi = std::min(x.size() - 1, i + (win - 1 - half));
        if (i == 0) {
            for (std::size_t j = lo; j <= hi; ++j) acc += x[j];
        } else {
            const std::size_t prev_lo = (i - 1) >= half ? (i - 1) - half : 0;
            const std::size_t prev_hi = std::min(x.size() - 1, (i - 1) + (win - 1 - half));
            if (lo > prev_lo) acc -= x[prev_lo];
            if (hi > prev_hi) acc += x[hi];
        }
        out[i] = acc / static_cast<double>(hi - lo + 1);
    }
    return out;
}

// sub-sample apex offset in [-0.5, 0.5] from a parabola through the three
// samples around idx
inline double parabolic_offset(const std::vector<double>& y, std::size_t idx) {
    if (idx == 0 || idx + 1 >= y.size()) return 0.0;
    const double denom = y[idx - 1] - 2.0 * y[idx] + y[idx + 1];
    if (denom == 0.0) return 0.0;
    const double off = 0.5 * (y[idx - 1] - y[idx + 1]) / denom;
    return std::clamp(off, -0.5, 0.5);
}

// peak value of the same parabola; sample heights alone vary with where the
// apex falls between samples, which skews quantile thresholds at low rates
inline double parabolic_height(const std::vector<double>& y, std::size_t idx) {
    const double off = parabolic_offset(y, idx);
    if (idx == 0 || idx + 1 >= y.size()) return y[idx];
    return y[idx] - 0.25 * (y[idx - 1] - y[idx + 1]) * off;
}

// Windowed-sinc interpolation of y at a fractional position. Sampled signals
// are band-limited to their own Nyquist, so this reconstructs values between
// samples without a shape model; taps outside the array are dropped.
inline double sinc_at(const std::vector<double>& y, double pos, std::ptrdiff_t support) {
    const auto nn = static_cast<std::ptrdiff_t>(y.size());
    const auto base = static_cast<std::ptrdiff_t>(std::floor(pos));
    double acc = 0.0;
    for (std::ptrdiff_t k = std::max<std::ptrdiff_t>(0, base - support + 1);
         k <= std::min(nn - 1, base + support); ++k) {
        const double u = pos - static_cast<double>(k);
        const double s = u == 0.0 ? 1.0 : std::sin(kPi * u) / (kPi * u);
        const double win = 0.5 + 0.5 * std::cos(kPi * u / static_cast<double>(support));
        acc += y[static_cast<std::size_t>(k)] * s * win;
    }
    return acc;
}

// position of the maximum of the sinc-reconstructed curve within +/-1 sample
// of the integer argmax, found on a 1/16-sample grid
inline double sinc_apex(const std::vector<double>& y, std::size_t idx, std::ptrdiff_t support) {
    constexpr int kSteps = 16;
    double best_pos = static_cast<double>(idx);
    double best_v = sinc_at(y, best_pos, support);
    for (int j = -kSteps; j <= kSteps; ++j) {
        const double pos = static_cast<double>(idx) + static_cast<double>(j) / kSteps;
        const double v = sinc_at(y, pos, support);
        if (v > best_v) {
            best_v = v;
            best_pos = pos;
        }
    }
    return best_pos;
}

inline double quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    if (v.empty()) return 0.0;
    const double pos = q * static_cast<double>(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return v[lo] * (1.0 - frac) + v[hi] * frac;
}

}  // namespace detail

// Two-moving-average QRS block detector over the squared filtered signal.
// Windows: 97 ms (QRS scale) and 611 ms (beat scale); a block is a run where
// the QRS average exceeds the beat average plus 0.08 * mean of the squared
// signal, and must be wider than 80 ms. One peak per block, at the block's
// squared-signal maximum.
inline PeakSeries detect_r_peaks(const Waveform& w) {
    if (w.duration_s() < 2.0)
        throw InsufficientDataError("ECG peak detection needs at least 2 s of signal");

    const std::size_t n = w.samples.size();
    std::vector<double> sq(n);
    for (std::size_t i = 0; i < n; ++i) sq[i] = w.samples[i] * w.samples[i];

    const double mean_sq = std::accumulate(sq.begin(), sq.end(), 0.0) / static_cast<double>(n);

    PeakSeries out;
    out.rate_hz = w.rate_hz;
    out.modality = Modality::ECG;
    if (mean_sq <= 0.0) return out;  // zero-variance signal: no beats

    const auto win = [&](double seconds) {
        return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(seconds * w.rate_hz)));
    };
    const std::vector<double> ma_qrs = detail::moving_average(sq, win(0.097));
    const std::vector<double> ma_beat = detail::moving_average(sq, win(0.611));

    constexpr double kBeta = 0.08;
    const double offset = kBeta * mean_sq;
    const std::size_t min_block = win(0.080);

    std::size_t block_start = 0;
    bool in_block = false;
    for (std::size_t i = 0; i <= n; ++i) {
        const bool active = i < n && ma_qrs[i] > ma_beat[i] + offset;
        if (active && !in_block) {
            in_block = true;
            block_start = i;
        } else if (!active && in_block) {
            in_block = false;
            if (i - block_start > min_block) {
                std::size_t apex = block_start;
                for (std::size_t j = block_start + 1; j < i; ++j)
                    if (sq[j] > sq[apex]) apex = j;
                out.indices.push_back(apex);
                out.times_s.push_back(static_cast<double>(apex) / w.rate_hz);
                out.apex_times_s.push_back(
                    (static_cast<double>(apex) + detail::parabolic_offset(sq, apex)) / w.rate_hz);
            }
        }
    }
    return out;
}

// Systolic peak detector. The height threshold is Q3 - 1.5 IQR of the heights
// of all strict local maxima of the filtered signal over the whole recording:
// wideband noise populates the lower quartiles of that pool, so the fence
// lands between noise maxima and genuine beats. Peak *positions*, though, come
// from a heavily smoothed copy (150 ms triangular kernel, two moving-average
// passes), which suppresses spurious maxima between beats. Candidates within
// 0.333 s of a taller one are dropped (earlier wins a height tie). Timing is
// then refined by cross-correlating each beat with the ensemble beat template
// averaged over the recording, with sub-sample lags from windowed-sinc
// reconstruction of the correlation. When the unfiltered waveform is supplied,
// apex timing is calibrated against it: the band-pass smooths the asymmetric
// pulse and shifts its apex by a few milliseconds, so beats are located on the
// filtered signal but the common apex offset is measured on the raw one.
inline PeakSeries detect_systolic_peaks(const Waveform& w, const Waveform* raw = nullptr) {
    if (w.duration_s() < 2.0)
        throw InsufficientDataError("BVP peak detection needs at least 2 s of signal");

    const std::size_t n = w.samples.size();
    const auto win_for = [&](double seconds) {
        auto win = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(seconds * w.rate_hz)));
        return win | 1;  // odd width keeps the kernel centered (no half-sample delay)
    };
    const std::size_t heavy_win = win_for(0.15);
    const std::vector<double> smoothed =
        detail::moving_average(detail::moving_average(w.samples, heavy_win), heavy_win);
    const std::vector<double> light = detail::moving_average(w.samples, win_for(0.06));

    // height fence from every strict local maximum of the filtered signal;
    // sub-zero maxima (ripples, dicrotic remnants, noise) belong in the pool —
    // they fill the lower quartiles so the fence lands below the beat cluster
    // instead of trimming its tail. Interpolated heights avoid the sampling-
    // phase spread that skews the quantiles at low rates.
    std::vector<double> pool;
    for (std::size_t i = 1; i + 1 < n; ++i)
        if (w.samples[i] > w.samples[i - 1] && w.samples[i] > w.samples[i + 1])
            pool.push_back(detail::parabolic_height(w.samples, i));
    const double q1 = detail::quantile(pool, 0.25);
    const double q3 = detail::quantile(pool, 0.75);
    const double threshold = q3 - 1.5 * (q3 - q1);

    // candidate positions: strict local maxima of the smoothed copy
    std::vector<std::size_t> candidates;
    for (std::size_t i = 1; i + 1 < n; ++i)
        if (smoothed[i] > smoothed[i - 1] && smoothed[i] > smoothed[i + 1] && smoothed[i] > 0.0)
            candidates.push_back(i);

    PeakSeries out;
    out.rate_hz = w.rate_hz;
    out.modality = Modality::BVP;
    if (candidates.empty()) return out;

    // each candidate's height is read off the filtered signal at the local
    // apex nearest the smoothed maximum
    const std::size_t refine_span = win_for(0.10);
    std::vector<std::size_t> survivors;
    std::vector<double> survivor_heights;
    for (std::size_t i : candidates) {
        const std::size_t lo = i >= refine_span ? i - refine_span : 0;
        const std::size_t hi = std::min(n - 1, i + refine_span);
        std::size_t apex = lo;
        for (std::size_t j = lo + 1; j <= hi; ++j)
            if (w.samples[j] > w.samples[apex]) apex = j;
        const double h = detail::parabolic_height(w.samples, apex);
        if (h >= threshold) {
            survivors.push_back(i);
            survivor_heights.push_back(h);
        }
    }

    // tallest-first greedy spacing; ties broken toward the earlier index
    std::vector<std::size_t> order(survivors.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double ha = survivor_heights[a], hb = survivor_heights[b];
        if (ha != hb) return ha > hb;
        return survivors[a] < survivors[b];
    });

    const double min_gap = kBvpMinPeakGapS * w.rate_hz;
    std::vector<std::size_t> kept;
    for (std::size_t oi : order) {
        const std::size_t idx = survivors[oi];
        bool clear = true;
        for (std::size_t k : kept) {
            const double gap = idx > k ? static_cast<double>(idx - k) : static_cast<double>(k - idx);
            if (gap < min_gap) {
                clear = false;
                break;
            }
        }
        if (clear) kept.push_back(idx);
    }
    std::sort(kept.begin(), kept.end());

    // light-smoothing apex estimate, used directly when matched refinement
    // is not possible (too few beats, or a truncated window at the edges)
    const auto light_apex = [&](std::size_t i) {
        const std::size_t lo = i >= refine_span ? i - refine_span : 0;
        const std::size_t hi = std::min(n - 1, i + refine_span);
        std::size_t apex = lo;
        for (std::size_t j = lo + 1; j <= hi; ++j)
            if (light[j] > light[apex]) apex = j;
        return static_cast<double>(apex) + detail::parabolic_offset(light, apex);
    };

    // Matched refinement: single-sample apex estimates jitter with noise, so
    // average the beat shape across the whole recording (the noise averages
    // out over hundreds of beats) and re-align every beat to that template by
    // cross-correlation, which uses the full beat cycle rather than three
    // samples. The window spans +/- min(0.6 s, 0.8 * median gap): wide enough
    // that neighbouring beats contribute timing information through the
    // template instead of acting as interference, but short of the next apex.
    constexpr double kTmplHalfMaxS = 0.60;
    constexpr double kTmplHalfGapFrac = 0.80;
    std::vector<double> apex_pos;  // fractional sample positions
    apex_pos.reserve(kept.size());
    std::ptrdiff_t half = 0;
    std::vector<double> tmpl;  // ensemble beat template
    if (kept.size() >= 8) {
        std::vector<double> gaps;
        for (std::size_t k = 1; k < kept.size(); ++k)
            gaps.push_back(static_cast<double>(kept[k] - kept[k - 1]));
        const double med_gap = detail::quantile(gaps, 0.5);
        half = std::max<std::ptrdiff_t>(
            2, static_cast<std::ptrdiff_t>(
                   std::min(kTmplHalfMaxS * w.rate_hz, kTmplHalfGapFrac * med_gap)));
        tmpl.assign(static_cast<std::size_t>(2 * half + 1), 0.0);
        std::size_t used = 0;
        for (std::size_t p : kept) {
            const auto c = static_cast<std::ptrdiff_t>(p);
            if (c - half < 0 || c + half >= static_cast<std::ptrdiff_t>(n)) continue;
            for (std::ptrdiff_t k = -half; k <= half; ++k)
                tmpl[static_cast<std::size_t>(k + half)] +=
                    w.samples[static_cast<std::size_t>(c + k)];
            ++used;
        }
        if (used >= 8) {
            for (double& v : tmpl) v /= static_cast<double>(used);
        } else {
            tmpl.clear();
        }
    }
    double tmpl_apex_off = 0.0;  // template apex relative to its centre
    if (!tmpl.empty()) {
        std::size_t ta = 0;
        for (std::size_t k = 1; k < tmpl.size(); ++k)
            if (tmpl[k] > tmpl[ta]) ta = k;
        // a parabola would be biased on the asymmetric pulse at coarse sample
        // spacing; sinc reconstruction finds the continuous apex
        tmpl_apex_off = detail::sinc_apex(tmpl, ta, 6) - static_cast<double>(half);
    }

    const auto max_lag = static_cast<std::ptrdiff_t>(refine_span);
    const std::ptrdiff_t sinc_l = 12;
    const std::ptrdiff_t margin = sinc_l + 2;
    std::vector<bool> beat_refined(kept.size(), false);
    std::size_t refined = 0;
    for (std::size_t bi = 0; bi < kept.size(); ++bi) {
        const auto c = static_cast<std::ptrdiff_t>(kept[bi]);
        if (tmpl.empty() || c - half - max_lag - margin < 0 ||
            c + half + max_lag + margin >= static_cast<std::ptrdiff_t>(n)) {
            apex_pos.push_back(light_apex(kept[bi]));
            continue;
        }
        std::vector<double> corr(static_cast<std::size_t>(2 * (max_lag + margin) + 1), 0.0);
        for (std::ptrdiff_t d = -max_lag - margin; d <= max_lag + margin; ++d) {
            double acc = 0.0;
            for (std::ptrdiff_t k = -half; k <= half; ++k)
                acc += tmpl[static_cast<std::size_t>(k + half)] *
                       w.samples[static_cast<std::size_t>(c + d + k)];
            corr[static_cast<std::size_t>(d + max_lag + margin)] = acc;
        }
        const std::ptrdiff_t zero = max_lag + margin;  // index of lag 0
        std::ptrdiff_t d0 = -max_lag;
        for (std::ptrdiff_t d = -max_lag; d <= max_lag; ++d)
            if (corr[static_cast<std::size_t>(d + zero)] >
                corr[static_cast<std::size_t>(d0 + zero)])
                d0 = d;
        const double best_tau =
            detail::sinc_apex(corr, static_cast<std::size_t>(d0 + zero), sinc_l) -
            static_cast<double>(zero);
        apex_pos.push_back(static_cast<double>(c) + best_tau + tmpl_apex_off);
        beat_refined[bi] = true;
        ++refined;
    }

    // The ensemble template is the pulse convolved with the candidate-offset
    // density; on an asymmetric pulse that convolution skews the apex, biasing
    // every beat by the same sub-sample amount. Re-average the waveform on a
    // fine grid aligned at the estimated apexes: the apex of that aligned
    // average sits at minus the common bias, so adding it self-calibrates.
    const std::vector<double>& apex_src =
        (raw && raw->samples.size() == n) ? raw->samples : w.samples;
    if (refined >= 8) {
        constexpr int kFine = 4;                     // steps per sample
        const std::ptrdiff_t fine_half = 3 * kFine;  // +/-3 samples around apex
        std::vector<double> aligned(static_cast<std::size_t>(2 * fine_half + 1), 0.0);
        std::size_t used = 0;
        for (std::size_t bi = 0; bi < kept.size(); ++bi) {
            if (!beat_refined[bi]) continue;
            const double centre = apex_pos[bi];
            const double span = static_cast<double>(fine_half) / kFine +
                                static_cast<double>(sinc_l) + 1.0;
            if (centre - span < 0.0 || centre + span >= static_cast<double>(n)) continue;
            for (std::ptrdiff_t f = -fine_half; f <= fine_half; ++f)
                aligned[static_cast<std::size_t>(f + fine_half)] +=
                    detail::sinc_at(apex_src, centre + static_cast<double>(f) / kFine, sinc_l);
            ++used;
        }
        if (used >= 8) {
            std::size_t fa = 0;
            for (std::size_t k = 1; k < aligned.size(); ++k)
                if (aligned[k] > aligned[fa]) fa = k;
            if (fa > 0 && fa + 1 < aligned.size()) {
                const double off = detail::parabolic_offset(aligned, fa);
                const double corr_samples =
                    (static_cast<double>(fa) + off - static_cast<double>(fine_half)) / kFine;
                for (std::size_t bi = 0; bi < kept.size(); ++bi)
                    if (beat_refined[bi]) apex_pos[bi] += corr_samples;
            }
        }
    }

    std::sort(apex_pos.begin(), apex_pos.end());
    for (double pos : apex_pos) {
        const double clamped = std::clamp(pos, 0.0, static_cast<double>(n - 1));
        const auto idx = static_cast<std::size_t>(std::lround(clamped));
        // refinement can pull neighbours together; keep one peak per apex
        if (!out.indices.empty() && idx <= out.indices.back()) continue;
        out.indices.push_back(idx);
        out.times_s.push_back(static_cast<double>(idx) / w.rate_hz);
        out.apex_times_s.push_back(clamped / w.rate_hz);
    }
    return out;
}

}  // namespace hrv
