#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "hrv/errors.hpp"
#include "hrv/peaks.hpp"

namespace hrv {

// Inter-beat intervals in milliseconds; beat_times_s[i] is the time of the
// beat that ends interval i.
struct IbiSeries {
    std::vector<double> intervals_ms;
    std::vector<double> beat_times_s;

    std::size_t size() const { return intervals_ms.size(); }

    // time of the beat that opens the first interval
    double start_s() const { return beat_times_s.front() - intervals_ms.front() / 1000.0; }
    double span_s() const { return beat_times_s.empty() ? 0.0 : beat_times_s.back() - start_s(); }
};

inline IbiSeries ibis_from_peaks(const PeakSeries& p) {
    if (p.size() < 2) throw InsufficientDataError("need at least 2 peaks to form intervals");
    const auto& times = p.apex_times_s.size() == p.times_s.size() ? p.apex_times_s : p.times_s;
    IbiSeries out;
    out.intervals_ms.reserve(p.size() - 1);
    out.beat_times_s.reserve(p.size() - 1);
    for (std::size_t i = 1; i < times.size(); ++i) {
        const double dt = times[i] - times[i - 1];
        if (!(dt > 0.0)) throw InvalidSpecError("peak times must be strictly increasing");
        out.intervals_ms.push_back(dt * 1000.0);
        out.beat_times_s.push_back(times[i]);
    }
    return out;
}

// Optional plausibility filter (off by default): drops intervals outside
// [250, 2000] ms.
inline IbiSeries plausibility_filter(const IbiSeries& ibi, double min_ms = 250.0,
                                     double max_ms = 2000.0) {
    IbiSeries out;
    for (std::size_t i = 0; i < ibi.size(); ++i) {
        if (ibi.intervals_ms[i] >= min_ms && ibi.intervals_ms[i] <= max_ms) {
            out.intervals_ms.push_back(ibi.intervals_ms[i]);
            out.beat_times_s.push_back(ibi.beat_times_s[i]);
        }
    }
    return out;
}

inline constexpr std::size_t kFeatureCount = 22;
inline constexpr std::size_t kMinIntervalsPerWindow = 10;
inline constexpr double kLfHfSentinel = 1e9;
inline constexpr double kWindowLenS = 60.0;
inline constexpr double kWindowHopS = 1.0;

inline const std::array<std::string, kFeatureCount>& feature_names() {
    static const std::array<std::string, kFeatureCount> names = {
        "MeanNN",   "SDNN",  "RMSSD", "SDSD",  "CVNN",    "CVSD", "MedianNN", "MadNN",
        "MCVNN",    "IQRNN", "pNN20", "pNN50", "RangeNN", "LF",   "HF",       "LF_HF",
        "LFnu",     "HFnu",  "SD1",   "SD2",   "SD1_SD2", "EllipseArea"};
    return names;
}

struct FeatureVector {
    std::array<double, kFeatureCount> values{};
    bool degenerate_spectrum = false;  // LF+HF vanished or HF hit the sentinel path

    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }
};

inline std::size_t feature_index(const std::string& name) {
    const auto& names = feature_names();
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return i;
    throw SchemaError("unknown feature name: " + name);
}

namespace detail {

inline double vec_mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double vec_stddev(const std::vector<double>& v, int ddof) {
    const double m = vec_mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - ddof));
}

inline double vec_median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline std::vector<double> successive_diffs(const std::vector<double>& v) {
    std::vector<double> d;
    d.reserve(v.size() - 1);
    for (std::size_t i = 1; i < v.size(); ++i) d.push_back(v[i] - v[i - 1]);
    return d;
}

// Natural cubic spline through (xs, ys), evaluated at xq (xs strictly
// increasing). Tridiagonal solve for the second derivatives.
inline std::vector<double> cubic_interp(const std::vector<double>& xs,
                                        const std::vector<double>& ys,
                                        const std::vector<double>& xq) {
    const std::size_t n = xs.size();
    std::vector<double> m(n, 0.0);  // second derivatives
    if (n >= 3) {
        std::vector<double> a(n, 0.0), b(n, 0.0), c(n, 0.0), d(n, 0.0);
        b[0] = b[n - 1] = 1.0;
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double h0 = xs[i] - xs[i - 1];
            const double h1 = xs[i + 1] - xs[i];
            a[i] = h0 / 6.0;
            b[i] = (h0 + h1) / 3.0;
            c[i] = h1 / 6.0;
            d[i] = (ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0;
        }
        for (std::size_t i = 1; i < n; ++i) {
            const double w = a[i] / b[i - 1];
            b[i] -= w * c[i - 1];
            d[i] -= w * d[i - 1];
        }
        m[n - 1] = d[n - 1] / b[n - 1];
        for (std::size_t i = n - 1; i-- > 0;) m[i] = (d[i] - c[i] * m[i + 1]) / b[i];
    }
    std::vector<double> out;
    out.reserve(xq.size());
    std::size_t seg = 0;
    for (double x : xq) {
        while (seg + 2 < n && xs[seg + 1] < x) ++seg;
        const double h = xs[seg + 1] - xs[seg];
        const double t = std::clamp((x - xs[seg]) / h, 0.0, 1.0);
        const double y = (1.0 - t) * ys[seg] + t * ys[seg + 1] +
                         h * h / 6.0 *
                             ((std::pow(1.0 - t, 3) - (1.0 - t)) * m[seg] +
                              (std::pow(t, 3) - t) * m[seg + 1]);
        out.push_back(y);
    }
    return out;
}

// One-sided Hann periodogram of a segment, accumulated into psd (length
// nfft/2 + 1); caller divides by segment count.
inline void accumulate_periodogram(const std::vector<double>& seg, double fs,
                                   std::vector<double>& psd) {
    const std::size_t n = seg.size();
    std::vector<double> win(n), xw(n);
    double wss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        win[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(i) / static_cast<double>(n));
        wss += win[i] * win[i];
        xw[i] = seg[i] * win[i];
    }
    const double scale = 1.0 / (fs * wss);
    for (std::size_t k = 0; k < psd.size(); ++k) {
        std::complex<double> acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double ang = -2.0 * kPi * static_cast<double>(k * i) / static_cast<double>(n);
            acc += xw[i] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        double p = scale * std::norm(acc);
        if (k != 0 && !(n % 2 == 0 && k == n / 2)) p *= 2.0;
        psd[k] += p;
    }
}

}  // namespace detail

// 13 time-domain features, written into slots [0, 13) of `out`.
inline void time_features(const IbiSeries& w, FeatureVector& out) {
    if (w.size() < kMinIntervalsPerWindow)
        throw InsufficientDataError("time features need >= 10 intervals");
    const auto& nn = w.intervals_ms;
    const auto diffs = detail::successive_diffs(nn);

    const double mean_nn = detail::vec_mean(nn);
    const double sdnn = detail::vec_stddev(nn, 1);
    double sumsq = 0.0;
    for (double d : diffs) sumsq += d * d;
    const double rmssd = std::sqrt(sumsq / static_cast<double>(diffs.size()));
    const double sdsd = detail::vec_stddev(diffs, 1);
    const double med = detail::vec_median(nn);
    std::vector<double> absdev(nn.size());
    for (std::size_t i = 0; i < nn.size(); ++i) absdev[i] = std::abs(nn[i] - med);
    const double mad = 1.4826 * detail::vec_median(absdev);
    std::vector<double> sorted = nn;
    const double q1 = hrv::detail::quantile(sorted, 0.25);
    const double q3 = hrv::detail::quantile(sorted, 0.75);
    std::size_t nn20 = 0, nn50 = 0;
    for (double d : diffs) {
        if (std::abs(d) > 20.0) ++nn20;
        if (std::abs(d) > 50.0) ++nn50;
    }
    const auto [mn, mx] = std::minmax_element(nn.begin(), nn.end());

    out[0] = mean_nn;
    out[1] = sdnn;
    out[2] = rmssd;
    out[3] = sdsd;
    out[4] = sdnn / mean_nn;
    out[5] = rmssd / mean_nn;
    out[6] = med;
    out[7] = mad;
    out[8] = mad / med;
    out[9] = q3 - q1;
    out[10] = 100.0 * static_cast<double>(nn20) / static_cast<double>(diffs.size());
    out[11] = 100.0 * static_cast<double>(nn50) / static_cast<double>(diffs.size());
    out[12] = *mx - *mn;
}

// Spectral pipeline: cubic interpolation of intervals against beat times,
// resampled at 4 Hz, mean removed, Welch with 32 s Hann segments at 50%
// overlap; a window shorter than 32 s falls back to one full-length segment.
// LF = 0.04-0.15 Hz, HF = 0.15-0.40 Hz band powers in ms^2.
inline void freq_features(const IbiSeries& w, FeatureVector& out) {
    if (w.size() < kMinIntervalsPerWindow)
        throw InsufficientDataError("frequency features need >= 10 intervals");
    const double span = w.beat_times_s.back() - w.beat_times_s.front();
    if (span < 30.0)
        throw InsufficientDataError("frequency features need intervals spanning >= 30 s");

    constexpr double kResampleHz = 4.0;
    const double t0 = w.beat_times_s.front();
    const std::size_t n_samp = static_cast<std::size_t>(std::floor(span * kResampleHz)) + 1;
    std::vector<double> tq(n_samp);
    for (std::size_t i = 0; i < n_samp; ++i) tq[i] = t0 + static_cast<double>(i) / kResampleHz;
    std::vector<double> x = detail::cubic_interp(w.beat_times_s, w.intervals_ms, tq);
    const double xm = detail::vec_mean(x);
    for (double& v : x) v -= xm;

    const std::size_t seg_len =
        std::min<std::size_t>(x.size(), static_cast<std::size_t>(32.0 * kResampleHz));
    const std::size_t step = std::max<std::size_t>(1, seg_len / 2);
    std::vector<double> psd(seg_len / 2 + 1, 0.0);
    std::size_t n_segs = 0;
    for (std::size_t start = 0; start + seg_len <= x.size(); start += step) {
        std::vector<double> seg(x.begin() + static_cast<std::ptrdiff_t>(start),
                                x.begin() + static_cast<std::ptrdiff_t>(start + seg_len));
        detail::accumulate_periodogram(seg, kResampleHz, psd);
        ++n_segs;
    }
    for (double& p : psd) p /= static_cast<double>(n_segs);

    const double df = kResampleHz / static_cast<double>(seg_len);
    auto band_power = [&](double lo, double hi) {
        double total = 0.0;
        for (std::size_t k = 0; k < psd.size(); ++k) {
            const double f = df * static_cast<double>(k);
            if (f >= lo && f < hi) total += psd[k] * df;
        }
        return total;
    };
    const double lf = band_power(0.04, 0.15);
    const double hf = band_power(0.15, 0.40);

    out[13] = lf;
    out[14] = hf;
    if (lf + hf > 0.0) {
        out[15] = hf > 0.0 ? lf / hf : kLfHfSentinel;
        out[16] = lf / (lf + hf);
        out[17] = hf / (lf + hf);
    } else {
        out[15] = 0.0;
        out[16] = 0.0;
        out[17] = 0.0;
    }
    // no meaningful variability (or HF collapsed entirely): mark the window
    out.degenerate_spectrum = !(hf > 0.0) || (lf + hf <= 1e-9);
}

// Poincare descriptors under population statistics: SD1 = SDSD_pop / sqrt(2),
// SD2 = sqrt(2 SDNN_pop^2 - SDSD_pop^2 / 2), area = pi SD1 SD2.
inline void poincare_features(const IbiSeries& w, FeatureVector& out) {
    if (w.size() < kMinIntervalsPerWindow)
        throw InsufficientDataError("Poincare features need >= 10 intervals");
    const auto diffs = detail::successive_diffs(w.intervals_ms);
    const double sdsd_pop = detail::vec_stddev(diffs, 0);
    const double sdnn_pop = detail::vec_stddev(w.intervals_ms, 0);
    const double sd1 = sdsd_pop / std::sqrt(2.0);
    const double sd2 = std::sqrt(std::max(0.0, 2.0 * sdnn_pop * sdnn_pop - 0.5 * sdsd_pop * sdsd_pop));
    out[18] = sd1;
    out[19] = sd2;
    out[20] = sd2 > 0.0 ? sd1 / sd2 : 0.0;
    out[21] = kPi * sd1 * sd2;
}

inline FeatureVector extract_features(const IbiSeries& w) {
    FeatureVector out;
    time_features(w, out);
    freq_features(w, out);
    poincare_features(w, out);
    return out;
}

// --- windowing ------------------------------------------------------------

struct WindowSlice {
    double start_s = 0.0;  // window start in recording time
    IbiSeries ibi;
};

struct Segmentation {
    std::vector<WindowSlice> windows;
    std::size_t dropped = 0;  // windows failing the 10-interval floor
    bool span_too_short = false;
};

// Window k covers [t0 + k*hop, t0 + k*hop + window); an interval belongs to a
// window when its ending beat time falls inside. Windows with fewer than 10
// intervals are dropped and counted.
inline Segmentation segment_windows(const IbiSeries& ibi, double window_s = kWindowLenS,
                                    double hop_s = kWindowHopS) {
    Segmentation out;
    if (ibi.size() == 0 || ibi.span_s() < window_s) {
        out.span_too_short = true;
        return out;
    }
    const double t0 = ibi.start_s();
    const double span = ibi.span_s();
    std::size_t first = 0;  // first interval whose end could fall in the window
    for (std::size_t k = 0;; ++k) {
        const double ws = t0 + static_cast<double>(k) * hop_s;
        if (ws + window_s > t0 + span + 1e-9) break;
        while (first < ibi.size() && ibi.beat_times_s[first] < ws) ++first;
        WindowSlice slice;
        slice.start_s = ws;
        for (std::size_t i = first; i < ibi.size() && ibi.beat_times_s[i] < ws + window_s; ++i) {
            slice.ibi.intervals_ms.push_back(ibi.intervals_ms[i]);
            slice.ibi.beat_times_s.push_back(ibi.beat_times_s[i]);
        }
        if (slice.ibi.size() >= kMinIntervalsPerWindow)
            out.windows.push_back(std::move(slice));
        else
            ++out.dropped;
    }
    return out;
}

// --- labeling + normalization ----------------------------------------------

enum class Label { stress, no_stress, unlabeled };

inline std::string to_string(Label l) {
    switch (l) {
        case Label::stress: return "stress";
        case Label::no_stress: return "no_stress";
        default: return "unlabeled";
    }
}

inline Label label_from_string(const std::string& s) {
    if (s == "stress") return Label::stress;
    if (s == "no_stress") return Label::no_stress;
    if (s == "unlabeled") return Label::unlabeled;
    throw TableFormatError("unknown label: " + s);
}

struct FeatureWindow {
    double start_s = 0.0;
    double end_s = 0.0;
    FeatureVector features;
    Label label = Label::unlabeled;
    std::string participant_id;
    std::string dataset_id;
    std::string condition_id;
};

struct NormalizationParams {
    std::array<double, kFeatureCount> mins{};
    std::array<double, kFeatureCount> maxs{};
    std::string participant_id;
};

// Min/max over the neutral windows starting within the first `budget_s`
// seconds of the neutral segment; if fewer than 30 such windows exist, all
// provided windows are used.
inline NormalizationParams fit_normalization(const std::vector<FeatureWindow>& neutral_windows,
                                             double budget_s = 300.0) {
    if (neutral_windows.empty())
        throw CalibrationError("no neutral windows available for normalization");

    double t0 = neutral_windows.front().start_s;
    for (const auto& w : neutral_windows) t0 = std::min(t0, w.start_s);

    std::vector<const FeatureWindow*> in_budget;
    for (const auto& w : neutral_windows)
        if (w.start_s - t0 < budget_s) in_budget.push_back(&w);
    if (in_budget.size() < 30) {
        in_budget.clear();
        for (const auto& w : neutral_windows) in_budget.push_back(&w);
    }

    NormalizationParams p;
    p.participant_id = neutral_windows.front().participant_id;
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        double lo = in_budget.front()->features[f], hi = lo;
        for (const auto* w : in_budget) {
            lo = std::min(lo, w->features[f]);
            hi = std::max(hi, w->features[f]);
        }
        p.mins[f] = lo;
        p.maxs[f] = hi;
    }
    return p;
}

// (x - min) / (max - min); degenerate ranges map to 0; no clamping.
inline FeatureVector apply_normalization(const NormalizationParams& p, const FeatureVector& v) {
    FeatureVector out = v;
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        const double range = p.maxs[f] - p.mins[f];
        out[f] = range > 0.0 ? (v[f] - p.mins[f]) / range : 0.0;
    }
    return out;
}

}  // namespace hrv
