#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "hrv/errors.hpp"

namespace hrv {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

enum class Modality { ECG, BVP };

inline std::string to_string(Modality m) { return m == Modality::ECG ? "ECG" : "BVP"; }

// A uniformly sampled physiological signal.
struct Waveform {
    std::vector<double> samples;
    double rate_hz = 0.0;
    Modality modality = Modality::ECG;
    std::string participant_id;
    std::string session_id;

    double duration_s() const { return static_cast<double>(samples.size()) / rate_hz; }

    void validate() const {
        if (samples.size() < 2) throw InvalidSpecError("waveform must hold at least 2 samples");
        if (!(rate_hz > 0.0) || !std::isfinite(rate_hz))
            throw InvalidSpecError("waveform rate must be positive and finite");
        for (double v : samples)
            if (!std::isfinite(v)) throw InvalidSpecError("waveform contains non-finite samples");
    }
};

struct BandpassSpec {
    double low_hz = 0.0;
    double high_hz = 0.0;
    int order = 2;
};

// Recursive filter as numerator/denominator polynomials in z^-1, a[0] == 1.
struct FilterCoefficients {
    std::vector<double> b;
    std::vector<double> a;

    int pole_count() const { return static_cast<int>(a.size()) - 1; }

    // |H(e^{j 2 pi f / fs})|
    double magnitude_at(double freq_hz, double rate_hz) const {
        const std::complex<double> z = std::exp(std::complex<double>(0.0, -2.0 * kPi * freq_hz / rate_hz));
        std::complex<double> num = 0.0, den = 0.0;
        std::complex<double> zp = 1.0;
        for (std::size_t i = 0; i < std::max(b.size(), a.size()); ++i) {
            if (i < b.size()) num += b[i] * zp;
            if (i < a.size()) den += a[i] * zp;
            zp *= z;
        }
        return std::abs(num / den);
    }
};

namespace detail {

// Expand a set of roots into real polynomial coefficients (highest power of
// z^0 first, i.e. prod (1 - r z^-1) expressed in z^-1 powers).
inline std::vector<double> poly_from_roots(const std::vector<std::complex<double>>& roots) {
    std::vector<std::complex<double>> c{1.0};
    for (const auto& r : roots) {
        c.push_back(0.0);
        for (std::size_t i = c.size() - 1; i >= 1; --i) c[i] -= r * c[i - 1];
    }
    std::vector<double> out(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) out[i] = c[i].real();
    return out;
}

}  // namespace detail

// Butterworth band-pass via the analog prototype, low-pass to band-pass
// transform, and bilinear transform with frequency pre-warping.
inline FilterCoefficients design_bandpass(const BandpassSpec& spec, double rate_hz) {
    if (!std::isfinite(spec.low_hz) || !std::isfinite(spec.high_hz) || !std::isfinite(rate_hz))
        throw InvalidSpecError("band-pass spec must be finite");
    if (!(spec.low_hz > 0.0) || !(spec.high_hz > spec.low_hz))
        throw InvalidSpecError("band-pass requires 0 < low_hz < high_hz");
    if (spec.order < 1) throw InvalidSpecError("filter order must be >= 1");
    if (!(spec.high_hz < rate_hz / 2.0))
        throw InvalidSpecError("high_hz " + std::to_string(spec.high_hz) +
                               " must be below Nyquist " + std::to_string(rate_hz / 2.0));

    const int n = spec.order;
    const double fs2 = 2.0 * rate_hz;
    const double w1 = fs2 * std::tan(kPi * spec.low_hz / rate_hz);
    const double w2 = fs2 * std::tan(kPi * spec.high_hz / rate_hz);
    const double w0 = std::sqrt(w1 * w2);
    const double bw = w2 - w1;

    // analog low-pass prototype poles on the unit circle, left half-plane
    std::vector<std::complex<double>> lp_poles;
    for (int k = 0; k < n; ++k) {
        const double theta = kPi * (2.0 * k + n + 1.0) / (2.0 * n);
        lp_poles.emplace_back(std::cos(theta), std::sin(theta));
    }

    // low-pass -> band-pass: each prototype pole p maps to the two roots of
    // s^2 - p*bw*s + w0^2 = 0; n zeros appear at s = 0
    std::vector<std::complex<double>> poles;
    for (const auto& p : lp_poles) {
        const std::complex<double> pb = p * (bw / 2.0);
        const std::complex<double> disc = std::sqrt(pb * pb - w0 * w0);
        poles.push_back(pb + disc);
        poles.push_back(pb - disc);
    }
    // analog gain of the band-pass is bw^n
    double gain = std::pow(bw, n);

    // bilinear transform: s -> 2 fs (z-1)/(z+1)
    std::vector<std::complex<double>> zpoles, zzeros;
    std::complex<double> num = 1.0, den = 1.0;
    for (const auto& p : poles) {
        zpoles.push_back((fs2 + p) / (fs2 - p));
        den *= (fs2 - p);
    }
    for (int k = 0; k < n; ++k) {
        zzeros.push_back(1.0);   // analog zero at s = 0 maps to z = 1
        zzeros.push_back(-1.0);  // zero at infinity maps to z = -1
        num *= fs2;              // contribution of the s = 0 zeros
    }
    gain *= (num / den).real();

    FilterCoefficients coeffs;
    coeffs.a = detail::poly_from_roots(zpoles);
    coeffs.b = detail::poly_from_roots(zzeros);
    for (double& v : coeffs.b) v *= gain;

    for (const auto& zp : zpoles)
        if (!(std::abs(zp) < 1.0))
            throw InvalidSpecError("designed filter is unstable for this spec/rate");
    return coeffs;
}

namespace detail {

// Direct-form transposed-II single pass, zero initial state.
inline void filter_in_place(const FilterCoefficients& c, std::vector<double>& x) {
    const std::size_t nb = c.b.size(), na = c.a.size();
    std::vector<double> state(std::max(nb, na) - 1, 0.0);
    for (double& xn : x) {
        const double in = xn;
        const double out = c.b[0] * in + state[0];
        for (std::size_t i = 0; i + 1 < state.size(); ++i) {
            state[i] = state[i + 1] + (i + 1 < nb ? c.b[i + 1] * in : 0.0) -
                       (i + 1 < na ? c.a[i + 1] * out : 0.0);
        }
        const std::size_t last = state.size() - 1;
        state[last] = (last + 1 < nb ? c.b[last + 1] * in : 0.0) -
                      (last + 1 < na ? c.a[last + 1] * out : 0.0);
        xn = out;
    }
}

}  // namespace detail

// Forward-backward application with odd-reflection edge padding. Output has
// the input's length and rate; in-band peak timing is preserved.
inline Waveform apply_zero_phase(const FilterCoefficients& coeffs, const Waveform& w) {
    const std::size_t n = w.samples.size();
    const std::size_t min_len = static_cast<std::size_t>(3 * coeffs.pole_count()) + 1;
    if (n <= min_len)
        throw InsufficientDataError("waveform too short for zero-phase filtering (" +
                                    std::to_string(n) + " samples)");

    const std::size_t pad = std::min<std::size_t>(n - 1, 3 * (coeffs.pole_count() + 1));
    std::vector<double> ext;
    ext.reserve(n + 2 * pad);
    for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * w.samples[0] - w.samples[i]);
    ext.insert(ext.end(), w.samples.begin(), w.samples.end());
    for (std::size_t i = 2; i <= pad + 1; ++i)
        ext.push_back(2.0 * w.samples[n - 1] - w.samples[n - i]);

    detail::filter_in_place(coeffs, ext);
    std::reverse(ext.begin(), ext.end());
    detail::filter_in_place(coeffs, ext);
    std::reverse(ext.begin(), ext.end());

    Waveform out = w;
    out.samples.assign(ext.begin() + static_cast<std::ptrdiff_t>(pad),
                       ext.begin() + static_cast<std::ptrdiff_t>(pad + n));
    return out;
}

inline Waveform preprocess_ecg(const Waveform& w) {
    if (w.modality != Modality::ECG)
        throw ModalityError("preprocess_ecg expects an ECG waveform");
    return apply_zero_phase(design_bandpass({8.0, 20.0, 2}, w.rate_hz), w);
}

// Removes the coherent sinusoid at freq_hz by least-squares fitting sin/cos
// over the whole record and subtracting. A sampled mains tone is an exact
// sinusoid at its folded frequency, so this cancels the interference while
// incoherent signal energy at the same frequency projects onto only two
// degrees of freedom and is left essentially untouched.
inline void subtract_coherent_tone(std::vector<double>& x, double freq_hz, double rate_hz) {
    const double wstep = 2.0 * kPi * freq_hz / rate_hz;
    double ss = 0.0, sc = 0.0, cc = 0.0, xs = 0.0, xc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double s = std::sin(wstep * static_cast<double>(i));
        const double c = std::cos(wstep * static_cast<double>(i));
        ss += s * s;
        sc += s * c;
        cc += c * c;
        xs += x[i] * s;
        xc += x[i] * c;
    }
    const double det = ss * cc - sc * sc;
    if (std::abs(det) < 1e-9 * static_cast<double>(x.size())) return;
    const double a = (xs * cc - xc * sc) / det;
    const double b = (xc * ss - xs * sc) / det;
    for (std::size_t i = 0; i < x.size(); ++i)
        x[i] -= a * std::sin(wstep * static_cast<double>(i)) +
                b * std::cos(wstep * static_cast<double>(i));
}

inline Waveform preprocess_bvp(const Waveform& w) {
    if (w.modality != Modality::BVP)
        throw ModalityError("preprocess_bvp expects a BVP waveform");
    if (!(w.rate_hz > 16.0))
        throw InvalidSpecError("BVP rate must exceed 16 Hz for the 0.5-8 Hz band");
    Waveform out = apply_zero_phase(design_bandpass({0.5, 8.0, 2}, w.rate_hz), w);
    // Mains interference survives the band-pass when sampling folds it into
    // the pass band (50 Hz sampled at 27 Hz appears at 4 Hz); cancel the
    // coherent tone at the folded frequency of either mains standard.
    for (double mains : {50.0, 60.0}) {
        const double folded =
            std::abs(mains - std::round(mains / w.rate_hz) * w.rate_hz);
        if (folded > 0.5 && folded < 8.0) subtract_coherent_tone(out.samples, folded, w.rate_hz);
    }
    return out;
}

}  // namespace hrv
