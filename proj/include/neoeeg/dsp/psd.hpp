#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include "neoeeg/dsp/fft.hpp"
#include "neoeeg/errors.hpp"

namespace neoeeg::dsp {

struct PsdEstimate {
    std::vector<double> freqs;
    std::vector<double> power;
    /// One-sided periodogram of every Welch segment, same scaling as `power`.
    std::vector<std::vector<double>> segments;
    double fs = 0;
    std::size_t nperseg = 0;

    double df() const { return nperseg ? fs / static_cast<double>(nperseg) : 0.0; }
};

namespace psd_detail {

inline std::vector<double> hamming_periodic(std::size_t n) {
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i)
        w[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
    return w;
}

/// Windowed, mean-removed one-sided spectrum of each 50%-overlapping segment.
struct Frames {
    std::vector<ComplexSignal> spectra;
    std::size_t nperseg = 0;
    double scale = 0;  // density normalisation 1 / (fs * sum w^2)
};

inline Frames frames(std::span<const double> x, double fs, std::size_t nperseg) {
    if (x.empty()) throw DspError("cannot estimate the spectrum of an empty signal");
    if (!(fs > 0)) throw DspError("sampling rate must be positive");
    if (nperseg == 0) throw DspError("nperseg must be positive");
    if (nperseg > x.size()) nperseg = x.size();
    Frames f;
    f.nperseg = nperseg;
    const auto w = hamming_periodic(nperseg);
    double wss = 0;
    for (double v : w) wss += v * v;
    f.scale = 1.0 / (fs * wss);
    const std::size_t step = nperseg - nperseg / 2;
    std::vector<double> buf(nperseg);
    for (std::size_t start = 0; start + nperseg <= x.size(); start += step) {
        double mean = 0;
        for (std::size_t i = 0; i < nperseg; ++i) mean += x[start + i];
        mean /= static_cast<double>(nperseg);
        for (std::size_t i = 0; i < nperseg; ++i) buf[i] = (x[start + i] - mean) * w[i];
        auto spec = fft(buf);
        spec.resize(nperseg / 2 + 1);
        f.spectra.push_back(std::move(spec));
    }
    return f;
}

inline double one_sided_factor(std::size_t k, std::size_t n) {
    if (k == 0) return 1.0;
    if (n % 2 == 0 && k == n / 2) return 1.0;
    return 2.0;
}

}  // namespace psd_detail

/// Welch PSD: periodic Hamming window, 50% overlap, constant detrend, density scaling.
inline PsdEstimate psd_welch(std::span<const double> x, double fs, std::size_t nperseg) {
    const auto f = psd_detail::frames(x, fs, nperseg);
    const std::size_t n = f.nperseg, bins = n / 2 + 1;
    PsdEstimate est;
    est.fs = fs;
    est.nperseg = n;
    est.freqs.resize(bins);
    for (std::size_t k = 0; k < bins; ++k) est.freqs[k] = static_cast<double>(k) * fs / static_cast<double>(n);
    est.power.assign(bins, 0.0);
    for (const auto& spec : f.spectra) {
        std::vector<double> p(bins);
        for (std::size_t k = 0; k < bins; ++k) p[k] = std::norm(spec[k]) * f.scale * psd_detail::one_sided_factor(k, n);
        for (std::size_t k = 0; k < bins; ++k) est.power[k] += p[k];
        est.segments.push_back(std::move(p));
    }
    for (double& v : est.power) v /= static_cast<double>(f.spectra.size());
    return est;
}

struct Coherence {
    std::vector<double> freqs;
    std::vector<double> coherence;
};

/// Magnitude-squared coherence |Pxy|^2 / (Pxx Pyy) from Welch cross-spectra. Bins where either
/// auto-spectrum vanishes are reported as 0.
inline Coherence coherence(std::span<const double> x, std::span<const double> y, double fs, std::size_t nperseg) {
    if (x.size() != y.size()) throw DspError("coherence needs equal-length signals");
    const auto fx = psd_detail::frames(x, fs, nperseg);
    const auto fy = psd_detail::frames(y, fs, nperseg);
    const std::size_t n = fx.nperseg, bins = n / 2 + 1;
    std::vector<double> pxx(bins, 0.0), pyy(bins, 0.0);
    std::vector<std::complex<double>> pxy(bins, 0.0);
    for (std::size_t s = 0; s < fx.spectra.size(); ++s) {
        for (std::size_t k = 0; k < bins; ++k) {
            pxx[k] += std::norm(fx.spectra[s][k]);
            pyy[k] += std::norm(fy.spectra[s][k]);
            pxy[k] += std::conj(fx.spectra[s][k]) * fy.spectra[s][k];
        }
    }
    Coherence c;
    c.freqs.resize(bins);
    c.coherence.resize(bins);
    for (std::size_t k = 0; k < bins; ++k) {
        c.freqs[k] = static_cast<double>(k) * fs / static_cast<double>(n);
        const double d = pxx[k] * pyy[k];
        c.coherence[k] = d > 0 ? std::min(1.0, std::norm(pxy[k]) / d) : 0.0;
    }
    return c;
}

}  // namespace neoeeg::dsp
