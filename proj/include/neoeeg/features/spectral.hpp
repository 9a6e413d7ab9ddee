#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "neoeeg/dsp/filter.hpp"
#include "neoeeg/dsp/psd.hpp"
#include "neoeeg/features/amplitude.hpp"

namespace neoeeg::features {

namespace spectral_detail {

inline std::vector<std::size_t> band_bins(const dsp::PsdEstimate& psd, dsp::Band band) {
    std::vector<std::size_t> bins;
    const double nyq = psd.freqs.empty() ? 0.0 : psd.freqs.back();
    for (std::size_t k = 0; k < psd.freqs.size(); ++k) {
        const double f = psd.freqs[k];
        if (f >= band.low && (f < band.high || (band.high >= nyq && f <= band.high))) bins.push_back(k);
    }
    return bins;
}

}  // namespace spectral_detail

/// Higuchi fractal dimension; undefined for signals without variation.
inline double higuchi_fd(std::span<const double> x, int kmax = 8) {
    const std::size_t n = x.size();
    if (kmax < 2 || n < static_cast<std::size_t>(2 * kmax + 2)) return kMissing;
    std::vector<double> lx, ly;
    for (int k = 1; k <= kmax; ++k) {
        const auto uk = static_cast<std::size_t>(k);
        double lk = 0;
        int terms = 0;
        for (std::size_t m = 0; m < uk; ++m) {
            const std::size_t steps = (n - 1 - m) / uk;
            if (steps == 0) continue;
            double len = 0;
            for (std::size_t i = 1; i <= steps; ++i) len += std::abs(x[m + i * uk] - x[m + (i - 1) * uk]);
            lk += len * static_cast<double>(n - 1) / (static_cast<double>(steps) * k) / k;
            ++terms;
        }
        if (terms == 0) return kMissing;
        lk /= terms;
        if (!(lk > 0)) return kMissing;
        lx.push_back(std::log(1.0 / k));
        ly.push_back(std::log(lk));
    }
    const double mx = mean(lx), my = mean(ly);
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    return sxy / sxx;
}

/// Frequency below which `fraction` of the power above `f_low` lies.
inline double spectral_edge_frequency(const dsp::PsdEstimate& psd, double fraction = 0.95, double f_low = 0.5) {
    double total = 0;
    for (std::size_t k = 0; k < psd.freqs.size(); ++k)
        if (psd.freqs[k] >= f_low) total += psd.power[k];
    if (!(total > 0)) {
        // Fall back to all bins when nothing lies above f_low (e.g. a single-bin estimate).
        for (double p : psd.power) total += p;
        if (!(total > 0)) throw SpectralError("zero total spectral power");
        f_low = -1.0;
    }
    double acc = 0;
    for (std::size_t k = 0; k < psd.freqs.size(); ++k) {
        if (psd.freqs[k] < f_low) continue;
        acc += psd.power[k];
        if (acc >= fraction * total * (1.0 - 1e-12)) return psd.freqs[k];
    }
    return psd.freqs.back();
}

/// Band power, relative power, flatness, normalised entropy and spectral difference.
inline NamedValues spectral_band_features(const dsp::PsdEstimate& psd, dsp::Band band) {
    const auto bins = spectral_detail::band_bins(psd, band);
    if (bins.empty()) throw SpectralError("band lies outside the PSD support");
    double total = 0;
    for (double p : psd.power) total += p;
    if (!(total > 0)) throw SpectralError("zero total spectral power");

    double band_sum = 0, log_sum = 0;
    bool any_zero = false;
    for (auto k : bins) {
        band_sum += psd.power[k];
        if (psd.power[k] > 0)
            log_sum += std::log(psd.power[k]);
        else
            any_zero = true;
    }
    const auto nb = static_cast<double>(bins.size());
    double flatness = kMissing, entropy = kMissing;
    if (band_sum > 0) {
        flatness = any_zero ? 0.0 : std::exp(log_sum / nb) / (band_sum / nb);
        double h = 0;
        for (auto k : bins) {
            const double p = psd.power[k] / band_sum;
            if (p > 0) h -= p * std::log(p);
        }
        entropy = bins.size() > 1 ? h / std::log(nb) : 0.0;
    }

    double diff = kMissing;
    if (psd.segments.size() >= 2 && band_sum > 0) {
        const double ref = band_sum / nb;
        double acc = 0;
        for (std::size_t s = 1; s < psd.segments.size(); ++s) {
            double d = 0;
            for (auto k : bins) {
                const double delta = psd.segments[s][k] - psd.segments[s - 1][k];
                d += delta * delta;
            }
            acc += d / nb;
        }
        diff = acc / static_cast<double>(psd.segments.size() - 1) / (ref * ref);
    }

    return {{"power", band_sum * psd.df()},
            {"relative_power", band_sum / total},
            {"flatness", flatness},
            {"entropy", entropy},
            {"difference", diff}};
}

/// The five banded spectral features plus edge frequency and (when the time signal is given)
/// fractal dimension.
inline NamedValues spectral_features(const dsp::PsdEstimate& psd, dsp::Band band,
                                     std::optional<std::span<const double>> time_signal = std::nullopt) {
    auto out = spectral_band_features(psd, band);
    out.push_back({"edge_frequency", spectral_edge_frequency(psd)});
    out.push_back({"fractal_dimension", time_signal ? higuchi_fd(*time_signal) : kMissing});
    return out;
}

}  // namespace neoeeg::features
