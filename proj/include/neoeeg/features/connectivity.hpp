#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "neoeeg/dsp/filter.hpp"
#include "neoeeg/dsp/psd.hpp"
#include "neoeeg/dsp/signal_ops.hpp"
#include "neoeeg/features/amplitude.hpp"

namespace neoeeg::features {

struct ConnectivityOptions {
    double psd_segment_s = 2.0;
};

/// Connectivity of one hemisphere pair. `left`/`right` are broadband windows used for spectra and
/// coherence; `left_band`/`right_band` are the band-filtered versions used for the envelopes.
inline NamedValues pair_connectivity(std::span<const double> left, std::span<const double> right,
                                     std::span<const double> left_band, std::span<const double> right_band, double fs,
                                     dsp::Band band, const ConnectivityOptions& opt = {}) {
    if (left.size() != right.size() || left_band.size() != right_band.size())
        throw FeatureError("paired channels must have equal length");
    const auto nper = static_cast<std::size_t>(std::llround(opt.psd_segment_s * fs));
    const auto pl = dsp::psd_welch(left, fs, nper);
    const auto pr = dsp::psd_welch(right, fs, nper);
    const auto coh = dsp::coherence(left, right, fs, nper);

    double bsi = 0;
    int bsi_n = 0;
    double coh_sum = 0, coh_max = -1, coh_arg = kMissing;
    int coh_n = 0;
    for (std::size_t k = 0; k < pl.freqs.size(); ++k) {
        const double f = pl.freqs[k];
        if (f < band.low || f >= band.high) continue;
        const double s = pl.power[k] + pr.power[k];
        if (s > 0) {
            bsi += std::abs((pl.power[k] - pr.power[k]) / s);
            ++bsi_n;
            coh_sum += coh.coherence[k];
            ++coh_n;
            if (coh.coherence[k] > coh_max) {
                coh_max = coh.coherence[k];
                coh_arg = f;
            }
        }
    }
    const double env_corr = pearson(dsp::envelope(left_band), dsp::envelope(right_band));
    return {{"bsi", bsi_n ? bsi / bsi_n : kMissing},
            {"envelope_correlation", env_corr},
            {"coherence_mean", coh_n ? coh_sum / coh_n : kMissing},
            {"coherence_max", coh_n ? coh_max : kMissing},
            {"coherence_max_frequency", coh_arg}};
}

/// Median of the per-pair connectivity over aligned left/right channel lists.
inline NamedValues connectivity_features(const std::vector<std::vector<double>>& left,
                                         const std::vector<std::vector<double>>& right,
                                         const std::vector<std::vector<double>>& left_band,
                                         const std::vector<std::vector<double>>& right_band, double fs, dsp::Band band,
                                         const ConnectivityOptions& opt = {}) {
    if (left.empty() || left.size() != right.size() || left_band.size() != left.size() ||
        right_band.size() != right.size())
        throw FeatureError("left and right channel sets are not paired");
    std::vector<NamedValues> per_pair;
    for (std::size_t i = 0; i < left.size(); ++i)
        per_pair.push_back(pair_connectivity(left[i], right[i], left_band[i], right_band[i], fs, band, opt));
    NamedValues out = per_pair.front();
    for (std::size_t f = 0; f < out.size(); ++f) {
        std::vector<double> vals;
        for (const auto& p : per_pair) vals.push_back(p[f].value);
        out[f].value = nan_median(vals);
    }
    return out;
}

/// Convenience overload: band-filters the broadband inputs itself.
inline NamedValues connectivity_features(const std::vector<std::vector<double>>& left,
                                         const std::vector<std::vector<double>>& right, double fs, dsp::Band band,
                                         const ConnectivityOptions& opt = {}) {
    if (left.empty() || left.size() != right.size()) throw FeatureError("left and right channel sets are not paired");
    std::vector<std::vector<double>> lb, rb;
    for (const auto& x : left) lb.push_back(dsp::filter_bandpass_cheby2(x, fs, band.low, band.high));
    for (const auto& x : right) rb.push_back(dsp::filter_bandpass_cheby2(x, fs, band.low, band.high));
    return connectivity_features(left, right, lb, rb, fs, band, opt);
}

}  // namespace neoeeg::features
