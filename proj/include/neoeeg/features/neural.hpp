#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "neoeeg/dsp/filter.hpp"
#include "neoeeg/dsp/psd.hpp"
#include "neoeeg/dsp/resample.hpp"
#include "neoeeg/dsp/signal_ops.hpp"
#include "neoeeg/features/amplitude.hpp"
#include "neoeeg/features/bursts.hpp"
#include "neoeeg/features/connectivity.hpp"
#include "neoeeg/features/spectral.hpp"
#include "neoeeg/io/montage.hpp"
#include "neoeeg/io/recording.hpp"

namespace neoeeg::features {

struct FeatureVector {
    std::string epoch_id;
    std::vector<std::string> names;
    std::vector<double> values;

    double at(const std::string& name) const {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) return values[i];
        throw FeatureError("feature vector has no entry '" + name + "'");
    }
    std::size_t missing_count() const {
        std::size_t n = 0;
        for (double v : values) n += is_missing(v) ? 1 : 0;
        return n;
    }
    bool operator==(const FeatureVector&) const = default;
};

struct NeuralOptions {
    double fs = 64.0;
    double window_s = kAnalysisWindowSeconds;
    double overlap_s = kAnalysisWindowSeconds / 2;
    double psd_segment_s = 2.0;
    double max_missing_fraction = 0.25;
    BurstOptions bursts;
};

namespace neural_detail {

inline const std::array<const char*, 6> kAmplitude{"total_power", "sd", "kurtosis", "skewness", "envelope_mean",
                                                   "envelope_sd"};
inline const std::array<const char*, 8> kReeg{"mean", "median", "lower_margin", "upper_margin",
                                              "width", "sd", "cv", "asymmetry"};
inline const std::array<const char*, 5> kSpectral{"power", "relative_power", "flatness", "entropy", "difference"};
inline const std::array<const char*, 5> kConnectivity{"bsi", "envelope_correlation", "coherence_mean",
                                                      "coherence_max", "coherence_max_frequency"};
inline const std::array<const char*, 4> kIbi{"ibi_p95", "ibi_median", "burst_percentage", "burst_count"};

inline std::string band_name(const std::string& category, const std::string& name, std::size_t band) {
    return category + "." + name + ".band" + std::to_string(band + 1);
}

}  // namespace neural_detail

/// The 102 feature names in output order.
inline std::vector<std::string> neural_feature_names() {
    using namespace neural_detail;
    std::vector<std::string> names;
    for (std::size_t b = 0; b < 4; ++b) {
        for (auto n : kAmplitude) names.push_back(band_name("amplitude", n, b));
        for (auto n : kReeg) names.push_back(band_name("amplitude", std::string("reeg_") + n, b));
    }
    for (std::size_t b = 0; b < 4; ++b)
        for (auto n : kSpectral) names.push_back(band_name("spectral", n, b));
    names.push_back("spectral.edge_frequency");
    names.push_back("spectral.fractal_dimension");
    for (std::size_t b = 0; b < 4; ++b)
        for (auto n : kConnectivity) names.push_back(band_name("connectivity", n, b));
    for (auto n : kIbi) names.push_back(std::string("ibi.") + n);
    return names;
}

/// Resamples to the analysis rate and band-limits to 0.5-30 Hz.
inline io::Recording preprocess_neural(const io::Recording& rec, double fs_out = 64.0) {
    if (rec.fs < fs_out) throw FeatureError("recording rate is below the analysis rate");
    io::Recording out = rec;
    out.edf.reset();
    out.fs = fs_out;
    for (auto& ch : out.samples) {
        auto r = dsp::resample(ch, rec.fs, fs_out);
        ch = dsp::filter_bandpass_cheby2(r, fs_out, 0.5, 30.0);
    }
    return out;
}

/// NEURAL-style feature vector of a montage-derived, preprocessed recording. Short-time features
/// are computed per analysis window, channel and band, then summarised by the median over windows
/// and channels; IBI features use the whole epoch.
inline FeatureVector extract_neural_vector(const io::Recording& rec, const io::MontageSpec& montage,
                                           const NeuralOptions& opt = {}) {
    using namespace neural_detail;
    if (rec.samples.empty()) throw FeatureError("recording has no channels");
    if (std::abs(rec.fs - opt.fs) > 1e-9)
        throw FeatureError("recording must be preprocessed to " + format_number(opt.fs) + " Hz");
    const double fs = rec.fs;
    const std::size_t nch = rec.samples.size();
    const std::size_t len = rec.samples.front().size();
    for (const auto& ch : rec.samples)
        if (ch.size() != len) throw FeatureError("channels differ in length");
    for (const auto& [l, r] : montage.hemisphere_pairs)
        if (l >= nch || r >= nch) throw FeatureError("hemisphere pairing refers to a missing channel");
    if (static_cast<double>(len) < opt.window_s * fs) throw FeatureError("epoch is shorter than one analysis window");

    std::vector<std::array<dsp::Signal, 4>> bands(nch);
    for (std::size_t c = 0; c < nch; ++c) bands[c] = dsp::band_decompose(rec.samples[c], fs);

    const auto grid = dsp::segment_grid(len, fs, opt.window_s, opt.overlap_s);
    const auto nper = static_cast<std::size_t>(std::llround(opt.psd_segment_s * fs));
    std::map<std::string, std::vector<double>> pool;
    auto sub = [&](const std::vector<double>& v, std::size_t k) {
        return std::span<const double>(v).subspan(grid.start(k), grid.window);
    };

    for (std::size_t k = 0; k < grid.count; ++k) {
        for (std::size_t c = 0; c < nch; ++c) {
            const auto x = sub(rec.samples[c], k);
            const auto psd = dsp::psd_welch(x, fs, nper);
            double total = 0;
            for (double p : psd.power) total += p;
            for (std::size_t b = 0; b < 4; ++b) {
                const auto xb = sub(bands[c][b], k);
                for (const auto& nv : amplitude_features(xb, fs, opt.window_s))
                    pool[band_name("amplitude", nv.name, b)].push_back(nv.value);
                for (const auto& nv : reeg_features(xb, fs))
                    pool[band_name("amplitude", "reeg_" + nv.name, b)].push_back(nv.value);
                if (total > 0) {
                    for (const auto& nv : spectral_band_features(psd, dsp::kEegBands[b]))
                        pool[band_name("spectral", nv.name, b)].push_back(nv.value);
                }
            }
            pool["spectral.edge_frequency"].push_back(total > 0 ? spectral_edge_frequency(psd) : kMissing);
            pool["spectral.fractal_dimension"].push_back(higuchi_fd(x));
        }
        for (const auto& [l, r] : montage.hemisphere_pairs) {
            for (std::size_t b = 0; b < 4; ++b) {
                const auto nv = pair_connectivity(sub(rec.samples[l], k), sub(rec.samples[r], k), sub(bands[l][b], k),
                                                  sub(bands[r][b], k), fs, dsp::kEegBands[b], {opt.psd_segment_s});
                for (const auto& v : nv) pool[band_name("connectivity", v.name, b)].push_back(v.value);
            }
        }
    }

    std::vector<NamedValues> ibi;
    for (std::size_t c = 0; c < nch; ++c)
        ibi.push_back(ibi_features(detect_bursts(rec.samples[c], fs, opt.bursts), static_cast<double>(len) / fs));
    for (const auto& per_channel : ibi)
        for (const auto& nv : per_channel) pool["ibi." + nv.name].push_back(nv.value);

    FeatureVector fv;
    fv.names = neural_feature_names();
    for (const auto& name : fv.names) {
        auto it = pool.find(name);
        fv.values.push_back(it == pool.end() ? kMissing : nan_median(it->second));
    }
    const double missing = static_cast<double>(fv.missing_count()) / static_cast<double>(fv.values.size());
    if (missing > opt.max_missing_fraction)
        throw FeatureError(std::to_string(fv.missing_count()) + " of " + std::to_string(fv.values.size()) +
                           " features are undefined");
    return fv;
}

/// Derives the montage from a raw recording, preprocesses it and extracts the NEURAL vector.
inline FeatureVector neural_features(const io::Recording& raw, const io::MontageSpec& montage,
                                     const NeuralOptions& opt = {}) {
    return extract_neural_vector(preprocess_neural(io::derive_montage(raw, montage), opt.fs), montage, opt);
}

}  // namespace neoeeg::features
