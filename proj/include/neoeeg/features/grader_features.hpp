#pragma once

#include <string>
#include <vector>

#include "neoeeg/dsp/filter.hpp"
#include "neoeeg/dsp/psd.hpp"
#include "neoeeg/dsp/signal_ops.hpp"
#include "neoeeg/features/copula.hpp"
#include "neoeeg/features/neural.hpp"
#include "neoeeg/features/spectral.hpp"
#include "neoeeg/features/svd.hpp"

namespace neoeeg::features {

struct GraderFeatureOptions {
    double fs = 64.0;
    double svd_window_s = 4.0;
    double window_s = kAnalysisWindowSeconds;
    double psd_segment_s = 2.0;
    dsp::Band broadband{0.5, 30.0};
    CopulaOptions copula;
};

/// The seven features of the SVM grader, in model input order.
inline std::vector<std::string> grader_feature_names() {
    return {"svd.max_singular",    "copula.frank_theta", "spectral.max_power", "spectral.entropy",
            "spectral.delta_relative_power", "reeg.min_p95", "reeg.max_range"};
}

/// Grader features of a montage-derived recording preprocessed to the analysis rate.
inline FeatureVector extract_grader_vector(const io::Recording& rec, const io::MontageSpec& montage,
                                           const GraderFeatureOptions& opt = {}) {
    if (rec.samples.size() < 2) throw FeatureError("grader features need at least two channels");
    if (std::abs(rec.fs - opt.fs) > 1e-9)
        throw FeatureError("recording must be preprocessed to " + format_number(opt.fs) + " Hz");
    const double fs = rec.fs;
    const std::size_t len = rec.samples.front().size();
    const auto grid = dsp::segment_grid(len, fs, opt.window_s, 0.0);
    const auto nper = static_cast<std::size_t>(std::llround(opt.psd_segment_s * fs));

    std::vector<double> max_power_per_channel, entropy, delta_rel, theta;
    for (const auto& ch : rec.samples) {
        double best = 0;
        for (std::size_t k = 0; k < grid.count; ++k) {
            const auto x = std::span<const double>(ch).subspan(grid.start(k), grid.window);
            const auto psd = dsp::psd_welch(x, fs, nper);
            double total = 0;
            for (double p : psd.power) total += p;
            if (!(total > 0)) continue;
            const auto bb = spectral_band_features(psd, opt.broadband);
            best = std::max(best, value_of(bb, "power"));
            entropy.push_back(value_of(bb, "entropy"));
            delta_rel.push_back(value_of(spectral_band_features(psd, dsp::kEegBands[0]), "relative_power"));
        }
        max_power_per_channel.push_back(best);
    }

    for (const auto& [l, r] : montage.hemisphere_pairs) {
        for (std::size_t k = 0; k < grid.count; ++k) {
            const auto a = std::span<const double>(rec.samples[l]).subspan(grid.start(k), grid.window);
            const auto b = std::span<const double>(rec.samples[r]).subspan(grid.start(k), grid.window);
            try {
                theta.push_back(channel_pair_theta(a, b, opt.copula));
            } catch (const CopulaError&) {
                // flat windows carry no dependence information
            }
        }
    }

    double min_p95 = kMissing, max_range = kMissing;
    for (std::size_t b = 0; b < dsp::kEegBands.size(); ++b) {
        std::vector<double> p95, range;
        for (const auto& ch : rec.samples) {
            const auto banded = dsp::filter_bandpass_cheby2(ch, fs, dsp::kEegBands[b].low, dsp::kEegBands[b].high);
            const auto r = dsp::reeg(banded, fs);
            const std::vector<double> rv(r.begin(), r.end());
            const double hi = percentile(rv, 95), lo = percentile(rv, 5);
            p95.push_back(hi);
            range.push_back(hi - lo);
        }
        const double bp = median(p95), br = median(range);
        min_p95 = is_missing(min_p95) ? bp : std::min(min_p95, bp);
        max_range = is_missing(max_range) ? br : std::max(max_range, br);
    }

    FeatureVector fv;
    fv.names = grader_feature_names();
    fv.values = {svd_max_singular(rec.samples, fs, opt.svd_window_s),
                 nan_median(theta),
                 median(max_power_per_channel),
                 nan_median(entropy),
                 nan_median(delta_rel),
                 min_p95,
                 max_range};
    return fv;
}

/// Derives the montage from a raw recording, preprocesses it and extracts the grader features.
inline FeatureVector grader_features(const io::Recording& raw, const io::MontageSpec& montage,
                                     const GraderFeatureOptions& opt = {}) {
    return extract_grader_vector(preprocess_neural(io::derive_montage(raw, montage), opt.fs), montage, opt);
}

}  // namespace neoeeg::features
