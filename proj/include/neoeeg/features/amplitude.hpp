#pragma once

#include <string>
#include <vector>

#include "neoeeg/dsp/signal_ops.hpp"
#include "neoeeg/errors.hpp"
#include "neoeeg/features/stats.hpp"

namespace neoeeg::features {

struct NamedValue {
    std::string name;
    double value = kMissing;
};

using NamedValues = std::vector<NamedValue>;

inline double value_of(const NamedValues& v, const std::string& name) {
    for (const auto& nv : v)
        if (nv.name == name) return nv.value;
    throw FeatureError("no feature named '" + name + "'");
}

inline constexpr double kAnalysisWindowSeconds = 64.0;

/// Total power, SD, kurtosis, skewness, envelope mean and SD of one band-limited analysis window.
inline NamedValues amplitude_features(std::span<const double> x, double fs,
                                      double min_window_s = kAnalysisWindowSeconds) {
    if (static_cast<double>(x.size()) + 0.5 < min_window_s * fs)
        throw FeatureError("amplitude features need a window of at least " + format_number(min_window_s) + " s");
    double power = 0;
    for (double v : x) power += v * v;
    power /= static_cast<double>(x.size());
    const auto m = moments(x);
    const auto env = dsp::envelope(x);
    const auto em = moments(env);
    return {{"total_power", power},
            {"sd", m.sd},
            {"kurtosis", m.excess_kurtosis},
            {"skewness", m.skewness},
            {"envelope_mean", em.mean},
            {"envelope_sd", em.sd}};
}

/// Summary statistics of an rEEG series.
inline NamedValues reeg_stats(std::span<const double> r) {
    if (r.size() < 2) throw FeatureError("rEEG features need at least two rEEG windows");
    const std::vector<double> v(r.begin(), r.end());
    const double med = median(v);
    const double lower = percentile(v, 5);
    const double upper = percentile(v, 95);
    const double width = upper - lower;
    const double mu = mean(r);
    const double sd = stddev(r);
    return {{"mean", mu},
            {"median", med},
            {"lower_margin", lower},
            {"upper_margin", upper},
            {"width", width},
            {"sd", sd},
            {"cv", mu > 0 ? sd / mu : kMissing},
            {"asymmetry", width > 0 ? ((upper - med) - (med - lower)) / width : kMissing}};
}

inline NamedValues reeg_features(std::span<const double> x, double fs, double window_s = 2.0) {
    return reeg_stats(dsp::reeg(x, fs, window_s));
}

}  // namespace neoeeg::features
