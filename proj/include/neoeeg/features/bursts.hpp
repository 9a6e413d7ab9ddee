#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "neoeeg/dsp/signal_ops.hpp"
#include "neoeeg/features/amplitude.hpp"

namespace neoeeg::features {

struct BurstOptions {
    double smoothing_s = 1.0;
    double median_factor = 1.5;
    double p95_factor = 0.5;
    double floor_uv = 5.0;
    double min_burst_s = 1.0;
    double merge_gap_s = 0.5;
};

struct BurstAnnotation {
    std::vector<std::pair<double, double>> bursts;  // [start, end) in seconds
    std::vector<double> ibis;
    double duration_s = 0;
    double threshold = 0;

    double burst_time() const {
        double t = 0;
        for (const auto& [s, e] : bursts) t += e - s;
        return t;
    }
    double burst_percentage() const { return duration_s > 0 ? 100.0 * burst_time() / duration_s : 0.0; }
    double suppression_percentage() const { return duration_s > 0 ? 100.0 - burst_percentage() : 0.0; }
};

/// Centred moving mean with shrinking windows at the edges.
inline std::vector<double> moving_mean(std::span<const double> x, std::size_t w) {
    std::vector<double> prefix(x.size() + 1, 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) prefix[i + 1] = prefix[i] + x[i];
    std::vector<double> out(x.size());
    const std::size_t left = w / 2, right = w - left;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const std::size_t lo = i >= left ? i - left : 0;
        const std::size_t hi = std::min(x.size(), i + right);
        out[i] = (prefix[hi] - prefix[lo]) / static_cast<double>(hi - lo);
    }
    return out;
}

/// Envelope-threshold burst detector. The smoothed envelope is compared with
/// max(floor, min(median_factor * median, p95_factor * p95)); runs separated by short gaps are
/// merged and short runs dropped. Run edges are then moved inward, by at most half the smoothing
/// window, to where the smoothed envelope crosses halfway between the burst level and the
/// background level.
inline BurstAnnotation detect_bursts(std::span<const double> x, double fs, const BurstOptions& opt = {}) {
    BurstAnnotation ann;
    ann.duration_s = static_cast<double>(x.size()) / fs;
    if (x.empty()) return ann;
    const auto w = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(opt.smoothing_s * fs)));
    const auto env = moving_mean(dsp::envelope(x), w);
    const std::vector<double> ev(env.begin(), env.end());
    const double med = median(ev);
    const double p95 = percentile(ev, 95);
    ann.threshold = std::max(opt.floor_uv, std::min(opt.median_factor * med, opt.p95_factor * p95));

    std::vector<std::pair<std::size_t, std::size_t>> runs;
    for (std::size_t i = 0; i < env.size();) {
        if (env[i] <= ann.threshold) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < env.size() && env[j] > ann.threshold) ++j;
        runs.emplace_back(i, j);
        i = j;
    }

    const auto merge_gap = static_cast<std::size_t>(std::llround(opt.merge_gap_s * fs));
    std::vector<std::pair<std::size_t, std::size_t>> merged;
    for (const auto& r : runs) {
        if (!merged.empty() && r.first - merged.back().second < merge_gap)
            merged.back().second = r.second;
        else
            merged.push_back(r);
    }
    std::vector<double> below;
    for (double v : env)
        if (v <= ann.threshold) below.push_back(v);
    if (!below.empty()) {
        const double background = median(below);
        const std::size_t reach = w / 2;
        for (auto& [s, e] : merged) {
            const double level = median(std::vector<double>(env.begin() + static_cast<std::ptrdiff_t>(s),
                                                            env.begin() + static_cast<std::ptrdiff_t>(e)));
            const double half = std::max(ann.threshold, (level + background) / 2.0);
            for (std::size_t k = 0; k < reach && s + 1 < e && env[s] < half; ++k) ++s;
            for (std::size_t k = 0; k < reach && e > s + 1 && env[e - 1] < half; ++k) --e;
        }
    }
    const double min_len = opt.min_burst_s * fs;
    for (const auto& [s, e] : merged)
        if (static_cast<double>(e - s) >= min_len - 1e-9)
            ann.bursts.emplace_back(static_cast<double>(s) / fs, static_cast<double>(e) / fs);
    for (std::size_t k = 1; k < ann.bursts.size(); ++k) ann.ibis.push_back(ann.bursts[k].first - ann.bursts[k - 1].second);
    return ann;
}

/// IBI 95th percentile, IBI median, burst percentage and number of bursts.
inline NamedValues ibi_features(const BurstAnnotation& ann, double epoch_len_s) {
    const bool defined = ann.ibis.size() >= 2;
    double burst_pct = epoch_len_s > 0 ? 100.0 * ann.burst_time() / epoch_len_s : kMissing;
    return {{"ibi_p95", defined ? percentile(ann.ibis, 95) : kMissing},
            {"ibi_median", defined ? median(ann.ibis) : kMissing},
            {"burst_percentage", burst_pct},
            {"burst_count", static_cast<double>(ann.bursts.size())}};
}

}  // namespace neoeeg::features
