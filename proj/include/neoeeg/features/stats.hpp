#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "neoeeg/util.hpp"

namespace neoeeg::features {

/// Linear-interpolation percentile (p in [0, 100]) of unsorted data; NaN when empty.
inline double percentile(std::vector<double> v, double p) {
    if (v.empty()) return kMissing;
    std::sort(v.begin(), v.end());
    const double pos = p / 100.0 * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline double median(std::vector<double> v) { return percentile(std::move(v), 50.0); }

/// Median of the defined (non-NaN) values; NaN when none.
inline double nan_median(std::span<const double> v) {
    std::vector<double> keep;
    for (double x : v)
        if (!is_missing(x)) keep.push_back(x);
    return median(std::move(keep));
}

inline double mean(std::span<const double> v) {
    if (v.empty()) return kMissing;
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

/// Population standard deviation.
inline double stddev(std::span<const double> v) {
    if (v.empty()) return kMissing;
    const double m = mean(v);
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
}

struct Moments {
    double mean = 0, sd = 0, skewness = kMissing, excess_kurtosis = kMissing;
};

/// Biased sample moments; shape statistics are undefined for constant data.
inline Moments moments(std::span<const double> v) {
    Moments m;
    if (v.empty()) return {kMissing, kMissing, kMissing, kMissing};
    m.mean = mean(v);
    double m2 = 0, m3 = 0, m4 = 0;
    for (double x : v) {
        const double d = x - m.mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    const auto n = static_cast<double>(v.size());
    m2 /= n;
    m3 /= n;
    m4 /= n;
    m.sd = std::sqrt(m2);
    if (m2 > 1e-24 * (1.0 + m.mean * m.mean)) {
        m.skewness = m3 / std::pow(m2, 1.5);
        m.excess_kurtosis = m4 / (m2 * m2) - 3.0;
    }
    return m;
}

/// Pearson correlation; NaN if either series is constant.
inline double pearson(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = std::min(a.size(), b.size());
    if (n < 2) return kMissing;
    const double ma = mean(a.first(n)), mb = mean(b.first(n));
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa <= 0 || sbb <= 0) return kMissing;
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

}  // namespace neoeeg::features
