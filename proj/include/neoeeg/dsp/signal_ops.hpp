#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "neoeeg/dsp/fft.hpp"
#include "neoeeg/errors.hpp"

namespace neoeeg::dsp {

struct SegmentGrid {
    std::size_t window = 0;  // samples
    std::size_t stride = 0;  // samples
    std::size_t count = 0;

    std::size_t start(std::size_t k) const { return k * stride; }
};

/// Window grid in samples; the trailing partial window is dropped.
inline SegmentGrid segment_grid(std::size_t len, double fs, double window_s, double overlap_s) {
    if (!(fs > 0)) throw SegmentError("sampling rate must be positive");
    if (!(window_s > 0)) throw SegmentError("window length must be positive");
    if (!(overlap_s >= 0 && overlap_s < window_s)) throw SegmentError("overlap must lie in [0, window)");
    SegmentGrid g;
    g.window = static_cast<std::size_t>(std::llround(window_s * fs));
    g.stride = static_cast<std::size_t>(std::llround((window_s - overlap_s) * fs));
    if (g.window == 0 || g.stride == 0) throw SegmentError("window or stride rounds to zero samples");
    if (g.window > len)
        throw SegmentError("window of " + std::to_string(g.window) + " samples is longer than the signal (" +
                           std::to_string(len) + ")");
    g.count = (len - g.window) / g.stride + 1;
    return g;
}

inline std::vector<std::span<const double>> segment_views(std::span<const double> x, double fs, double window_s,
                                                          double overlap_s) {
    const auto g = segment_grid(x.size(), fs, window_s, overlap_s);
    std::vector<std::span<const double>> out;
    out.reserve(g.count);
    for (std::size_t k = 0; k < g.count; ++k) out.push_back(x.subspan(g.start(k), g.window));
    return out;
}

inline std::vector<Signal> segment(std::span<const double> x, double fs, double window_s, double overlap_s) {
    std::vector<Signal> out;
    for (auto v : segment_views(x, fs, window_s, overlap_s)) out.emplace_back(v.begin(), v.end());
    return out;
}

/// Saturates to [-limit, limit], then multiplies by `scale`.
inline Signal clip_and_scale(std::span<const double> x, double limit, double scale) {
    if (!(limit > 0)) throw DspError("clip limit must be positive");
    Signal out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::clamp(x[i], -limit, limit) * scale;
    return out;
}

/// Magnitude of the analytic signal, via the FFT Hilbert transform on a zero-padded length.
inline Signal envelope(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n == 0) return {};
    const std::size_t m = next_fast_length(n);
    ComplexSignal buf(m, 0.0);
    for (std::size_t i = 0; i < n; ++i) buf[i] = x[i];
    auto spec = fft(buf);
    for (std::size_t k = 1; k < m; ++k) {
        if (2 * k < m)
            spec[k] *= 2.0;
        else if (2 * k > m)
            spec[k] = 0.0;
    }
    const auto analytic = ifft(spec);
    Signal out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = std::abs(analytic[i]);
    return out;
}

/// Peak-to-peak amplitude per non-overlapping window (range EEG).
inline Signal reeg(std::span<const double> x, double fs, double window_s = 2.0) {
    const auto w = static_cast<std::size_t>(std::llround(window_s * fs));
    if (w == 0 || w > x.size()) throw DspError("rEEG window does not fit in the signal");
    Signal out;
    out.reserve(x.size() / w);
    for (std::size_t s = 0; s + w <= x.size(); s += w) {
        const auto [lo, hi] = std::minmax_element(x.begin() + static_cast<std::ptrdiff_t>(s),
                                                  x.begin() + static_cast<std::ptrdiff_t>(s + w));
        out.push_back(*hi - *lo);
    }
    return out;
}

/// Root mean square per non-overlapping window.
inline Signal rms(std::span<const double> x, double fs, double window_s) {
    const auto w = static_cast<std::size_t>(std::llround(window_s * fs));
    if (w == 0 || w > x.size()) throw DspError("RMS window does not fit in the signal");
    Signal out;
    out.reserve(x.size() / w);
    for (std::size_t s = 0; s + w <= x.size(); s += w) {
        double acc = 0;
        for (std::size_t i = s; i < s + w; ++i) acc += x[i] * x[i];
        out.push_back(std::sqrt(acc / static_cast<double>(w)));
    }
    return out;
}

}  // namespace neoeeg::dsp
