#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "neoeeg/dsp/fft.hpp"
#include "neoeeg/errors.hpp"

namespace neoeeg::dsp {

namespace resample_detail {

/// Best rational approximation p/q of `ratio` with q <= max_den (continued fractions).
inline std::pair<std::int64_t, std::int64_t> rational(double ratio, std::int64_t max_den = 10000) {
    std::int64_t p0 = 0, q0 = 1, p1 = 1, q1 = 0;
    double x = ratio;
    for (int it = 0; it < 64; ++it) {
        const auto a = static_cast<std::int64_t>(std::floor(x));
        const std::int64_t p2 = a * p1 + p0, q2 = a * q1 + q0;
        if (q2 > max_den) break;
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        const double frac = x - static_cast<double>(a);
        if (std::abs(static_cast<double>(p1) / static_cast<double>(q1) - ratio) <= 1e-12 * ratio || frac < 1e-12) break;
        x = 1.0 / frac;
    }
    return {p1, q1};
}

/// Kaiser-windowed sinc low-pass, cutoff given as a fraction of the sampling rate.
inline std::vector<double> kaiser_lowpass(double cutoff, double transition, double atten_db, double gain) {
    const double beta = atten_db > 50.0   ? 0.1102 * (atten_db - 8.7)
                        : atten_db > 21.0 ? 0.5842 * std::pow(atten_db - 21.0, 0.4) + 0.07886 * (atten_db - 21.0)
                                          : 0.0;
    auto taps = static_cast<std::size_t>(std::ceil((atten_db - 7.95) / (2.285 * 2.0 * std::numbers::pi * transition))) + 1;
    if (taps % 2 == 0) ++taps;
    const double half = static_cast<double>(taps - 1) / 2.0;
    const double i0b = std::cyl_bessel_i(0.0, beta);
    std::vector<double> h(taps);
    double sum = 0;
    for (std::size_t n = 0; n < taps; ++n) {
        const double t = static_cast<double>(n) - half;
        const double sinc = t == 0.0 ? 2.0 * cutoff : std::sin(2.0 * std::numbers::pi * cutoff * t) / (std::numbers::pi * t);
        const double r = t / half;
        const double w = std::cyl_bessel_i(0.0, beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0b;
        h[n] = sinc * w;
        sum += h[n];
    }
    for (double& v : h) v *= gain / sum;
    return h;
}

}  // namespace resample_detail

/// Anti-aliased polyphase resampling to a lower rate. The low-pass cutoff sits at 0.9 of the
/// output Nyquist frequency with the stop band starting at the output Nyquist (60 dB Kaiser).
/// A line through the end points is removed beforehand and restored afterwards.
/// Resampling to the same rate returns the input unchanged.
inline Signal resample(std::span<const double> x, double fs_in, double fs_out) {
    if (!(fs_in > 0 && fs_out > 0)) throw ResampleError("sampling rates must be positive");
    if (fs_out == fs_in) return Signal(x.begin(), x.end());
    if (fs_out > fs_in) throw ResampleError("resample only reduces the sampling rate (fs_out > fs_in)");
    if (x.empty()) return {};

    const auto [up, down] = resample_detail::rational(fs_out / fs_in);
    if (up <= 0 || std::abs(static_cast<double>(up) / static_cast<double>(down) - fs_out / fs_in) > 1e-9 * fs_out / fs_in)
        throw ResampleError("rate ratio is not representable as a small rational");

    const std::size_t n_in = x.size();
    const auto n_out = static_cast<std::size_t>(std::llround(static_cast<double>(n_in) * fs_out / fs_in));
    Signal out(n_out, 0.0);
    if (n_out == 0) return out;

    const double fs_up = fs_in * static_cast<double>(up);
    const auto h = resample_detail::kaiser_lowpass(0.45 * fs_out / fs_up, 0.1 * fs_out / fs_up, 60.0,
                                                   static_cast<double>(up));
    const auto half = static_cast<std::int64_t>(h.size() / 2);

    const double x0 = x.front();
    const double slope = n_in > 1 ? (x.back() - x0) / static_cast<double>(n_in - 1) : 0.0;
    auto detrended = [&](std::int64_t i) { return x[static_cast<std::size_t>(i)] - (x0 + slope * static_cast<double>(i)); };

    const auto U = up, D = down;
    for (std::size_t m = 0; m < n_out; ++m) {
        // Position in the up-sampled stream, with the filter centred on it.
        const std::int64_t centre = static_cast<std::int64_t>(m) * D;
        const std::int64_t j_lo = centre - half, j_hi = centre + half;
        std::int64_t i_lo = j_lo <= 0 ? 0 : (j_lo + U - 1) / U;
        const std::int64_t i_hi = std::min<std::int64_t>(static_cast<std::int64_t>(n_in) - 1, j_hi >= 0 ? j_hi / U : -1);
        double acc = 0;
        for (std::int64_t i = i_lo; i <= i_hi; ++i) acc += h[static_cast<std::size_t>(centre - i * U + half)] * detrended(i);
        const double t_in = static_cast<double>(m) * fs_in / fs_out;
        out[m] = acc + x0 + slope * t_in;
    }
    return out;
}

}  // namespace neoeeg::dsp
