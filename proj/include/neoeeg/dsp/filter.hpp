#pragma once

// IIR filter design (Chebyshev type II band-pass, second-order notch) in second-order
// sections, with zero-phase forward-backward application.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include "neoeeg/dsp/fft.hpp"
#include "neoeeg/errors.hpp"

namespace neoeeg::dsp {

/// One second-order section, a0 normalized to 1.
struct Biquad {
    double b0 = 1, b1 = 0, b2 = 0;
    double a1 = 0, a2 = 0;
};

using Sos = std::vector<Biquad>;

struct Band {
    double low = 0;
    double high = 0;
};

/// Bands of the qEEG decomposition, in Hz.
inline constexpr std::array<Band, 4> kEegBands{{{0.5, 4.0}, {4.0, 7.0}, {7.0, 13.0}, {13.0, 30.0}}};

struct Cheby2Options {
    /// Band-pass order (twice the low-pass prototype order); forward-backward doubles it again.
    int order = 8;
    /// Minimum stop-band attenuation in dB; the band edges are the stop-band edges.
    double stopband_db = 40.0;
};

namespace filter_detail {

using cplx = std::complex<double>;

struct Zpk {
    std::vector<cplx> zeros;
    std::vector<cplx> poles;
    double gain = 1;
};

/// Analog Chebyshev type II low-pass prototype with stop-band edge at 1 rad/s.
inline Zpk cheby2_prototype(int n, double rs) {
    using std::numbers::pi;
    Zpk zpk;
    const double de = 1.0 / std::sqrt(std::pow(10.0, 0.1 * rs) - 1.0);
    const double mu = std::asinh(1.0 / de) / n;
    for (int m = -n + 1; m < n; m += 2) {
        if (m == 0) continue;  // odd orders have no zero at infinity pairing
        zpk.zeros.push_back(cplx(0.0, 1.0 / std::sin(m * pi / (2.0 * n))));
    }
    for (int m = -n + 1; m < n; m += 2) {
        const cplx q = -std::exp(cplx(0.0, pi * m / (2.0 * n)));
        const cplx p(std::sinh(mu) * q.real(), std::cosh(mu) * q.imag());
        zpk.poles.push_back(1.0 / p);
    }
    cplx num(1.0), den(1.0);
    for (auto p : zpk.poles) num *= -p;
    for (auto z : zpk.zeros) den *= -z;
    zpk.gain = (num / den).real();
    return zpk;
}

inline Zpk lowpass_to_bandpass(const Zpk& lp, double wo, double bw) {
    Zpk bp;
    auto transform = [&](const std::vector<cplx>& roots, std::vector<cplx>& out) {
        for (auto r : roots) {
            const cplx s = r * (bw / 2.0);
            const cplx d = std::sqrt(s * s - wo * wo);
            out.push_back(s + d);
            out.push_back(s - d);
        }
    };
    transform(lp.zeros, bp.zeros);
    transform(lp.poles, bp.poles);
    const std::size_t degree = lp.poles.size() - lp.zeros.size();
    for (std::size_t i = 0; i < degree; ++i) bp.zeros.push_back(0.0);
    bp.gain = lp.gain * std::pow(bw, static_cast<double>(degree));
    return bp;
}

/// Bilinear transform with the sampling rate normalized to 2 (frequencies in units of Nyquist).
inline Zpk bilinear(const Zpk& a) {
    constexpr double fs2 = 4.0;
    Zpk d;
    cplx num(1.0), den(1.0);
    for (auto z : a.zeros) {
        d.zeros.push_back((fs2 + z) / (fs2 - z));
        num *= fs2 - z;
    }
    for (auto p : a.poles) {
        d.poles.push_back((fs2 + p) / (fs2 - p));
        den *= fs2 - p;
    }
    for (std::size_t i = a.zeros.size(); i < a.poles.size(); ++i) d.zeros.push_back(-1.0);
    d.gain = a.gain * (num / den).real();
    return d;
}

/// Groups conjugate roots into real quadratic factors [1, c1, c2]; real roots are paired by proximity.
inline std::vector<std::array<double, 2>> quadratic_factors(std::vector<cplx> roots) {
    constexpr double tol = 1e-9;
    std::vector<std::array<double, 2>> out;
    std::vector<double> reals;
    std::vector<cplx> upper;
    for (auto r : roots) {
        if (std::abs(r.imag()) <= tol * std::max(1.0, std::abs(r)))
            reals.push_back(r.real());
        else if (r.imag() > 0)
            upper.push_back(r);
    }
    // Order so that roots nearest the unit circle come last.
    std::sort(upper.begin(), upper.end(),
              [](cplx a, cplx b) { return std::abs(1.0 - std::abs(a)) > std::abs(1.0 - std::abs(b)); });
    for (auto r : upper) out.push_back({-2.0 * r.real(), std::norm(r)});
    std::sort(reals.begin(), reals.end());
    for (std::size_t i = 0; i + 1 < reals.size(); i += 2) out.push_back({-(reals[i] + reals[i + 1]), reals[i] * reals[i + 1]});
    if (reals.size() % 2) out.push_back({-reals.back(), 0.0});
    return out;
}

inline Sos zpk_to_sos(const Zpk& d) {
    auto pole_q = quadratic_factors(d.poles);
    auto zero_q = quadratic_factors(d.zeros);
    if (zero_q.size() > pole_q.size()) throw FilterDesignError("more zero sections than pole sections");
    // Match every pole section with the zero section whose roots lie closest to its poles.
    std::vector<bool> used(zero_q.size(), false);
    Sos sos;
    for (const auto& pq : pole_q) {
        std::size_t best = zero_q.size();
        double best_d = 0;
        for (std::size_t j = 0; j < zero_q.size(); ++j) {
            if (used[j]) continue;
            const double dist = std::abs(pq[0] - zero_q[j][0]) + std::abs(pq[1] - zero_q[j][1]);
            if (best == zero_q.size() || dist < best_d) {
                best = j;
                best_d = dist;
            }
        }
        Biquad b;
        b.a1 = pq[0];
        b.a2 = pq[1];
        if (best < zero_q.size()) {
            used[best] = true;
            b.b1 = zero_q[best][0];
            b.b2 = zero_q[best][1];
        }
        sos.push_back(b);
    }
    sos.front().b0 *= d.gain;
    sos.front().b1 *= d.gain;
    sos.front().b2 *= d.gain;
    return sos;
}

inline void check_stable(const Zpk& d) {
    for (auto p : d.poles)
        if (!(std::abs(p) < 1.0)) throw FilterDesignError("designed filter is unstable");
}

}  // namespace filter_detail

/// Chebyshev type II band-pass design. `low` and `high` are stop-band edges: attenuation is at
/// least `stopband_db` outside [low, high].
inline Sos design_cheby2_bandpass(double fs, double low, double high, const Cheby2Options& opt = {}) {
    using namespace filter_detail;
    if (!(fs > 0)) throw FilterDesignError("sampling rate must be positive");
    if (!(low > 0 && low < high && high < fs / 2.0))
        throw FilterDesignError("band [" + std::to_string(low) + ", " + std::to_string(high) +
                                "] Hz must satisfy 0 < low < high < fs/2 = " + std::to_string(fs / 2.0));
    if (opt.order < 2 || opt.order % 2) throw FilterDesignError("band-pass order must be even and >= 2");
    if (!(opt.stopband_db > 0)) throw FilterDesignError("stop-band attenuation must be positive");

    const double nyq = fs / 2.0;
    const double w1 = 4.0 * std::tan(std::numbers::pi * (low / nyq) / 2.0);
    const double w2 = 4.0 * std::tan(std::numbers::pi * (high / nyq) / 2.0);
    const Zpk proto = cheby2_prototype(opt.order / 2, opt.stopband_db);
    const Zpk digital = bilinear(lowpass_to_bandpass(proto, std::sqrt(w1 * w2), w2 - w1));
    check_stable(digital);
    return zpk_to_sos(digital);
}

/// Second-order IIR notch with quality factor q (bandwidth f0/q at -3 dB).
inline Sos design_notch(double fs, double f0, double q = 30.0) {
    if (!(f0 > 0 && f0 < fs / 2.0)) throw FilterDesignError("notch frequency must lie in (0, fs/2)");
    if (!(q > 0)) throw FilterDesignError("notch quality factor must be positive");
    const double w0 = std::numbers::pi * f0 / (fs / 2.0);
    const double bw = w0 / q;
    const double beta = std::tan(bw / 2.0);
    const double gain = 1.0 / (1.0 + beta);
    Biquad b;
    b.b0 = gain;
    b.b1 = -2.0 * gain * std::cos(w0);
    b.b2 = gain;
    b.a1 = -2.0 * gain * std::cos(w0);
    b.a2 = 2.0 * gain - 1.0;
    return {b};
}

/// Complex frequency response of the cascade at frequency f.
inline std::complex<double> freq_response(const Sos& sos, double f, double fs) {
    const auto z1 = std::exp(std::complex<double>(0.0, -2.0 * std::numbers::pi * f / fs));
    const auto z2 = z1 * z1;
    std::complex<double> h(1.0);
    for (const auto& s : sos) h *= (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
    return h;
}

/// Steady-state section states for a unit step input, scaled through the cascade.
inline std::vector<std::array<double, 2>> sos_step_state(const Sos& sos) {
    std::vector<std::array<double, 2>> zi;
    double scale = 1.0;
    for (const auto& s : sos) {
        const double den = 1.0 + s.a1 + s.a2;
        const double y = den != 0.0 ? (s.b0 + s.b1 + s.b2) / den : 0.0;
        const double z2 = s.b2 - s.a2 * y;
        const double z1 = s.b1 - s.a1 * y + z2;
        zi.push_back({scale * z1, scale * z2});
        scale *= y;
    }
    return zi;
}

/// Direct causal filtering (transposed direct form II per section).
inline Signal sosfilt(const Sos& sos, std::span<const double> x, std::vector<std::array<double, 2>> state = {}) {
    if (state.empty()) state.assign(sos.size(), {0.0, 0.0});
    Signal y(x.begin(), x.end());
    for (std::size_t k = 0; k < sos.size(); ++k) {
        const auto& s = sos[k];
        double z1 = state[k][0], z2 = state[k][1];
        for (double& v : y) {
            const double in = v;
            const double out = s.b0 * in + z1;
            z1 = s.b1 * in - s.a1 * out + z2;
            z2 = s.b2 * in - s.a2 * out;
            v = out;
        }
    }
    return y;
}

/// Zero-phase forward-backward filtering with odd-reflection padding and steady-state initial
/// conditions. Requires more than 3x the filter order samples.
inline Signal sosfiltfilt(const Sos& sos, std::span<const double> x) {
    const std::size_t pad = 3 * 2 * sos.size();
    if (x.size() <= pad)
        throw DspError("signal of " + std::to_string(x.size()) + " samples is too short for zero-phase filtering (need > " +
                       std::to_string(pad) + ")");
    const std::size_t n = x.size();
    Signal ext;
    ext.reserve(n + 2 * pad);
    for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
    ext.insert(ext.end(), x.begin(), x.end());
    for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

    const auto zi = sos_step_state(sos);
    auto scaled = [&](double v) {
        auto z = zi;
        for (auto& s : z) {
            s[0] *= v;
            s[1] *= v;
        }
        return z;
    };
    Signal fwd = sosfilt(sos, ext, scaled(ext.front()));
    std::reverse(fwd.begin(), fwd.end());
    Signal bwd = sosfilt(sos, fwd, scaled(fwd.front()));
    std::reverse(bwd.begin(), bwd.end());
    return Signal(bwd.begin() + static_cast<std::ptrdiff_t>(pad), bwd.begin() + static_cast<std::ptrdiff_t>(pad + n));
}

inline Signal filter_bandpass_cheby2(std::span<const double> x, double fs, double low, double high,
                                     const Cheby2Options& opt = {}) {
    return sosfiltfilt(design_cheby2_bandpass(fs, low, high, opt), x);
}

inline Signal filter_notch(std::span<const double> x, double fs, double f0, double q = 30.0) {
    return sosfiltfilt(design_notch(fs, f0, q), x);
}

/// Splits a signal into the four qEEG bands (delta, theta, alpha, beta).
inline std::array<Signal, 4> band_decompose(std::span<const double> x, double fs, const Cheby2Options& opt = {}) {
    if (fs < 64.0) throw FilterDesignError("band decomposition needs fs >= 64 Hz for the 13-30 Hz band");
    std::array<Signal, 4> out;
    for (std::size_t b = 0; b < kEegBands.size(); ++b)
        out[b] = filter_bandpass_cheby2(x, fs, kEegBands[b].low, kEegBands[b].high, opt);
    return out;
}

}  // namespace neoeeg::dsp
