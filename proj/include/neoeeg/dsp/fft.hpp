#pragma once

#include <complex>
#include <span>
#include <vector>

#include <unsupported/Eigen/FFT>

namespace neoeeg::dsp {

using Signal = std::vector<double>;
using ComplexSignal = std::vector<std::complex<double>>;

namespace fft_detail {
inline Eigen::FFT<double>& engine() {
    thread_local Eigen::FFT<double> fft;
    return fft;
}
}  // namespace fft_detail

/// Full (two-sided) DFT of a real sequence.
inline ComplexSignal fft(std::span<const double> x) {
    ComplexSignal out;
    if (x.empty()) return out;
    std::vector<double> in(x.begin(), x.end());
    fft_detail::engine().fwd(out, in);
    return out;
}

inline ComplexSignal fft(const ComplexSignal& x) {
    ComplexSignal out;
    if (x.empty()) return out;
    fft_detail::engine().fwd(out, x);
    return out;
}

/// Inverse DFT, scaled by 1/N.
inline ComplexSignal ifft(const ComplexSignal& x) {
    ComplexSignal out;
    if (x.empty()) return out;
    fft_detail::engine().inv(out, x);
    return out;
}

/// Smallest integer >= n whose only prime factors are 2, 3 and 5.
inline std::size_t next_fast_length(std::size_t n) {
    if (n <= 1) return 1;
    for (std::size_t m = n;; ++m) {
        std::size_t r = m;
        for (std::size_t p : {2u, 3u, 5u})
            while (r % p == 0) r /= p;
        if (r == 1) return m;
    }
}

}  // namespace neoeeg::dsp
