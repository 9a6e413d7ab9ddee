#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <zlib.h>

#include "neoeeg/dsp/filter.hpp"
#include "neoeeg/dsp/resample.hpp"
#include "neoeeg/dsp/signal_ops.hpp"
#include "neoeeg/errors.hpp"
#include "neoeeg/io/montage.hpp"
#include "neoeeg/util.hpp"

namespace neoeeg::features {

/// Square row-major matrix.
struct Image {
    std::size_t size = 0;
    std::vector<double> data;

    Image() = default;
    explicit Image(std::size_t n, double fill = 0.0) : size(n), data(n * n, fill) {}
    double& operator()(std::size_t r, std::size_t c) { return data[r * size + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * size + c]; }
    bool operator==(const Image&) const = default;
};

struct GasfImage {
    Image matrix;
    std::vector<double> phi;
    bool degenerate = false;
};

inline constexpr std::size_t kGasfWindow = 384;
inline constexpr std::size_t kGasfImageSize = 224;

/// Gramian angular summation field of one window after min-max rescaling to [-1, 1].
inline GasfImage gasf_encode(std::span<const double> x) {
    if (x.empty()) throw FeatureError("GASF window is empty");
    for (double v : x)
        if (!std::isfinite(v)) throw FeatureError("GASF window contains non-finite values");
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    const double range = *hi - *lo;
    GasfImage g;
    g.degenerate = !(range > 0);
    g.phi.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double scaled = g.degenerate ? 0.0 : std::clamp(2.0 * (x[i] - *lo) / range - 1.0, -1.0, 1.0);
        g.phi[i] = std::acos(scaled);
    }
    g.matrix = Image(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = i; j < x.size(); ++j) g.matrix(i, j) = g.matrix(j, i) = std::cos(g.phi[i] + g.phi[j]);
    return g;
}

/// Bilinear resize with half-pixel centre alignment.
inline Image resize_bilinear(const Image& img, std::size_t target) {
    if (img.size == 0 || target == 0) throw FeatureError("cannot resize an empty image");
    Image out(target);
    const double scale = static_cast<double>(img.size) / static_cast<double>(target);
    const auto last = static_cast<double>(img.size - 1);
    auto coord = [&](std::size_t i, std::size_t& i0, std::size_t& i1, double& t) {
        const double s = std::clamp((static_cast<double>(i) + 0.5) * scale - 0.5, 0.0, last);
        i0 = static_cast<std::size_t>(std::floor(s));
        i1 = std::min(i0 + 1, img.size - 1);
        t = s - static_cast<double>(i0);
    };
    for (std::size_t r = 0; r < target; ++r) {
        std::size_t r0, r1;
        double tr;
        coord(r, r0, r1, tr);
        for (std::size_t c = 0; c < target; ++c) {
            std::size_t c0, c1;
            double tc;
            coord(c, c0, c1, tc);
            const double top = img(r0, c0) * (1 - tc) + img(r0, c1) * tc;
            const double bottom = img(r1, c0) * (1 - tc) + img(r1, c1) * tc;
            out(r, c) = top * (1 - tr) + bottom * tr;
        }
    }
    return out;
}

struct GasfOptions {
    double fs = 32.0;
    double band_low = 0.5;
    double band_high = 12.8;
    double notch_hz = 50.0;
    double rms_window_s = 0.25;
    std::size_t window = kGasfWindow;
    std::size_t stride = kGasfWindow;
    std::size_t image_size = kGasfImageSize;
};

/// One RGB image: planes in montage order.
using GasfFrame = std::array<Image, 3>;

/// Filtering, notch, resampling and RMS envelope applied to each GASF montage channel.
inline std::vector<dsp::Signal> gasf_preprocess(const io::Recording& raw, const GasfOptions& opt = {}) {
    io::Recording derived;
    try {
        derived = io::derive_montage(raw, io::gasf_montage());
    } catch (const MontageError& e) {
        throw FeatureError(e.what());
    }
    std::vector<dsp::Signal> out;
    for (const auto& ch : derived.samples) {
        dsp::Signal x = dsp::filter_bandpass_cheby2(ch, raw.fs, opt.band_low, opt.band_high);
        if (opt.notch_hz > 0 && opt.notch_hz < raw.fs / 2) x = dsp::filter_notch(x, raw.fs, opt.notch_hz);
        x = dsp::resample(x, raw.fs, opt.fs);
        out.push_back(dsp::rms(x, opt.fs, opt.rms_window_s));
    }
    return out;
}

/// GASF image sequence of an epoch: one frame per window of the RMS series.
inline std::vector<GasfFrame> gasf_stack(const std::vector<dsp::Signal>& rms_channels, const GasfOptions& opt = {}) {
    if (rms_channels.size() != 3) throw FeatureError("GASF stack needs exactly three channels");
    const std::size_t len = rms_channels.front().size();
    std::vector<GasfFrame> frames;
    for (std::size_t s = 0; s + opt.window <= len; s += opt.stride) {
        GasfFrame f;
        for (std::size_t p = 0; p < 3; ++p) {
            const auto g = gasf_encode(std::span<const double>(rms_channels[p]).subspan(s, opt.window));
            f[p] = opt.image_size == opt.window ? g.matrix : resize_bilinear(g.matrix, opt.image_size);
        }
        frames.push_back(std::move(f));
    }
    return frames;
}

inline std::vector<GasfFrame> gasf_stack(const io::Recording& raw, const GasfOptions& opt = {}) {
    return gasf_stack(gasf_preprocess(raw, opt), opt);
}

namespace image_detail {

inline void put_u32(std::string& s, std::uint32_t v) {
    for (int shift = 24; shift >= 0; shift -= 8) s.push_back(static_cast<char>((v >> shift) & 0xFF));
}

inline void chunk(std::string& png, const char* type, const std::string& payload) {
    put_u32(png, static_cast<std::uint32_t>(payload.size()));
    std::string body(type, 4);
    body += payload;
    png += body;
    put_u32(png, static_cast<std::uint32_t>(
                     crc32(0L, reinterpret_cast<const Bytef*>(body.data()), static_cast<uInt>(body.size()))));
}

inline std::uint8_t to_byte(double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp((v + 1.0) / 2.0 * 255.0, 0.0, 255.0)));
}

}  // namespace image_detail

/// 8-bit RGB PNG; values in [-1, 1] map to round((v + 1) / 2 * 255).
inline std::string encode_png(const GasfFrame& frame) {
    using namespace image_detail;
    const std::size_t n = frame[0].size;
    std::string raw;
    raw.reserve(n * (3 * n + 1));
    for (std::size_t r = 0; r < n; ++r) {
        raw.push_back('\0');
        for (std::size_t c = 0; c < n; ++c)
            for (std::size_t p = 0; p < 3; ++p) raw.push_back(static_cast<char>(to_byte(frame[p](r, c))));
    }
    uLongf out_len = compressBound(static_cast<uLong>(raw.size()));
    std::string z(out_len, '\0');
    if (compress2(reinterpret_cast<Bytef*>(z.data()), &out_len, reinterpret_cast<const Bytef*>(raw.data()),
                  static_cast<uLong>(raw.size()), 6) != Z_OK)
        throw FeatureError("PNG compression failed");
    z.resize(out_len);

    std::string png("\x89PNG\r\n\x1a\n", 8);
    std::string ihdr;
    put_u32(ihdr, static_cast<std::uint32_t>(n));
    put_u32(ihdr, static_cast<std::uint32_t>(n));
    ihdr += std::string("\x08\x02\x00\x00\x00", 5);
    chunk(png, "IHDR", ihdr);
    chunk(png, "IDAT", z);
    chunk(png, "IEND", "");
    return png;
}

/// NumPy .npy (format 1.0) little-endian float32 array of shape (3, n, n).
inline std::string encode_npy(const GasfFrame& frame) {
    const std::size_t n = frame[0].size;
    std::string header = "{'descr': '<f4', 'fortran_order': False, 'shape': (3, " + std::to_string(n) + ", " +
                         std::to_string(n) + "), }";
    const std::size_t base = 10 + header.size() + 1;
    header.append((64 - base % 64) % 64, ' ');
    header.push_back('\n');
    std::string out("\x93NUMPY\x01\x00", 8);
    out.push_back(static_cast<char>(header.size() & 0xFF));
    out.push_back(static_cast<char>((header.size() >> 8) & 0xFF));
    out += header;
    for (std::size_t p = 0; p < 3; ++p)
        for (double v : frame[p].data) {
            const auto f = static_cast<float>(v);
            char bytes[4];
            std::memcpy(bytes, &f, 4);
            out.append(bytes, 4);
        }
    return out;
}

}  // namespace neoeeg::features
