#pragma once

// EDF (not EDF+) reader and writer. Annotation signals are skipped on read.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "neoeeg/errors.hpp"
#include "neoeeg/io/recording.hpp"

namespace neoeeg::io {

namespace edf_detail {

constexpr std::size_t kGlobalHeaderBytes = 256;
constexpr std::size_t kSignalHeaderBytes = 256;

inline std::string field(const std::vector<unsigned char>& bytes, std::size_t offset, std::size_t width) {
    if (offset + width > bytes.size()) throw ParseError("EDF header truncated", offset);
    return std::string(reinterpret_cast<const char*>(bytes.data()) + offset, width);
}

inline double number(const std::string& raw, std::size_t offset, const char* what) {
    const std::string t = trim(raw);
    if (t.empty()) throw ParseError(std::string("EDF field '") + what + "' is empty", offset);
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size() || !std::isfinite(v))
        throw ParseError(std::string("EDF field '") + what + "' is not numeric: '" + t + "'", offset);
    return v;
}

inline long integer(const std::string& raw, std::size_t offset, const char* what) {
    const double v = number(raw, offset, what);
    if (v != std::floor(v)) throw ParseError(std::string("EDF field '") + what + "' is not an integer", offset);
    return static_cast<long>(v);
}

/// Multiplier from the declared physical dimension to microvolts.
inline double to_microvolts(const std::string& dimension) {
    const std::string d = to_upper(trim(dimension));
    if (d == "MV") return 1e3;
    if (d == "V") return 1e6;
    if (d == "NV") return 1e-3;
    return 1.0;  // uV, µV, or unspecified
}

inline std::string pad(std::string s, std::size_t width) {
    if (s.size() > width) s.resize(width);
    s.append(width - s.size(), ' ');
    return s;
}

/// Shortest %g rendering of v that fits in width characters.
inline std::string fit_number(double v, std::size_t width) {
    char buf[64];
    for (int prec = static_cast<int>(width); prec >= 1; --prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::string(buf).size() <= width) return pad(buf, width);
    }
    throw Error("cannot render " + std::to_string(v) + " in an EDF field");
}

struct Calibration {
    double phys_min, phys_max;
    long dig_min, dig_max;
    double unit;

    double gain() const { return (phys_max - phys_min) / static_cast<double>(dig_max - dig_min); }
    double to_physical(std::int16_t d) const {
        return unit * (phys_min + (static_cast<double>(d) - static_cast<double>(dig_min)) * gain());
    }
    std::int16_t to_digital(double uv) const {
        const double d = (uv / unit - phys_min) / gain() + static_cast<double>(dig_min);
        const double r = std::round(d);
        return static_cast<std::int16_t>(std::clamp(r, static_cast<double>(dig_min), static_cast<double>(dig_max)));
    }
};

inline Calibration calibration(const EdfSignalHeader& s, std::size_t offset) {
    Calibration c{number(s.physical_min, offset, "physical minimum"),
                  number(s.physical_max, offset, "physical maximum"),
                  integer(s.digital_min, offset, "digital minimum"), integer(s.digital_max, offset, "digital maximum"),
                  to_microvolts(s.physical_dimension)};
    if (c.dig_max <= c.dig_min) throw ParseError("EDF digital maximum must exceed digital minimum", offset);
    if (c.phys_max == c.phys_min) throw ParseError("EDF physical range is empty", offset);
    if (c.dig_min < -32768 || c.dig_max > 32767)
        throw UnsupportedFormat("EDF digital range exceeds 16-bit samples");
    return c;
}

inline bool is_annotation(const EdfSignalHeader& s) { return trim(s.label) == "EDF Annotations"; }

}  // namespace edf_detail

/// Parses an in-memory EDF file.
inline Recording parse_edf(const std::vector<unsigned char>& bytes) {
    using namespace edf_detail;
    if (bytes.size() < kGlobalHeaderBytes) throw ParseError("file shorter than the 256-byte EDF header", bytes.size());
    if (bytes[0] == 0xFF) throw UnsupportedFormat("24-bit BDF samples are not supported");

    EdfHeader h;
    h.version = field(bytes, 0, 8);
    if (trim(h.version) != "0") throw ParseError("EDF version field must be '0'", 0);
    h.patient = field(bytes, 8, 80);
    h.recording = field(bytes, 88, 80);
    h.start_date = field(bytes, 168, 8);
    h.start_time = field(bytes, 176, 8);
    h.header_bytes = field(bytes, 184, 8);
    h.reserved = field(bytes, 192, 44);
    h.num_records = field(bytes, 236, 8);
    h.record_duration = field(bytes, 244, 8);
    h.num_signals = field(bytes, 252, 4);

    const long ns = integer(h.num_signals, 252, "number of signals");
    if (ns <= 0) throw ParseError("EDF declares no signals", 252);
    const long header_bytes = integer(h.header_bytes, 184, "header bytes");
    const auto expected_header = static_cast<long>(kGlobalHeaderBytes + kSignalHeaderBytes * static_cast<std::size_t>(ns));
    if (header_bytes != expected_header)
        throw ParseError("EDF header size " + std::to_string(header_bytes) + " does not match " +
                             std::to_string(ns) + " signals",
                         184);
    if (bytes.size() < static_cast<std::size_t>(header_bytes))
        throw ParseError("EDF signal headers truncated", bytes.size());

    const auto n = static_cast<std::size_t>(ns);
    h.signals.resize(n);
    std::size_t off = kGlobalHeaderBytes;
    auto column = [&](std::size_t width, std::string EdfSignalHeader::*member) {
        for (std::size_t i = 0; i < n; ++i) h.signals[i].*member = field(bytes, off + i * width, width);
        off += n * width;
    };
    column(16, &EdfSignalHeader::label);
    column(80, &EdfSignalHeader::transducer);
    column(8, &EdfSignalHeader::physical_dimension);
    const std::size_t calib_off = off;
    column(8, &EdfSignalHeader::physical_min);
    column(8, &EdfSignalHeader::physical_max);
    column(8, &EdfSignalHeader::digital_min);
    column(8, &EdfSignalHeader::digital_max);
    column(80, &EdfSignalHeader::prefilter);
    const std::size_t spr_off = off;
    column(8, &EdfSignalHeader::samples_per_record);
    column(32, &EdfSignalHeader::reserved);

    const double record_duration = number(h.record_duration, 244, "record duration");
    if (!(record_duration > 0)) throw ParseError("EDF record duration must be positive", 244);

    std::vector<std::size_t> spr(n);
    std::size_t record_samples = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const long s = integer(h.signals[i].samples_per_record, spr_off + 8 * i, "samples per record");
        if (s <= 0) throw ParseError("EDF samples per record must be positive", spr_off + 8 * i);
        spr[i] = static_cast<std::size_t>(s);
        record_samples += spr[i];
    }
    const std::size_t record_bytes = 2 * record_samples;
    const std::size_t data_bytes = bytes.size() - static_cast<std::size_t>(header_bytes);

    long nrec = integer(h.num_records, 236, "number of records");
    if (nrec == -1) {
        if (data_bytes % record_bytes != 0)
            throw ParseError("EDF data is not a whole number of records", static_cast<std::size_t>(header_bytes));
        nrec = static_cast<long>(data_bytes / record_bytes);
    }
    if (nrec < 0) throw ParseError("EDF record count is negative", 236);
    if (data_bytes != static_cast<std::size_t>(nrec) * record_bytes)
        throw ParseError("EDF data holds " + std::to_string(data_bytes) + " bytes but header implies " +
                             std::to_string(static_cast<std::size_t>(nrec) * record_bytes),
                         static_cast<std::size_t>(header_bytes));

    Recording rec;
    std::optional<std::size_t> common_spr;
    std::vector<edf_detail::Calibration> cal(n);
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < n; ++i) {
        if (is_annotation(h.signals[i])) continue;
        if (common_spr && *common_spr != spr[i])
            throw UnsupportedFormat("EDF signals with different sampling rates are not supported");
        common_spr = spr[i];
        cal[i] = calibration(h.signals[i], calib_off + 8 * i);
        kept.push_back(i);
        rec.channel_labels.push_back(trim(h.signals[i].label));
    }
    if (kept.empty()) throw UnsupportedFormat("EDF file contains only annotation signals");

    rec.fs = static_cast<double>(*common_spr) / record_duration;
    rec.samples.assign(kept.size(), std::vector<double>());
    for (auto& ch : rec.samples) ch.reserve(static_cast<std::size_t>(nrec) * *common_spr);

    const unsigned char* p = bytes.data() + header_bytes;
    for (long r = 0; r < nrec; ++r) {
        std::size_t k = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const bool keep = k < kept.size() && kept[k] == i;
            for (std::size_t s = 0; s < spr[i]; ++s, p += 2) {
                if (!keep) continue;
                const auto d = static_cast<std::int16_t>(static_cast<std::uint16_t>(p[0]) |
                                                         static_cast<std::uint16_t>(p[1]) << 8);
                rec.samples[k].push_back(cal[i].to_physical(d));
            }
            if (keep) ++k;
        }
    }
    rec.subject_id = trim(h.patient);
    rec.edf = std::move(h);
    rec.validate();
    return rec;
}

inline Recording read_edf(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open EDF file " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_edf(bytes);
}

/// Serializes a recording. When the recording came from an EDF file its header fields are reused
/// verbatim; otherwise a header is synthesized with a 16-bit calibration spanning the data range.
inline std::vector<unsigned char> serialize_edf(const Recording& rec) {
    using namespace edf_detail;
    rec.validate();
    const std::size_t n = rec.num_channels();
    EdfHeader h;
    if (rec.edf && rec.edf->signals.size() == n) {
        h = *rec.edf;
    } else {
        const std::size_t total = rec.num_samples();
        std::size_t spr = total;
        double duration = static_cast<double>(total) / rec.fs;
        const double rounded_fs = std::round(rec.fs);
        if (rounded_fs == rec.fs && rounded_fs >= 1 && total % static_cast<std::size_t>(rounded_fs) == 0 && total > 0) {
            spr = static_cast<std::size_t>(rounded_fs);
            duration = 1.0;
        }
        const std::size_t nrec = spr == 0 ? 0 : total / spr;
        h.version = pad("0", 8);
        h.patient = pad(rec.subject_id.empty() ? "X" : rec.subject_id, 80);
        h.recording = pad("Startdate X X X X", 80);
        h.start_date = pad("01.01.00", 8);
        h.start_time = pad("00.00.00", 8);
        h.header_bytes = pad(std::to_string(kGlobalHeaderBytes + kSignalHeaderBytes * n), 8);
        h.reserved = pad("", 44);
        h.num_records = pad(std::to_string(nrec), 8);
        h.record_duration = fit_number(duration, 8);
        h.num_signals = pad(std::to_string(n), 4);
        for (std::size_t i = 0; i < n; ++i) {
            const auto& ch = rec.samples[i];
            double lo = ch.empty() ? -1.0 : *std::min_element(ch.begin(), ch.end());
            double hi = ch.empty() ? 1.0 : *std::max_element(ch.begin(), ch.end());
            lo = std::floor(lo);
            hi = std::ceil(hi);
            if (hi <= lo) hi = lo + 1.0;
            EdfSignalHeader s;
            s.label = pad(rec.channel_labels[i], 16);
            s.transducer = pad("", 80);
            s.physical_dimension = pad("uV", 8);
            s.physical_min = fit_number(lo, 8);
            s.physical_max = fit_number(hi, 8);
            s.digital_min = pad("-32768", 8);
            s.digital_max = pad("32767", 8);
            s.prefilter = pad("", 80);
            s.samples_per_record = pad(std::to_string(spr), 8);
            s.reserved = pad("", 32);
            h.signals.push_back(std::move(s));
        }
    }

    std::vector<unsigned char> out;
    auto put = [&](const std::string& s) { out.insert(out.end(), s.begin(), s.end()); };
    put(h.version);
    put(h.patient);
    put(h.recording);
    put(h.start_date);
    put(h.start_time);
    put(h.header_bytes);
    put(h.reserved);
    put(h.num_records);
    put(h.record_duration);
    put(h.num_signals);
    for (auto m : {&EdfSignalHeader::label, &EdfSignalHeader::transducer, &EdfSignalHeader::physical_dimension,
                   &EdfSignalHeader::physical_min, &EdfSignalHeader::physical_max, &EdfSignalHeader::digital_min,
                   &EdfSignalHeader::digital_max, &EdfSignalHeader::prefilter, &EdfSignalHeader::samples_per_record,
                   &EdfSignalHeader::reserved})
        for (const auto& s : h.signals) put(s.*m);

    std::vector<Calibration> cal;
    for (std::size_t i = 0; i < n; ++i) cal.push_back(calibration(h.signals[i], 0));
    const auto spr = static_cast<std::size_t>(integer(h.signals[0].samples_per_record, 0, "samples per record"));
    const std::size_t nrec = spr == 0 ? 0 : rec.num_samples() / spr;
    out.reserve(out.size() + 2 * n * rec.num_samples());
    for (std::size_t r = 0; r < nrec; ++r)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t s = 0; s < spr; ++s) {
                const auto d = static_cast<std::uint16_t>(cal[i].to_digital(rec.samples[i][r * spr + s]));
                out.push_back(static_cast<unsigned char>(d & 0xFF));
                out.push_back(static_cast<unsigned char>(d >> 8));
            }
    return out;
}

inline void write_edf(const Recording& rec, const std::filesystem::path& path) {
    const auto bytes = serialize_edf(rec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write EDF file " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace neoeeg::io
