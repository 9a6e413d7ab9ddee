#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "neoeeg/errors.hpp"

namespace neoeeg::io {

/// Raw fixed-width EDF header fields, kept verbatim so a parsed file can be re-emitted byte for byte.
struct EdfSignalHeader {
    std::string label;               // 16
    std::string transducer;          // 80
    std::string physical_dimension;  // 8
    std::string physical_min;        // 8
    std::string physical_max;        // 8
    std::string digital_min;         // 8
    std::string digital_max;         // 8
    std::string prefilter;           // 80
    std::string samples_per_record;  // 8
    std::string reserved;            // 32

    bool operator==(const EdfSignalHeader&) const = default;
};

struct EdfHeader {
    std::string version;          // 8
    std::string patient;          // 80
    std::string recording;        // 80
    std::string start_date;       // 8
    std::string start_time;       // 8
    std::string header_bytes;     // 8
    std::string reserved;         // 44
    std::string num_records;      // 8
    std::string record_duration;  // 8
    std::string num_signals;      // 4
    std::vector<EdfSignalHeader> signals;

    bool operator==(const EdfHeader&) const = default;
};

/// Multichannel EEG in microvolts.
struct Recording {
    std::vector<std::string> channel_labels;
    double fs = 0.0;
    std::vector<std::vector<double>> samples;
    std::string subject_id;
    std::optional<double> start_offset;
    std::optional<EdfHeader> edf;

    std::size_t num_channels() const noexcept { return samples.size(); }
    std::size_t num_samples() const noexcept { return samples.empty() ? 0 : samples.front().size(); }
    double duration() const noexcept { return fs > 0 ? static_cast<double>(num_samples()) / fs : 0.0; }

    void validate() const {
        if (!(fs > 0.0) || !std::isfinite(fs)) throw Error("recording sampling rate must be positive");
        if (channel_labels.size() != samples.size())
            throw Error("recording has " + std::to_string(samples.size()) + " channels but " +
                        std::to_string(channel_labels.size()) + " labels");
        std::set<std::string> seen;
        for (const auto& l : channel_labels)
            if (!seen.insert(l).second) throw Error("duplicate channel label '" + l + "'");
        for (const auto& ch : samples)
            if (ch.size() != num_samples()) throw Error("recording channels differ in length");
    }

    bool operator==(const Recording&) const = default;
};

inline std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline std::string to_upper(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return out;
}

/// Canonical electrode key: case-folded, without an "EEG " prefix or a "-REF"/"-LE" reference suffix.
inline std::string electrode_key(std::string_view label) {
    std::string s = to_upper(trim(label));
    if (s.rfind("EEG ", 0) == 0) s = trim(s.substr(4));
    for (std::string_view suffix : {"-REF", "-LE", "-AV"}) {
        if (s.size() > suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0) {
            s.resize(s.size() - suffix.size());
            break;
        }
    }
    return s;
}

inline std::optional<std::size_t> find_channel(const Recording& rec, std::string_view label) {
    const std::string key = electrode_key(label);
    for (std::size_t i = 0; i < rec.channel_labels.size(); ++i)
        if (electrode_key(rec.channel_labels[i]) == key) return i;
    return std::nullopt;
}

/// A one-hour graded (or unlabelled) epoch.
struct GradedEpoch {
    std::string epoch_id;
    std::string subject_id;
    Recording recording;
    std::optional<int> grade;

    void validate(double expected_seconds = 3600.0) const {
        recording.validate();
        if (grade && (*grade < 1 || *grade > 4))
            throw LabelError("epoch " + epoch_id + ": grade " + std::to_string(*grade) + " outside 1-4");
        if (std::abs(recording.duration() - expected_seconds) > 1.0 / recording.fs + 1e-9)
            throw Error("epoch " + epoch_id + " lasts " + std::to_string(recording.duration()) + " s, expected " +
                        std::to_string(expected_seconds));
    }
};

}  // namespace neoeeg::io
