#pragma once

// Plain-text signal format: one column per channel with a header row of labels, plus a
// sidecar JSON next to it ({"fs": <Hz>, "subject_id": "..."}).

#include <filesystem>
#include <sstream>
#include <string>

#include <json.hpp>

#include "neoeeg/errors.hpp"
#include "neoeeg/io/recording.hpp"
#include "neoeeg/util.hpp"

namespace neoeeg::io {

inline std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
    auto p = csv;
    p.replace_extension(".json");
    return p;
}

inline Recording read_signal_csv(const std::filesystem::path& path) {
    const auto meta_path = sidecar_path(path);
    if (!std::filesystem::exists(meta_path)) throw ParseError("missing sidecar " + meta_path.string(), 0);
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(read_text_file(meta_path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("sidecar " + meta_path.string() + " is not JSON: " + e.what(), e.byte);
    }
    if (!meta.contains("fs") || !meta["fs"].is_number()) throw ParseError("sidecar lacks numeric 'fs'", 0);

    Recording rec;
    rec.fs = meta["fs"].get<double>();
    rec.subject_id = meta.value("subject_id", path.stem().string());
    if (meta.contains("start_offset") && meta["start_offset"].is_number())
        rec.start_offset = meta["start_offset"].get<double>();

    const std::string text = read_text_file(path);
    const auto lines = text_lines(text);
    if (lines.empty()) throw ParseError("signal CSV is empty", 0);
    rec.channel_labels = split_csv_line(lines[0]);
    rec.samples.assign(rec.channel_labels.size(), {});
    for (auto& ch : rec.samples) ch.reserve(lines.size() - 1);
    std::size_t offset = lines[0].size() + 1;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto cells = split_csv_line(lines[i]);
        if (cells.size() != rec.channel_labels.size())
            throw ParseError("row " + std::to_string(i + 1) + " has " + std::to_string(cells.size()) +
                                 " cells, expected " + std::to_string(rec.channel_labels.size()),
                             offset);
        for (std::size_t c = 0; c < cells.size(); ++c) {
            auto v = parse_double(cells[c]);
            if (!v) throw ParseError("row " + std::to_string(i + 1) + ": '" + cells[c] + "' is not a number", offset);
            rec.samples[c].push_back(*v);
        }
        offset += lines[i].size() + 1;
    }
    rec.validate();
    return rec;
}

inline void write_signal_csv(const Recording& rec, const std::filesystem::path& path) {
    rec.validate();
    std::string out;
    for (std::size_t c = 0; c < rec.num_channels(); ++c) {
        if (c) out += ',';
        out += rec.channel_labels[c];
    }
    out += '\n';
    for (std::size_t i = 0; i < rec.num_samples(); ++i) {
        for (std::size_t c = 0; c < rec.num_channels(); ++c) {
            if (c) out += ',';
            out += format_number(rec.samples[c][i]);
        }
        out += '\n';
    }
    atomic_write(path, out);
    nlohmann::json meta{{"fs", rec.fs}, {"subject_id", rec.subject_id}};
    if (rec.start_offset) meta["start_offset"] = *rec.start_offset;
    atomic_write(sidecar_path(path), meta.dump(2) + "\n");
}

}  // namespace neoeeg::io
