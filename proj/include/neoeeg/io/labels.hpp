#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "neoeeg/errors.hpp"
#include "neoeeg/util.hpp"

namespace neoeeg::io {

struct LabelRow {
    std::string epoch_id;
    std::string subject_id;
    int grade = 0;
};

/// Parses `epoch_id,subject_id,grade` text. Grades must lie in 1-4 (grade 0 is folded into 1 upstream).
inline std::vector<LabelRow> parse_label_rows(const std::string& text) {
    const auto lines = text_lines(text);
    if (lines.empty()) throw LabelError("label file is empty");
    const auto header = split_csv_line(lines[0]);
    if (header != std::vector<std::string>{"epoch_id", "subject_id", "grade"})
        throw LabelError("label header must be 'epoch_id,subject_id,grade'");

    std::vector<LabelRow> rows;
    std::set<std::string> seen;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        const auto cells = split_csv_line(lines[i]);
        const std::string where = "line " + std::to_string(i + 1) + ": ";
        if (cells.size() != 3) throw LabelError(where + "expected 3 fields");
        if (cells[0].empty()) throw LabelError(where + "empty epoch_id");
        const auto g = parse_int(cells[2]);
        if (!g) throw LabelError(where + "grade '" + cells[2] + "' is not an integer");
        if (*g == 0) throw LabelError(where + "grade 0 is not accepted; grades 0 and 1 are merged into grade 1");
        if (*g < 1 || *g > 4) throw LabelError(where + "grade " + cells[2] + " outside 1-4");
        if (!seen.insert(cells[0]).second) throw LabelError(where + "duplicate epoch_id '" + cells[0] + "'");
        rows.push_back({cells[0], cells[1], static_cast<int>(*g)});
    }
    return rows;
}

inline std::vector<LabelRow> load_label_rows(const std::filesystem::path& path) {
    return parse_label_rows(read_text_file(path));
}

inline std::map<std::string, int> load_labels(const std::filesystem::path& path) {
    std::map<std::string, int> out;
    for (const auto& r : load_label_rows(path)) out.emplace(r.epoch_id, r.grade);
    return out;
}

inline std::string format_label_rows(const std::vector<LabelRow>& rows) {
    std::string out = "epoch_id,subject_id,grade\n";
    for (const auto& r : rows) out += r.epoch_id + "," + r.subject_id + "," + std::to_string(r.grade) + "\n";
    return out;
}

}  // namespace neoeeg::io
