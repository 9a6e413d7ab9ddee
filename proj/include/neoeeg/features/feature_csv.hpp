#pragma once

#include <algorithm>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "neoeeg/features/neural.hpp"
#include "neoeeg/util.hpp"

namespace neoeeg::features {

struct FeatureTable {
    std::vector<std::string> names;
    std::vector<FeatureVector> rows;
};

/// `epoch_id,<names...>` with one row per epoch sorted by epoch_id; missing values are empty fields.
inline std::string format_feature_csv(std::vector<FeatureVector> rows) {
    if (rows.empty()) throw FeatureError("no feature rows to write");
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.epoch_id < b.epoch_id; });
    const auto& names = rows.front().names;
    std::string out = "epoch_id";
    for (const auto& n : names) out += "," + n;
    out += "\n";
    for (const auto& r : rows) {
        if (r.names != names) throw FeatureError("feature rows have different schemas");
        out += r.epoch_id;
        for (double v : r.values) out += "," + format_number(v);
        out += "\n";
    }
    return out;
}

inline FeatureTable parse_feature_csv(const std::string& text) {
    const auto lines = text_lines(text);
    if (lines.empty()) throw FeatureError("feature file is empty");
    auto header = split_csv_line(lines[0]);
    if (header.empty() || header[0] != "epoch_id") throw FeatureError("feature header must start with 'epoch_id'");
    FeatureTable t;
    t.names.assign(header.begin() + 1, header.end());
    std::set<std::string> seen;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (io::trim(lines[i]).empty()) continue;
        const auto cells = split_csv_line(lines[i]);
        const std::string where = "line " + std::to_string(i + 1) + ": ";
        if (cells.size() != header.size()) throw FeatureError(where + "expected " + std::to_string(header.size()) + " fields");
        if (!seen.insert(cells[0]).second) throw FeatureError(where + "duplicate epoch_id '" + cells[0] + "'");
        FeatureVector fv;
        fv.epoch_id = cells[0];
        fv.names = t.names;
        for (std::size_t c = 1; c < cells.size(); ++c) {
            if (cells[c].empty()) {
                fv.values.push_back(kMissing);
                continue;
            }
            const auto v = parse_double(cells[c]);
            if (!v) throw FeatureError(where + "'" + cells[c] + "' is not a number");
            fv.values.push_back(*v);
        }
        t.rows.push_back(std::move(fv));
    }
    return t;
}

inline FeatureTable read_feature_csv(const std::filesystem::path& path) { return parse_feature_csv(read_text_file(path)); }

}  // namespace neoeeg::features
