#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "neoeeg/competition/model.hpp"
#include "neoeeg/errors.hpp"
#include "neoeeg/util.hpp"

namespace neoeeg::competition {

inline constexpr std::string_view kSubmissionHeader = "epoch_id,grade,probability";

inline bool valid_utf8(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size()) {
        const auto c = static_cast<unsigned char>(s[i]);
        std::size_t len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3 : (c >> 3) == 0x1E ? 4 : 0;
        if (len == 0 || i + len > s.size()) return false;
        std::uint32_t cp = len == 1 ? c : len == 2 ? (c & 0x1F) : len == 3 ? (c & 0x0F) : (c & 0x07);
        for (std::size_t k = 1; k < len; ++k) {
            const auto cc = static_cast<unsigned char>(s[i + k]);
            if ((cc >> 6) != 0x2) return false;
            cp = (cp << 6) | (cc & 0x3F);
        }
        if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && (cp < 0x10000 || cp > 0x10FFFF)) ||
            (cp >= 0xD800 && cp <= 0xDFFF))
            return false;
        i += len;
    }
    return true;
}

/// Parses a prediction file. When `expected` is given, coverage must match it exactly.
/// Every problem is collected; the whole file is rejected if any is found.
inline std::vector<SubmissionRow> parse_predictions(std::string_view text, const std::set<std::string>* expected) {
    std::vector<LineIssue> issues;
    if (!valid_utf8(text)) throw ValidationError({{0, "file is not valid UTF-8"}});
    const auto lines = text_lines(text);
    if (lines.empty() || io::trim(lines[0]).empty()) throw ValidationError({{1, "file is empty; expected header '" +
                                                                                  std::string(kSubmissionHeader) + "'"}});
    const auto header = split_csv_line(lines[0]);
    if (header != std::vector<std::string>{"epoch_id", "grade", "probability"})
        issues.push_back({1, "header must be '" + std::string(kSubmissionHeader) + "'"});

    std::vector<SubmissionRow> rows;
    std::set<std::string> seen;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const std::size_t line = i + 1;
        if (io::trim(lines[i]).empty()) continue;
        const auto cells = split_csv_line(lines[i]);
        if (cells.size() != 3) {
            issues.push_back({line, "expected 3 fields, found " + std::to_string(cells.size())});
            continue;
        }
        bool ok = true;
        if (cells[0].empty()) {
            issues.push_back({line, "empty epoch_id"});
            ok = false;
        } else if (expected && !expected->count(cells[0])) {
            issues.push_back({line, "unknown epoch_id '" + cells[0] + "'"});
            ok = false;
        } else if (!seen.insert(cells[0]).second) {
            issues.push_back({line, "duplicate row for epoch '" + cells[0] + "'"});
            ok = false;
        }
        const auto g = parse_int(cells[1]);
        if (!g) {
            issues.push_back({line, "grade '" + cells[1] + "' is not an integer"});
            ok = false;
        } else if (*g < 1 || *g > 4) {
            issues.push_back({line, "grade " + cells[1] + " outside 1-4"});
            ok = false;
        }
        const auto p = parse_double(cells[2]);
        if (!p || std::isnan(*p)) {
            issues.push_back({line, "probability '" + cells[2] + "' is not a number"});
            ok = false;
        } else if (*p < 0.0 || *p > 1.0) {
            issues.push_back({line, "probability " + cells[2] + " outside [0, 1]"});
            ok = false;
        }
        if (ok) rows.push_back({cells[0], static_cast<int>(*g), *p});
    }

    if (expected) {
        std::vector<std::string> missing;
        for (const auto& id : *expected)
            if (!seen.count(id)) missing.push_back(id);
        if (!missing.empty()) {
            std::string msg = "missing " + std::to_string(missing.size()) + " epoch(s):";
            for (std::size_t k = 0; k < missing.size() && k < 20; ++k) msg += " " + missing[k];
            if (missing.size() > 20) msg += " ...";
            issues.push_back({0, msg});
        }
    }
    if (!issues.empty()) throw ValidationError(std::move(issues));
    return rows;
}

/// Checks a submission against a competition's published test epochs.
inline std::vector<SubmissionRow> validate_submission(std::string_view csv, const Competition& c) {
    const auto ids = c.test_epoch_ids();
    const std::set<std::string> expected(ids.begin(), ids.end());
    return parse_predictions(csv, &expected);
}

inline std::string format_predictions(const std::vector<SubmissionRow>& rows) {
    std::string out = std::string(kSubmissionHeader) + "\n";
    for (const auto& r : rows) out += r.epoch_id + "," + std::to_string(r.grade) + "," + format_number(r.probability) + "\n";
    return out;
}

}  // namespace neoeeg::competition
