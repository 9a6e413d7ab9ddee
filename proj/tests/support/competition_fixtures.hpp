#pragma once

#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "neoeeg/competition/engine.hpp"
#include "neoeeg/competition/views.hpp"
#include "neoeeg/util.hpp"

namespace testsupport {

namespace comp = neoeeg::competition;

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("neoeeg_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline std::string pad(int i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%03d", i);
    return buf;
}

/// A competition shaped like the public release: labelled training epochs from 30 subjects
/// and unlabelled test epochs. Grades are drawn from `rng`.
inline comp::CompetitionConfig make_config(std::mt19937_64& rng, int n_train = 105, int n_test = 64,
                                           const std::string& prefix = "") {
    std::uniform_int_distribution<int> grade(1, 4);
    comp::CompetitionConfig c;
    c.title = "Neonatal EEG grading " + prefix;
    c.description = "Grade one-hour epochs into four background classes.";
    for (int i = 0; i < n_train; ++i)
        c.train.push_back({prefix + "tr" + pad(i), "subj" + pad(i % 30), grade(rng)});
    for (int i = 0; i < n_test; ++i) c.hidden.grades[prefix + "te" + pad(i)] = grade(rng);
    c.opens_at = comp::parse_utc("2024-03-01T00:00:00Z");
    c.closes_at = comp::parse_utc("2024-06-01T00:00:00Z");
    return c;
}

inline std::vector<comp::SubmissionRow> truth_rows(const comp::CompetitionConfig& c) {
    std::vector<comp::SubmissionRow> rows;
    for (const auto& [id, g] : c.hidden.grades) rows.push_back({id, g, 0.9});
    return rows;
}

/// Rows where each grade is kept with probability `keep`, otherwise replaced at random.
inline std::vector<comp::SubmissionRow> noisy_rows(const comp::CompetitionConfig& c, double keep, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0, 1);
    std::uniform_int_distribution<int> grade(1, 4);
    std::vector<comp::SubmissionRow> rows;
    for (const auto& [id, g] : c.hidden.grades) rows.push_back({id, u(rng) < keep ? g : grade(rng), u(rng)});
    return rows;
}

inline std::string rows_csv(const std::vector<comp::SubmissionRow>& rows) { return comp::format_predictions(rows); }

/// Structural and textual search for hidden material in a payload.
/// Returns human-readable findings; empty means clean.
class LeakScanner {
public:
    LeakScanner(const comp::Competition& c, bool weights_allowed)
        : hidden_(c.config.hidden.grades), weights_allowed_(weights_allowed) {
        for (const auto& [k, w] : c.config.ranking.weights) weight_texts_.insert(neoeeg::format_number(w));
        if (c.config.ranking.weights.size() > 1)
            for (const auto& s : c.submissions) score_texts_.insert(neoeeg::format_number(s->ranking_score));
        for (const auto& [id, g] : hidden_) grade_sequence_.push_back(g);
    }

    std::vector<std::string> scan(const nlohmann::json& j) const {
        std::vector<std::string> out;
        walk(j, out);
        if (!weights_allowed_) scan_text(j.dump(), out);
        return out;
    }

    /// Error messages and log lines.
    std::vector<std::string> scan_message(const std::string& text) const {
        std::vector<std::string> out;
        for (const auto& [id, g] : hidden_) {
            for (const std::string sep : {",", "=", ": ", ":", " grade ", "' grade ", " -> "}) {
                const std::string needle = id + sep + std::to_string(g);
                if (text.find(needle) != std::string::npos) out.push_back("message pairs " + id + " with its grade");
            }
        }
        if (!weights_allowed_) scan_text(text, out);
        return out;
    }

private:
    void scan_text(const std::string& text, std::vector<std::string>& out) const {
        for (const auto& w : weight_texts_)
            if (w.size() > 3 && text.find(w) != std::string::npos) out.push_back("ranking weight " + w + " in text");
        for (const auto& s : score_texts_)
            if (s.size() > 6 && text.find(s) != std::string::npos) out.push_back("ranking score " + s + " in text");
    }

    void walk(const nlohmann::json& j, std::vector<std::string>& out) const {
        if (j.is_object()) {
            for (const auto& [k, v] : j.items()) {
                static const std::set<std::string> forbidden{"hidden", "hidden_test_labels", "hidden_labels",
                                                             "test_labels", "truth", "labels"};
                if (forbidden.count(k)) out.push_back("forbidden key '" + k + "'");
                if (!weights_allowed_ && (k == "ranking_weights" || k == "weights" || k == "ranking_score"))
                    out.push_back("ranking key '" + k + "'");
                if (hidden_.count(k)) out.push_back("object keyed by test epoch '" + k + "'");
            }
            if (j.contains("epoch_id") && j["epoch_id"].is_string() && hidden_.count(j["epoch_id"].get<std::string>())) {
                for (const char* k : {"grade", "label", "class", "truth"})
                    if (j.contains(k)) out.push_back("test epoch record carries '" + std::string(k) + "'");
            }
            for (const auto& [k, v] : j.items()) walk(v, out);
        } else if (j.is_array()) {
            if (j.size() == grade_sequence_.size() && !j.empty()) {
                bool same = true;
                for (std::size_t i = 0; i < j.size() && same; ++i)
                    same = j[i].is_number_integer() && j[i].get<int>() == grade_sequence_[i];
                if (same) out.push_back("array equal to the hidden grade sequence");
            }
            if (j.size() == 2 && j[0].is_string() && hidden_.count(j[0].get<std::string>()) && j[1].is_number_integer() &&
                j[1].get<int>() == hidden_.at(j[0].get<std::string>()))
                out.push_back("pair of test epoch and its grade");
            for (const auto& v : j) walk(v, out);
        }
    }

    std::map<std::string, int> hidden_;
    bool weights_allowed_;
    std::set<std::string> weight_texts_;
    std::set<std::string> score_texts_;
    std::vector<int> grade_sequence_;
};

/// Every payload a non-host can obtain for a competition, paired with a label.
inline std::vector<std::pair<std::string, nlohmann::json>> public_payloads(const comp::Competition& c) {
    std::vector<std::pair<std::string, nlohmann::json>> out;
    out.emplace_back("competition/public", comp::competition_json(c, comp::Role::Public));
    out.emplace_back("competition/participant", comp::competition_json(c, comp::Role::Participant));
    out.emplace_back("leaderboard/public", comp::leaderboard_json(c, comp::Role::Public));
    out.emplace_back("leaderboard/participant", comp::leaderboard_json(c, comp::Role::Participant));
    out.emplace_back("manifest/train", comp::train_manifest_json(c));
    out.emplace_back("manifest/test", comp::test_manifest_json(c));
    for (const auto& p : c.participants) {
        out.emplace_back("history/" + p.id, comp::history_json(c, p.id));
        out.emplace_back("participant/" + p.id, comp::participant_json(p));
    }
    for (const auto& s : c.submissions) out.emplace_back("receipt/" + s->id, comp::submission_receipt_json(c, *s));
    return out;
}

}  // namespace testsupport
