#pragma once

// Every JSON payload that leaves the engine is built here from explicit field lists.
// HiddenLabels has no JSON conversion, so hidden grades cannot be serialized by accident.
// Ranking weights and ranking scores are emitted only for the host role.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "neoeeg/competition/leaderboard.hpp"
#include "neoeeg/competition/model.hpp"

namespace neoeeg::competition {

inline nlohmann::json time_json(Timestamp t) {
    if (t == kNever) return nullptr;
    return format_utc(t);
}

inline nlohmann::json metrics_json(const std::map<std::string, double>& scores) {
    nlohmann::json m = nlohmann::json::object();
    for (const auto& name : metrics::metric_names()) {
        auto it = scores.find(name);
        if (it != scores.end()) m[name] = it->second;
    }
    return m;
}

inline nlohmann::json submission_json(const Submission& s, Role role) {
    nlohmann::json j{{"submission_id", s.id},
                     {"participant_id", s.participant_id},
                     {"received_at", format_utc(s.received_at)},
                     {"metrics", metrics_json(s.scores)}};
    if (role == Role::Host) j["ranking_score"] = s.ranking_score;
    return j;
}

inline nlohmann::json participant_json(const Participant& p) {
    return {{"participant_id", p.id},
            {"display_name", p.display_name},
            {"team", p.team},
            {"registered_at", format_utc(p.registered_at)}};
}

/// Registration response; the only payload that ever carries a token.
inline nlohmann::json registration_json(const Participant& p) {
    auto j = participant_json(p);
    j["token"] = p.token;
    return j;
}

inline nlohmann::json competition_json(const Competition& c, Role role) {
    const auto& cfg = c.config;
    nlohmann::json j{{"competition_id", c.id},
                     {"title", cfg.title},
                     {"description", cfg.description},
                     {"opens_at", time_json(cfg.opens_at)},
                     {"closes_at", time_json(cfg.closes_at)},
                     {"daily_limit", cfg.daily_limit},
                     {"train_epochs", cfg.train.size()},
                     {"test_epochs", cfg.hidden.grades.size()},
                     {"test_epoch_ids", c.test_epoch_ids()},
                     {"participants", c.participants.size()},
                     {"submissions", c.submissions.size()},
                     {"ranking_hidden", cfg.ranking.hidden}};
    if (role == Role::Host || !cfg.ranking.hidden) j["ranking_weights"] = cfg.ranking.weights;
    return j;
}

inline nlohmann::json leaderboard_json(const Competition& c, Role role) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : leaderboard(c)) {
        nlohmann::json j{{"rank", e.rank},
                         {"participant_id", e.best->participant_id},
                         {"display_name", e.participant ? e.participant->display_name : std::string{}},
                         {"team", e.participant ? e.participant->team : false},
                         {"submissions", e.submissions},
                         {"best", submission_json(*e.best, role)},
                         {"last", submission_json(*e.last, role)}};
        arr.push_back(std::move(j));
    }
    return arr;
}

/// A participant's submissions in arrival order; exactly one carries best = true.
inline nlohmann::json history_json(const Competition& c, const std::string& pid) {
    const auto best = best_submission(c, pid);
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& s : c.submissions) {
        if (s->participant_id != pid) continue;
        auto j = submission_json(*s, Role::Participant);
        j["best"] = (s == best);
        arr.push_back(std::move(j));
    }
    return arr;
}

namespace detail {

inline std::string epoch_file(const CompetitionConfig& cfg, const std::string& epoch_id) {
    if (cfg.data_dir.empty()) return {};
    for (const char* ext : {".edf", ".csv"}) {
        if (std::filesystem::exists(std::filesystem::path(cfg.data_dir) / (epoch_id + ext))) return epoch_id + ext;
    }
    return {};
}

}  // namespace detail

inline nlohmann::json train_manifest_json(const Competition& c) {
    nlohmann::json epochs = nlohmann::json::array();
    for (const auto& r : c.config.train) {
        nlohmann::json e{{"epoch_id", r.epoch_id}, {"subject_id", r.subject_id}, {"grade", r.grade}};
        if (auto f = detail::epoch_file(c.config, r.epoch_id); !f.empty()) e["file"] = f;
        epochs.push_back(std::move(e));
    }
    return {{"competition_id", c.id}, {"split", "train"}, {"epochs", epochs}};
}

inline nlohmann::json test_manifest_json(const Competition& c) {
    nlohmann::json epochs = nlohmann::json::array();
    for (const auto& id : c.test_epoch_ids()) {
        nlohmann::json e{{"epoch_id", id}};
        if (auto f = detail::epoch_file(c.config, id); !f.empty()) e["file"] = f;
        epochs.push_back(std::move(e));
    }
    return {{"competition_id", c.id}, {"split", "test"}, {"epochs", epochs}};
}

/// Response to an accepted upload.
inline nlohmann::json submission_receipt_json(const Competition& c, const Submission& s) {
    auto j = submission_json(s, Role::Participant);
    int today = 0;
    for (const auto& o : c.submissions)
        if (o->participant_id == s.participant_id && utc_day(o->received_at) == utc_day(s.received_at)) ++today;
    j["remaining_today"] = std::max(0, c.config.daily_limit - today);
    return j;
}

}  // namespace neoeeg::competition
