#pragma once

#include <algorithm>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "neoeeg/competition/journal.hpp"
#include "neoeeg/competition/model.hpp"
#include "neoeeg/competition/submission.hpp"
#include "neoeeg/errors.hpp"
#include "neoeeg/metrics/metrics.hpp"

namespace neoeeg::competition {

/// Scores rows against a competition's hidden labels. Rows must already cover the test set.
inline std::pair<std::map<std::string, double>, double> score_rows(const Competition& c,
                                                                   const std::vector<SubmissionRow>& rows) {
    std::vector<int> truth, pred;
    truth.reserve(rows.size());
    pred.reserve(rows.size());
    for (const auto& r : rows) {
        truth.push_back(c.config.hidden.grades.at(r.epoch_id));
        pred.push_back(r.grade);
    }
    auto scores = metrics::all_metrics(truth, pred);
    const double rank = metrics::leaderboard_score(scores, c.config.ranking.weights);
    return {std::move(scores), rank};
}

namespace detail {

inline void check_rows(const Competition& c, const std::vector<SubmissionRow>& rows) {
    std::vector<LineIssue> issues;
    std::set<std::string> seen;
    for (const auto& r : rows) {
        if (!c.config.hidden.grades.count(r.epoch_id)) issues.push_back({0, "unknown epoch_id '" + r.epoch_id + "'"});
        else if (!seen.insert(r.epoch_id).second) issues.push_back({0, "duplicate row for epoch '" + r.epoch_id + "'"});
        if (r.grade < 1 || r.grade > 4) issues.push_back({0, "grade outside 1-4 for epoch '" + r.epoch_id + "'"});
        if (!(r.probability >= 0.0 && r.probability <= 1.0))
            issues.push_back({0, "probability outside [0, 1] for epoch '" + r.epoch_id + "'"});
    }
    std::size_t missing = 0;
    std::string names;
    for (const auto& [id, g] : c.config.hidden.grades) {
        if (seen.count(id)) continue;
        if (++missing <= 20) names += " " + id;
    }
    if (missing > 0) issues.push_back({0, "missing " + std::to_string(missing) + " epoch(s):" + names});
    if (!issues.empty()) throw ValidationError(std::move(issues));
}

inline Competition& mutable_competition(State& s, const std::string& id) {
    auto it = s.competitions.find(id);
    if (it == s.competitions.end()) throw NotFound("no competition '" + id + "'");
    auto copy = std::make_shared<Competition>(*it->second);
    Competition& ref = *copy;
    it->second = std::move(copy);
    return ref;
}

inline std::string normalized_name(std::string_view name) {
    std::string out;
    for (char ch : io::trim(name)) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    return out;
}

}  // namespace detail

struct ApplyResult {
    std::string id;
    std::shared_ptr<const Submission> submission;
};

/// Applies one journaled command. Deterministic in (state, command); throws without modifying
/// anything observable when the command is rejected.
inline ApplyResult apply_command(State& s, const nlohmann::json& cmd) {
    const std::string op = cmd.at("op").get<std::string>();
    const Timestamp at = cmd.at("at").get<Timestamp>();
    State next = s;
    ApplyResult result;

    if (op == "create") {
        auto c = std::make_shared<Competition>();
        c->config = codec::config_from_json(cmd.at("config"));
        validate_config(c->config);
        c->id = "c" + std::to_string(next.next_competition++);
        c->created_at = at;
        result.id = c->id;
        next.competitions.emplace(c->id, std::move(c));
    } else if (op == "register") {
        Competition& c = detail::mutable_competition(next, cmd.at("competition").get<std::string>());
        const std::string name = io::trim(cmd.at("name").get<std::string>());
        const std::string token = cmd.at("token").get<std::string>();
        if (name.empty()) throw ConfigError("display name is empty");
        if (name.size() > 64) throw ConfigError("display name longer than 64 characters");
        if (!valid_utf8(name)) throw ConfigError("display name is not valid UTF-8");
        if (at >= c.config.closes_at) throw WindowClosed("registration for " + c.id + " has closed");
        const auto key = detail::normalized_name(name);
        for (const auto& p : c.participants)
            if (detail::normalized_name(p.display_name) == key) throw Conflict("display name '" + name + "' is taken");
        for (const auto& [cid, other] : s.competitions)
            for (const auto& p : other->participants)
                if (p.token == token) throw Conflict("token collision");
        Participant p;
        p.id = "p" + std::to_string(next.next_participant++);
        p.display_name = name;
        p.token = token;
        p.team = cmd.value("team", false);
        p.registered_at = at;
        result.id = p.id;
        c.participants.push_back(std::move(p));
    } else if (op == "submit") {
        const std::string cid = cmd.at("competition").get<std::string>();
        const std::string pid = cmd.at("participant").get<std::string>();
        const Competition* current = s.find(cid);
        if (!current) throw NotFound("no competition '" + cid + "'");
        if (!current->participant(pid)) throw NotFound("participant is not registered in " + cid);
        if (at < current->config.opens_at) throw WindowClosed("submission window for " + cid + " has not opened");
        if (at >= current->config.closes_at) throw WindowClosed("submission window for " + cid + " has closed");
        int today = 0;
        for (const auto& x : current->submissions)
            if (x->participant_id == pid && utc_day(x->received_at) == utc_day(at)) ++today;
        if (today >= current->config.daily_limit) throw RateLimited(next_utc_midnight(at) / 1000);

        auto rows = codec::rows_from_json(cmd.at("rows"));
        detail::check_rows(*current, rows);
        std::sort(rows.begin(), rows.end(),
                  [](const SubmissionRow& a, const SubmissionRow& b) { return a.epoch_id < b.epoch_id; });

        auto sub = std::make_shared<Submission>();
        sub->id = "s" + std::to_string(next.next_submission++);
        sub->participant_id = pid;
        sub->received_at = at;
        auto [scores, rank] = score_rows(*current, rows);
        sub->rows = std::move(rows);
        sub->scores = std::move(scores);
        sub->ranking_score = rank;

        Competition& c = detail::mutable_competition(next, cid);
        c.submissions.push_back(sub);
        result.id = sub->id;
        result.submission = std::move(sub);
    } else {
        throw RecoveryError("unknown command '" + op + "'", 0);
    }
    next.seq = s.seq + 1;
    s = std::move(next);
    return result;
}

struct EngineOptions {
    std::filesystem::path data_dir;  // empty: in-memory only
    std::uint64_t snapshot_every = 256;
    bool sync = true;
};

/// The competition state machine. Mutations are serialized under one writer lock and journaled
/// before they become visible; readers take immutable snapshots without waiting for writers.
class Engine {
public:
    explicit Engine(EngineOptions opt = {}) : opt_(std::move(opt)) {
        auto state = std::make_shared<State>();
        if (!opt_.data_dir.empty()) {
            std::filesystem::create_directories(opt_.data_dir);
            *state = recover(opt_.data_dir);
            journal_ = std::make_unique<JournalWriter>(journal_path(opt_.data_dir), opt_.sync);
            snapshot_seq_ = state->seq;
        }
        state_ = std::move(state);
    }

    static std::filesystem::path journal_path(const std::filesystem::path& dir) { return dir / "journal.bin"; }
    static std::filesystem::path snapshot_path(const std::filesystem::path& dir) { return dir / "snapshot.bin"; }

    /// Rebuilds state from a data directory: snapshot first, then the journal records after it.
    /// A torn trailing record is cut off the file.
    static State recover(const std::filesystem::path& dir) {
        State s;
        if (std::filesystem::exists(snapshot_path(dir))) {
            const auto j = decode_snapshot(read_text_file(snapshot_path(dir)));
            try {
                s = codec::state_from_json(j);
            } catch (const nlohmann::json::exception& e) {
                throw RecoveryError(std::string("snapshot content: ") + e.what(), 0);
            }
        }
        const auto jpath = journal_path(dir);
        if (!std::filesystem::exists(jpath)) return s;
        const auto scan = scan_journal(read_text_file(jpath));
        for (const auto& rec : scan.records) {
            std::uint64_t seq = 0;
            try {
                seq = rec.payload.at("seq").get<std::uint64_t>();
            } catch (const nlohmann::json::exception&) {
                throw RecoveryError("record without sequence number", rec.offset);
            }
            if (seq <= s.seq) continue;
            if (seq != s.seq + 1) throw RecoveryError("journal sequence gap", rec.offset);
            try {
                apply_command(s, rec.payload);
            } catch (const RecoveryError&) {
                throw;
            } catch (const std::exception& e) {
                throw RecoveryError(std::string("record does not replay: ") + e.what(), rec.offset);
            }
        }
        if (scan.torn_tail) {
            if (scan.valid_end == 0) std::filesystem::remove(jpath);
            else std::filesystem::resize_file(jpath, scan.valid_end);
        }
        return s;
    }

    std::shared_ptr<const State> snapshot() const {
        std::lock_guard lk(publish_mu_);
        return state_;
    }

    std::string create_competition(const CompetitionConfig& cfg, Timestamp now) {
        validate_config(cfg);
        return mutate({{"op", "create"}, {"at", now}, {"config", codec::config_to_json(cfg)}}).id;
    }

    /// Registers a participant and returns the record, token included. The token is not retrievable later.
    Participant register_participant(const std::string& competition_id, const std::string& display_name, bool team,
                                     Timestamp now) {
        const auto r = mutate({{"op", "register"},
                               {"at", now},
                               {"competition", competition_id},
                               {"name", display_name},
                               {"team", team},
                               {"token", generate_token()}});
        return *snapshot()->find(competition_id)->participant(r.id);
    }

    std::shared_ptr<const Submission> submit(const std::string& competition_id, const std::string& participant_id,
                                             const std::vector<SubmissionRow>& rows, Timestamp now) {
        return mutate({{"op", "submit"},
                       {"at", now},
                       {"competition", competition_id},
                       {"participant", participant_id},
                       {"rows", codec::rows_to_json(rows)}})
            .submission;
    }

    /// Validates CSV bytes against the competition, then submits them.
    std::shared_ptr<const Submission> submit_csv(const std::string& competition_id, const std::string& participant_id,
                                                 std::string_view csv, Timestamp now) {
        const auto snap = snapshot();
        const Competition* c = snap->find(competition_id);
        if (!c) throw NotFound("no competition '" + competition_id + "'");
        return submit(competition_id, participant_id, validate_submission(csv, *c), now);
    }

    /// Finds the participant holding `token` in a competition. Every candidate is compared in constant time.
    std::optional<Participant> authenticate(const std::string& competition_id, std::string_view token) const {
        const auto snap = snapshot();
        const Competition* c = snap->find(competition_id);
        if (!c) return std::nullopt;
        std::optional<Participant> found;
        for (const auto& p : c->participants)
            if (constant_time_equal(p.token, token) && !found) found = p;
        return found;
    }

    /// Writes a snapshot and truncates the journal.
    void checkpoint() {
        std::lock_guard lk(write_mu_);
        write_snapshot_locked();
    }

private:
    ApplyResult mutate(nlohmann::json cmd) {
        std::lock_guard lk(write_mu_);
        State next = *snapshot();
        cmd["seq"] = next.seq + 1;
        auto result = apply_command(next, cmd);
        if (journal_) journal_->append(cmd);
        {
            std::lock_guard plk(publish_mu_);
            state_ = std::make_shared<const State>(std::move(next));
        }
        if (journal_ && opt_.snapshot_every > 0 && state_->seq - snapshot_seq_ >= opt_.snapshot_every)
            write_snapshot_locked();
        return result;
    }

    void write_snapshot_locked() {
        if (!journal_) return;
        const auto s = snapshot();
        atomic_write(snapshot_path(opt_.data_dir), encode_snapshot(codec::state_to_json(*s)));
        journal_->reset();
        snapshot_seq_ = s->seq;
    }

    EngineOptions opt_;
    mutable std::mutex publish_mu_;
    std::mutex write_mu_;
    std::shared_ptr<const State> state_;
    std::unique_ptr<JournalWriter> journal_;
    std::uint64_t snapshot_seq_ = 0;
};

}  // namespace neoeeg::competition
