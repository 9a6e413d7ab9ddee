#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "neoeeg/errors.hpp"
#include "neoeeg/io/labels.hpp"
#include "neoeeg/metrics/metrics.hpp"

namespace neoeeg::competition {

/// Milliseconds since the Unix epoch, UTC.
using Timestamp = std::int64_t;

inline constexpr Timestamp kMsPerDay = 86'400'000;
inline constexpr Timestamp kNever = std::numeric_limits<Timestamp>::max();

inline Timestamp floor_div(Timestamp a, Timestamp b) {
    Timestamp q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

inline std::int64_t utc_day(Timestamp t) { return floor_div(t, kMsPerDay); }

inline Timestamp next_utc_midnight(Timestamp t) { return (utc_day(t) + 1) * kMsPerDay; }

inline Timestamp now_ms() {
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

/// ISO-8601 rendering, e.g. 2024-03-01T12:00:00.000Z.
inline std::string format_utc(Timestamp t) {
    using namespace std::chrono;
    const sys_days day{days{utc_day(t)}};
    const year_month_day ymd{day};
    const Timestamp in_day = t - utc_day(t) * kMsPerDay;
    char buf[96];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lld.%03lldZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<long long>(in_day / 3'600'000), static_cast<long long>(in_day / 60'000 % 60),
                  static_cast<long long>(in_day / 1000 % 60), static_cast<long long>(in_day % 1000));
    return buf;
}

/// Accepts YYYY-MM-DD, YYYY-MM-DDTHH:MM[:SS]Z (the Z is optional; times are always UTC).
inline Timestamp parse_utc(const std::string& s) {
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
    char tail = 0;
    int n = std::sscanf(s.c_str(), "%d-%d-%dT%d:%d:%d%c", &y, &mo, &d, &h, &mi, &sec, &tail);
    if (n < 3 || (n > 3 && n < 5) || (n == 7 && tail != 'Z')) throw ConfigError("cannot parse timestamp '" + s + "'");
    using namespace std::chrono;
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h < 0 || h > 23 || mi < 0 || mi > 59 || sec < 0 || sec > 60)
        throw ConfigError("invalid timestamp '" + s + "'");
    const auto days_since = sys_days{ymd}.time_since_epoch().count();
    return days_since * kMsPerDay + (h * 3600LL + mi * 60LL + sec) * 1000LL;
}

struct RankingConfig {
    std::map<std::string, double> weights{{"wmcc", 1.0}};
    bool hidden = true;

    bool operator==(const RankingConfig&) const = default;
};

/// Hidden test grades. Deliberately has no JSON conversion: only the journal codec may serialize it.
struct HiddenLabels {
    std::map<std::string, int> grades;

    bool operator==(const HiddenLabels&) const = default;
};

struct CompetitionConfig {
    std::string title;
    std::string description;
    std::vector<io::LabelRow> train;
    HiddenLabels hidden;
    RankingConfig ranking;
    Timestamp opens_at = 0;
    Timestamp closes_at = kNever;
    int daily_limit = 5;
    std::string data_dir;

    bool operator==(const CompetitionConfig& o) const {
        auto same_rows = [](const std::vector<io::LabelRow>& a, const std::vector<io::LabelRow>& b) {
            if (a.size() != b.size()) return false;
            for (std::size_t i = 0; i < a.size(); ++i)
                if (a[i].epoch_id != b[i].epoch_id || a[i].subject_id != b[i].subject_id || a[i].grade != b[i].grade)
                    return false;
            return true;
        };
        return title == o.title && description == o.description && same_rows(train, o.train) && hidden == o.hidden &&
               ranking == o.ranking && opens_at == o.opens_at && closes_at == o.closes_at &&
               daily_limit == o.daily_limit && data_dir == o.data_dir;
    }
};

/// Checks the invariants a competition must satisfy before it is created.
inline void validate_config(const CompetitionConfig& c) {
    if (c.title.empty()) throw ConfigError("competition title is empty");
    if (c.hidden.grades.empty()) throw ConfigError("competition has no test epochs");
    if (c.daily_limit < 1) throw ConfigError("daily_limit must be at least 1");
    if (c.closes_at <= c.opens_at) throw ConfigError("submission window closes before it opens");
    metrics::validate_weights(c.ranking.weights);
    for (const auto& [id, g] : c.hidden.grades) {
        if (id.empty()) throw ConfigError("empty test epoch id");
        if (g < 1 || g > 4) throw ConfigError("test grade outside 1-4");
    }
    std::vector<std::string> overlap;
    std::set<std::string> train_ids;
    for (const auto& r : c.train) {
        if (r.grade < 1 || r.grade > 4) throw ConfigError("training grade outside 1-4 for '" + r.epoch_id + "'");
        if (!train_ids.insert(r.epoch_id).second) throw ConfigError("duplicate training epoch '" + r.epoch_id + "'");
        if (c.hidden.grades.count(r.epoch_id)) overlap.push_back(r.epoch_id);
    }
    if (!overlap.empty()) {
        std::string msg = "epoch ids appear in both train and test sets:";
        for (std::size_t i = 0; i < overlap.size() && i < 10; ++i) msg += " " + overlap[i];
        if (overlap.size() > 10) msg += " (+" + std::to_string(overlap.size() - 10) + " more)";
        throw EpochOverlapError(msg);
    }
}

namespace detail {

inline std::vector<io::LabelRow> label_rows_from_json(const nlohmann::json& j, const std::filesystem::path& base) {
    if (j.is_string()) {
        std::filesystem::path p = j.get<std::string>();
        if (p.is_relative()) p = base / p;
        return io::load_label_rows(p);
    }
    if (!j.is_array()) throw ConfigError("label set must be a CSV path or an array of rows");
    std::vector<io::LabelRow> rows;
    for (const auto& r : j) {
        if (!r.is_object() || !r.contains("epoch_id") || !r.contains("grade"))
            throw ConfigError("label row needs epoch_id and grade");
        io::LabelRow row;
        row.epoch_id = r.at("epoch_id").get<std::string>();
        row.subject_id = r.value("subject_id", std::string{});
        row.grade = r.at("grade").get<int>();
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Timestamp timestamp_from_json(const nlohmann::json& j) {
    if (j.is_number_integer()) return j.get<Timestamp>();
    if (j.is_string()) return parse_utc(j.get<std::string>());
    throw ConfigError("timestamps must be ISO-8601 strings or integer milliseconds");
}

}  // namespace detail

/// Reads a competition config. Label sets may be inline arrays or CSV paths relative to base_dir.
inline CompetitionConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
    if (!j.is_object()) throw ConfigError("competition config must be a JSON object");
    CompetitionConfig c;
    try {
        c.title = j.value("title", std::string{});
        c.description = j.value("description", std::string{});
        if (!j.contains("train_labels") || !j.contains("test_labels"))
            throw ConfigError("config needs train_labels and test_labels");
        c.train = detail::label_rows_from_json(j.at("train_labels"), base_dir);
        for (const auto& r : detail::label_rows_from_json(j.at("test_labels"), base_dir)) {
            if (!c.hidden.grades.emplace(r.epoch_id, r.grade).second)
                throw ConfigError("duplicate test epoch '" + r.epoch_id + "'");
        }
        if (j.contains("ranking")) {
            const auto& r = j.at("ranking");
            if (r.contains("weights")) {
                c.ranking.weights.clear();
                for (const auto& [k, v] : r.at("weights").items()) c.ranking.weights[k] = v.get<double>();
            }
            c.ranking.hidden = r.value("hidden", true);
        }
        if (j.contains("window")) {
            const auto& w = j.at("window");
            if (w.contains("opens_at")) c.opens_at = detail::timestamp_from_json(w.at("opens_at"));
            if (w.contains("closes_at")) c.closes_at = detail::timestamp_from_json(w.at("closes_at"));
        }
        c.daily_limit = j.value("daily_limit", 5);
        if (j.contains("data_dir")) {
            std::filesystem::path p = j.at("data_dir").get<std::string>();
            if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
            c.data_dir = p.string();
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed competition config: ") + e.what());
    } catch (const LabelError& e) {
        throw ConfigError(std::string("label file: ") + e.what());
    } catch (const Error& e) {
        if (dynamic_cast<const ConfigError*>(&e)) throw;
        throw ConfigError(e.what());
    }
    validate_config(c);
    return c;
}

inline CompetitionConfig load_config(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("cannot parse " + path.string() + ": " + e.what());
    }
    return config_from_json(j, path.parent_path());
}

struct Participant {
    std::string id;
    std::string display_name;
    std::string token;
    bool team = false;
    Timestamp registered_at = 0;

    bool operator==(const Participant&) const = default;
};

struct SubmissionRow {
    std::string epoch_id;
    int grade = 0;
    double probability = 0;

    bool operator==(const SubmissionRow&) const = default;
};

struct Submission {
    std::string id;
    std::string participant_id;
    Timestamp received_at = 0;
    std::vector<SubmissionRow> rows;
    std::map<std::string, double> scores;
    double ranking_score = 0;

    bool operator==(const Submission&) const = default;
};

struct Competition {
    std::string id;
    CompetitionConfig config;
    Timestamp created_at = 0;
    std::vector<Participant> participants;
    std::vector<std::shared_ptr<const Submission>> submissions;

    std::vector<std::string> test_epoch_ids() const {
        std::vector<std::string> out;
        for (const auto& [id, g] : config.hidden.grades) out.push_back(id);
        return out;
    }

    const Participant* participant(const std::string& pid) const {
        for (const auto& p : participants)
            if (p.id == pid) return &p;
        return nullptr;
    }

    bool operator==(const Competition& o) const {
        if (id != o.id || !(config == o.config) || created_at != o.created_at || participants != o.participants ||
            submissions.size() != o.submissions.size())
            return false;
        for (std::size_t i = 0; i < submissions.size(); ++i)
            if (!(*submissions[i] == *o.submissions[i])) return false;
        return true;
    }
};

/// Whole-engine state. Competitions are shared immutably between snapshots.
struct State {
    std::map<std::string, std::shared_ptr<const Competition>> competitions;
    std::uint64_t next_competition = 1;
    std::uint64_t next_participant = 1;
    std::uint64_t next_submission = 1;
    std::uint64_t seq = 0;

    const Competition* find(const std::string& id) const {
        auto it = competitions.find(id);
        return it == competitions.end() ? nullptr : it->second.get();
    }

    bool operator==(const State& o) const {
        if (next_competition != o.next_competition || next_participant != o.next_participant ||
            next_submission != o.next_submission || seq != o.seq || competitions.size() != o.competitions.size())
            return false;
        for (auto a = competitions.begin(), b = o.competitions.begin(); a != competitions.end(); ++a, ++b)
            if (a->first != b->first || !(*a->second == *b->second)) return false;
        return true;
    }
};

/// 256 random bits as lowercase hex.
inline std::string generate_token() {
    std::random_device rd;
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (int i = 0; i < 8; ++i) {
        std::uint32_t w = rd();
        for (int k = 0; k < 8; ++k) {
            out.push_back(hex[w & 0xF]);
            w >>= 4;
        }
    }
    return out;
}

/// Comparison whose running time depends only on the lengths.
inline bool constant_time_equal(std::string_view a, std::string_view b) {
    volatile unsigned char diff = a.size() == b.size() ? 0 : 1;
    const std::size_t n = std::max(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) {
        unsigned char x = i < a.size() ? static_cast<unsigned char>(a[i]) : 0;
        unsigned char y = i < b.size() ? static_cast<unsigned char>(b[i]) : 0;
        diff = diff | static_cast<unsigned char>(x ^ y);
    }
    return diff == 0;
}

}  // namespace neoeeg::competition
