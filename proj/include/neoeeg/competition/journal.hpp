#pragma once

#include <cerrno>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <fcntl.h>
#include <unistd.h>
#include <zlib.h>

#include <json.hpp>

#include "neoeeg/competition/model.hpp"
#include "neoeeg/errors.hpp"
#include "neoeeg/util.hpp"

namespace neoeeg::competition {

// On-disk layout, little endian:
//   file   := magic[7] version:u8 record*
//   record := length:u32 crc32:u32 body[length]
//   body   := record_version:u8 json-text
// The journal uses magic "NEOJRNL"; a snapshot file uses "NEOSNAP" and holds exactly one record.

inline constexpr std::string_view kJournalMagic = "NEOJRNL";
inline constexpr std::string_view kSnapshotMagic = "NEOSNAP";
inline constexpr std::uint8_t kFileVersion = 1;
inline constexpr std::uint8_t kRecordVersion = 1;
inline constexpr std::uint32_t kMaxRecordBytes = 256u << 20;

namespace codec {

inline nlohmann::json config_to_json(const CompetitionConfig& c) {
    nlohmann::json train = nlohmann::json::array();
    for (const auto& r : c.train) train.push_back({r.epoch_id, r.subject_id, r.grade});
    nlohmann::json hidden = nlohmann::json::object();
    for (const auto& [id, g] : c.hidden.grades) hidden[id] = g;
    return {{"title", c.title},
            {"description", c.description},
            {"train", train},
            {"hidden", hidden},
            {"ranking", {{"weights", c.ranking.weights}, {"hidden", c.ranking.hidden}}},
            {"opens_at", c.opens_at},
            {"closes_at", c.closes_at},
            {"daily_limit", c.daily_limit},
            {"data_dir", c.data_dir}};
}

inline CompetitionConfig config_from_json(const nlohmann::json& j) {
    CompetitionConfig c;
    c.title = j.at("title").get<std::string>();
    c.description = j.at("description").get<std::string>();
    for (const auto& r : j.at("train"))
        c.train.push_back({r.at(0).get<std::string>(), r.at(1).get<std::string>(), r.at(2).get<int>()});
    for (const auto& [id, g] : j.at("hidden").items()) c.hidden.grades[id] = g.get<int>();
    c.ranking.weights = j.at("ranking").at("weights").get<std::map<std::string, double>>();
    c.ranking.hidden = j.at("ranking").at("hidden").get<bool>();
    c.opens_at = j.at("opens_at").get<Timestamp>();
    c.closes_at = j.at("closes_at").get<Timestamp>();
    c.daily_limit = j.at("daily_limit").get<int>();
    c.data_dir = j.at("data_dir").get<std::string>();
    return c;
}

inline nlohmann::json rows_to_json(const std::vector<SubmissionRow>& rows) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& r : rows) a.push_back({r.epoch_id, r.grade, r.probability});
    return a;
}

inline std::vector<SubmissionRow> rows_from_json(const nlohmann::json& a) {
    std::vector<SubmissionRow> rows;
    for (const auto& r : a) rows.push_back({r.at(0).get<std::string>(), r.at(1).get<int>(), r.at(2).get<double>()});
    return rows;
}

inline nlohmann::json state_to_json(const State& s) {
    nlohmann::json comps = nlohmann::json::array();
    for (const auto& [id, c] : s.competitions) {
        nlohmann::json parts = nlohmann::json::array();
        for (const auto& p : c->participants)
            parts.push_back({{"id", p.id}, {"name", p.display_name}, {"token", p.token}, {"team", p.team},
                             {"at", p.registered_at}});
        nlohmann::json subs = nlohmann::json::array();
        for (const auto& x : c->submissions)
            subs.push_back({{"id", x->id},
                            {"participant", x->participant_id},
                            {"at", x->received_at},
                            {"rows", rows_to_json(x->rows)},
                            {"scores", x->scores},
                            {"ranking_score", x->ranking_score}});
        comps.push_back({{"id", c->id},
                         {"created_at", c->created_at},
                         {"config", config_to_json(c->config)},
                         {"participants", parts},
                         {"submissions", subs}});
    }
    return {{"seq", s.seq},
            {"next_competition", s.next_competition},
            {"next_participant", s.next_participant},
            {"next_submission", s.next_submission},
            {"competitions", comps}};
}

inline State state_from_json(const nlohmann::json& j) {
    State s;
    s.seq = j.at("seq").get<std::uint64_t>();
    s.next_competition = j.at("next_competition").get<std::uint64_t>();
    s.next_participant = j.at("next_participant").get<std::uint64_t>();
    s.next_submission = j.at("next_submission").get<std::uint64_t>();
    for (const auto& cj : j.at("competitions")) {
        auto c = std::make_shared<Competition>();
        c->id = cj.at("id").get<std::string>();
        c->created_at = cj.at("created_at").get<Timestamp>();
        c->config = config_from_json(cj.at("config"));
        for (const auto& p : cj.at("participants"))
            c->participants.push_back({p.at("id").get<std::string>(), p.at("name").get<std::string>(),
                                       p.at("token").get<std::string>(), p.at("team").get<bool>(),
                                       p.at("at").get<Timestamp>()});
        for (const auto& x : cj.at("submissions")) {
            auto sub = std::make_shared<Submission>();
            sub->id = x.at("id").get<std::string>();
            sub->participant_id = x.at("participant").get<std::string>();
            sub->received_at = x.at("at").get<Timestamp>();
            sub->rows = rows_from_json(x.at("rows"));
            sub->scores = x.at("scores").get<std::map<std::string, double>>();
            sub->ranking_score = x.at("ranking_score").get<double>();
            c->submissions.push_back(std::move(sub));
        }
        s.competitions.emplace(c->id, std::move(c));
    }
    return s;
}

}  // namespace codec

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline std::uint32_t get_u32(std::string_view s, std::size_t off) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(s[off + i])) << (8 * i);
    return v;
}

inline std::uint32_t crc(std::string_view body) {
    return static_cast<std::uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef*>(body.data()), static_cast<uInt>(body.size())));
}

inline std::string file_header(std::string_view magic) {
    std::string h(magic);
    h.push_back(static_cast<char>(kFileVersion));
    return h;
}

}  // namespace detail

inline std::string encode_record(const nlohmann::json& payload) {
    std::string body(1, static_cast<char>(kRecordVersion));
    body += payload.dump();
    std::string out;
    detail::put_u32(out, static_cast<std::uint32_t>(body.size()));
    detail::put_u32(out, detail::crc(body));
    out += body;
    return out;
}

struct JournalRecord {
    std::uint64_t offset = 0;
    nlohmann::json payload;
};

struct JournalScan {
    std::vector<JournalRecord> records;
    std::uint64_t valid_end = 0;  // bytes of intact prefix, header included
    bool torn_tail = false;
};

/// Decodes a journal image. A damaged final record is reported as a torn tail;
/// damage anywhere before it raises RecoveryError with the record's offset.
inline JournalScan scan_journal(std::string_view data) {
    JournalScan scan;
    const std::string header = detail::file_header(kJournalMagic);
    if (data.size() < header.size()) {
        if (data != std::string_view(header).substr(0, data.size())) throw RecoveryError("bad journal magic", 0);
        scan.torn_tail = !data.empty();
        return scan;
    }
    if (data.substr(0, kJournalMagic.size()) != kJournalMagic) throw RecoveryError("bad journal magic", 0);
    if (static_cast<std::uint8_t>(data[kJournalMagic.size()]) != kFileVersion)
        throw RecoveryError("unsupported journal version", kJournalMagic.size());

    std::size_t off = header.size();
    scan.valid_end = off;
    while (off < data.size()) {
        if (data.size() - off < 8) {
            scan.torn_tail = true;
            break;
        }
        const std::uint32_t len = detail::get_u32(data, off);
        const std::uint32_t sum = detail::get_u32(data, off + 4);
        if (len == 0 || len > kMaxRecordBytes) throw RecoveryError("implausible record length", off);
        if (len > data.size() - off - 8) {
            scan.torn_tail = true;
            break;
        }
        const std::string_view body = data.substr(off + 8, len);
        const bool last = off + 8 + len == data.size();
        if (detail::crc(body) != sum) {
            if (last) {
                scan.torn_tail = true;
                break;
            }
            throw RecoveryError("record checksum mismatch", off);
        }
        if (static_cast<std::uint8_t>(body[0]) != kRecordVersion) throw RecoveryError("unsupported record version", off);
        nlohmann::json payload = nlohmann::json::parse(body.substr(1), nullptr, false);
        if (payload.is_discarded()) throw RecoveryError("record is not valid JSON", off);
        scan.records.push_back({off, std::move(payload)});
        off += 8 + len;
        scan.valid_end = off;
    }
    return scan;
}

inline std::string encode_snapshot(const nlohmann::json& state) {
    return detail::file_header(kSnapshotMagic) + encode_record(state);
}

inline nlohmann::json decode_snapshot(std::string_view data) {
    const std::string header = detail::file_header(kSnapshotMagic);
    if (data.size() < header.size() + 8 || data.substr(0, header.size()) != header)
        throw RecoveryError("bad snapshot header", 0);
    const std::size_t off = header.size();
    const std::uint32_t len = detail::get_u32(data, off);
    if (len == 0 || len != data.size() - off - 8) throw RecoveryError("snapshot length mismatch", off);
    const std::string_view body = data.substr(off + 8);
    if (detail::crc(body) != detail::get_u32(data, off + 4)) throw RecoveryError("snapshot checksum mismatch", off);
    if (static_cast<std::uint8_t>(body[0]) != kRecordVersion) throw RecoveryError("unsupported snapshot version", off);
    auto j = nlohmann::json::parse(body.substr(1), nullptr, false);
    if (j.is_discarded()) throw RecoveryError("snapshot is not valid JSON", off);
    return j;
}

/// Append-only journal file. Each append is flushed, and optionally fsynced, before returning.
class JournalWriter {
public:
    JournalWriter(std::filesystem::path path, bool sync) : path_(std::move(path)), sync_(sync) { open(); }
    ~JournalWriter() { close(); }
    JournalWriter(const JournalWriter&) = delete;
    JournalWriter& operator=(const JournalWriter&) = delete;

    void append(const nlohmann::json& payload) { write_all(encode_record(payload)); }

    /// Replaces the file with an empty journal.
    void reset() {
        close();
        atomic_write(path_, detail::file_header(kJournalMagic));
        open();
    }

    const std::filesystem::path& path() const { return path_; }

private:
    void open() {
        if (!std::filesystem::exists(path_) || std::filesystem::file_size(path_) == 0)
            atomic_write(path_, detail::file_header(kJournalMagic));
        fd_ = ::open(path_.c_str(), O_WRONLY | O_APPEND | O_CLOEXEC);
        if (fd_ < 0) throw Error("cannot open journal " + path_.string());
    }

    void close() {
        if (fd_ >= 0) ::close(fd_);
        fd_ = -1;
    }

    void write_all(const std::string& bytes) {
        const off_t start = ::lseek(fd_, 0, SEEK_END);
        std::size_t done = 0;
        while (done < bytes.size()) {
            const auto n = ::write(fd_, bytes.data() + done, bytes.size() - done);
            if (n < 0) {
                if (errno == EINTR) continue;
                const std::string why = std::strerror(errno);
                if (start >= 0) (void)!::ftruncate(fd_, start);
                throw Error("journal write failed: " + why);
            }
            done += static_cast<std::size_t>(n);
        }
        if (sync_ && ::fdatasync(fd_) != 0) throw Error("journal sync failed: " + std::string(std::strerror(errno)));
    }

    std::filesystem::path path_;
    bool sync_;
    int fd_ = -1;
};

}  // namespace neoeeg::competition
