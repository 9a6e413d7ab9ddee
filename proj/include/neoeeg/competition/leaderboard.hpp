#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "neoeeg/competition/model.hpp"

namespace neoeeg::competition {

enum class Role { Public, Participant, Host };

struct LeaderboardEntry {
    int rank = 0;
    const Participant* participant = nullptr;
    std::shared_ptr<const Submission> best;
    std::shared_ptr<const Submission> last;
    std::size_t submissions = 0;
};

/// Better-than relation between two submissions: higher ranking score, then earlier arrival.
inline bool better_submission(const Submission& a, const Submission& b) {
    if (a.ranking_score != b.ranking_score) return a.ranking_score > b.ranking_score;
    return a.received_at < b.received_at;
}

/// The participant's best submission, or null when they have none.
inline std::shared_ptr<const Submission> best_submission(const Competition& c, const std::string& pid) {
    std::shared_ptr<const Submission> best;
    for (const auto& s : c.submissions)
        if (s->participant_id == pid && (!best || better_submission(*s, *best))) best = s;
    return best;
}

/// Participants with at least one submission, ranked by their best ranking score.
/// Ties go to the earlier best submission; equal timestamps fall back to participant id.
inline std::vector<LeaderboardEntry> leaderboard(const Competition& c) {
    std::map<std::string, LeaderboardEntry> by_pid;
    for (const auto& s : c.submissions) {
        auto& e = by_pid[s->participant_id];
        ++e.submissions;
        if (!e.best || better_submission(*s, *e.best)) e.best = s;
        if (!e.last || s->received_at >= e.last->received_at) e.last = s;
    }
    std::vector<LeaderboardEntry> out;
    for (auto& [pid, e] : by_pid) {
        e.participant = c.participant(pid);
        out.push_back(std::move(e));
    }
    std::sort(out.begin(), out.end(), [](const LeaderboardEntry& a, const LeaderboardEntry& b) {
        if (a.best->ranking_score != b.best->ranking_score) return a.best->ranking_score > b.best->ranking_score;
        if (a.best->received_at != b.best->received_at) return a.best->received_at < b.best->received_at;
        return a.best->participant_id < b.best->participant_id;
    });
    for (std::size_t i = 0; i < out.size(); ++i) out[i].rank = static_cast<int>(i + 1);
    return out;
}

}  // namespace neoeeg::competition
