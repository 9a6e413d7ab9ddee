#include <gtest/gtest.h>

#include <atomic>
#include <fstream>
#include <random>
#include <thread>

#include "neoeeg/competition/engine.hpp"
#include "neoeeg/competition/leaderboard.hpp"
#include "neoeeg/competition/submission.hpp"
#include "neoeeg/competition/views.hpp"
#include "support/competition_fixtures.hpp"

using namespace neoeeg;
using namespace neoeeg::competition;
using testsupport::LeakScanner;
using testsupport::make_config;
using testsupport::TempDir;

namespace {

const Timestamp kDay1 = parse_utc("2024-03-10T09:00:00Z");

struct Started {
    explicit Started(EngineOptions opt) : engine(std::move(opt)) {}
    Engine engine;
    std::string cid;
    CompetitionConfig cfg;
};

std::unique_ptr<Started> start(std::uint64_t seed = 1, EngineOptions opt = {}) {
    std::mt19937_64 rng(seed);
    auto s = std::make_unique<Started>(opt);
    s->cfg = make_config(rng);
    s->cid = s->engine.create_competition(s->cfg, kDay1 - 1000);
    return s;
}

}  // namespace

TEST(UtcTime, FormatParseRoundtrip) {
    const Timestamp t = parse_utc("2024-02-29T23:59:59Z");
    EXPECT_EQ(format_utc(t), "2024-02-29T23:59:59.000Z");
    EXPECT_EQ(parse_utc("1970-01-01"), 0);
    EXPECT_EQ(utc_day(-1), -1);
    EXPECT_EQ(next_utc_midnight(t), parse_utc("2024-03-01T00:00:00Z"));
    EXPECT_THROW(parse_utc("2024-02-30"), ConfigError);
    EXPECT_THROW(parse_utc("yesterday"), ConfigError);
}

TEST(Tokens, RandomLongAndComparedInConstantTime) {
    std::set<std::string> seen;
    for (int i = 0; i < 200; ++i) {
        const auto t = generate_token();
        EXPECT_EQ(t.size(), 64u);
        EXPECT_TRUE(seen.insert(t).second);
    }
    EXPECT_TRUE(constant_time_equal("abc", "abc"));
    EXPECT_FALSE(constant_time_equal("abc", "abd"));
    EXPECT_FALSE(constant_time_equal("abc", "abcd"));
    EXPECT_FALSE(constant_time_equal("", "a"));
}

TEST(CreateCompetition, PublishesTestIdsButNoLabels) {
    auto s = start();
    const auto snap = s->engine.snapshot();
    const Competition& c = *snap->find(s->cid);
    const auto pub = competition_json(c, Role::Public);
    EXPECT_EQ(pub["test_epoch_ids"].size(), 64u);
    EXPECT_EQ(pub["train_epochs"], 105);
    EXPECT_EQ(train_manifest_json(c)["epochs"].size(), 105u);
    const auto test_manifest = test_manifest_json(c);
    EXPECT_EQ(test_manifest["epochs"].size(), 64u);
    for (const auto& e : test_manifest["epochs"]) EXPECT_FALSE(e.contains("grade"));

    LeakScanner scan(c, false);
    EXPECT_TRUE(scan.scan(pub).empty());
    EXPECT_TRUE(scan.scan(test_manifest).empty());
    LeakScanner host_scan(c, true);
    EXPECT_TRUE(host_scan.scan(competition_json(c, Role::Host)).empty());
    EXPECT_TRUE(competition_json(c, Role::Host).contains("ranking_weights"));
    EXPECT_FALSE(pub.contains("ranking_weights"));
}

TEST(CreateCompetition, OverlapAndBadWeightsRejected) {
    std::mt19937_64 rng(2);
    Engine e;
    auto cfg = make_config(rng);
    cfg.train.push_back({cfg.hidden.grades.begin()->first, "s", 2});
    EXPECT_THROW(e.create_competition(cfg, 0), EpochOverlapError);
    try {
        e.create_competition(cfg, 0);
    } catch (const ConfigError& err) {
        EXPECT_NE(std::string(err.what()).find(cfg.hidden.grades.begin()->first), std::string::npos);
    }
    auto bad = make_config(rng);
    bad.ranking.weights = {{"auc", 1.0}};
    EXPECT_THROW(e.create_competition(bad, 0), ConfigError);
    bad.ranking.weights = {{"wmcc", -1.0}};
    EXPECT_THROW(e.create_competition(bad, 0), ConfigError);
    bad.ranking.weights = {{"wmcc", 1.0}};
    bad.daily_limit = 0;
    EXPECT_THROW(e.create_competition(bad, 0), ConfigError);
    EXPECT_TRUE(e.snapshot()->competitions.empty());
}

TEST(CreateCompetition, ConfigFromJsonWithCsvPaths) {
    TempDir dir("cfg");
    std::ofstream(dir.path() / "train.csv") << "epoch_id,subject_id,grade\na,s1,1\nb,s2,3\n";
    std::ofstream(dir.path() / "test.csv") << "epoch_id,subject_id,grade\nc,s3,2\nd,s4,4\n";
    std::ofstream(dir.path() / "comp.json") << R"({"title":"T","train_labels":"train.csv","test_labels":"test.csv",
        "ranking":{"weights":{"wmcc":0.5,"accuracy":0.5}},"window":{"opens_at":"2024-01-01","closes_at":"2024-02-01T12:00:00Z"},
        "daily_limit":3})";
    const auto cfg = load_config(dir.path() / "comp.json");
    EXPECT_EQ(cfg.train.size(), 2u);
    EXPECT_EQ(cfg.hidden.grades.at("d"), 4);
    EXPECT_EQ(cfg.daily_limit, 3);
    EXPECT_EQ(cfg.ranking.weights.size(), 2u);
    EXPECT_EQ(format_utc(cfg.closes_at), "2024-02-01T12:00:00.000Z");

    std::ofstream(dir.path() / "overlap.json") << R"({"title":"T","train_labels":"train.csv","test_labels":"train.csv"})";
    EXPECT_THROW(load_config(dir.path() / "overlap.json"), EpochOverlapError);
}

TEST(ValidateSubmission, CorrectFileAccepted) {
    auto s = start();
    const auto snap = s->engine.snapshot();
    const auto rows = validate_submission(testsupport::rows_csv(testsupport::truth_rows(s->cfg)), *snap->find(s->cid));
    EXPECT_EQ(rows.size(), 64u);
}

TEST(ValidateSubmission, ProblemsReportedWithLines) {
    auto s = start();
    const auto snap = s->engine.snapshot();
    const Competition& c = *snap->find(s->cid);
    auto rows = testsupport::truth_rows(s->cfg);

    auto issues_of = [&](const std::string& csv) {
        try {
            validate_submission(csv, c);
        } catch (const ValidationError& e) {
            return e.issues();
        }
        return std::vector<LineIssue>{};
    };

    auto missing = rows;
    const std::string dropped = missing.back().epoch_id;
    missing.pop_back();
    auto iss = issues_of(testsupport::rows_csv(missing));
    ASSERT_EQ(iss.size(), 1u);
    EXPECT_EQ(iss[0].line, 0u);
    EXPECT_NE(iss[0].message.find(dropped), std::string::npos);

    auto bad_prob = rows;
    bad_prob[4].probability = 1.2;
    iss = issues_of(testsupport::rows_csv(bad_prob));
    ASSERT_EQ(iss.size(), 1u);
    EXPECT_EQ(iss[0].line, 6u);

    auto bad_grade = rows;
    bad_grade[0].grade = 5;
    iss = issues_of(testsupport::rows_csv(bad_grade));
    ASSERT_EQ(iss.size(), 1u);
    EXPECT_EQ(iss[0].line, 2u);

    auto dup = rows;
    dup.push_back(rows[3]);
    iss = issues_of(testsupport::rows_csv(dup));
    ASSERT_EQ(iss.size(), 1u);
    EXPECT_EQ(iss[0].line, 66u);

    iss = issues_of("epoch,grade,prob\n");
    ASSERT_FALSE(iss.empty());
    EXPECT_EQ(iss[0].line, 1u);

    auto extra = testsupport::rows_csv(rows) + "nope,1,0.5\n";
    iss = issues_of(extra);
    ASSERT_EQ(iss.size(), 1u);
    EXPECT_EQ(iss[0].line, 66u);

    iss = issues_of("epoch_id,grade,probability\n\xff\xfe,1,0.5\n");
    ASSERT_EQ(iss.size(), 1u);
    EXPECT_NE(iss[0].message.find("UTF-8"), std::string::npos);

    iss = issues_of("epoch_id,grade,probability\nx,1\n");
    EXPECT_EQ(iss[0].line, 2u);
}

TEST(ValidateSubmission, CrlfAndBomAccepted) {
    auto s = start();
    const auto snap = s->engine.snapshot();
    std::string csv = "\xEF\xBB\xBF" "epoch_id,grade,probability\r\n";
    for (const auto& r : testsupport::truth_rows(s->cfg)) csv += r.epoch_id + "," + std::to_string(r.grade) + ",0.5\r\n";
    EXPECT_EQ(validate_submission(csv, *snap->find(s->cid)).size(), 64u);
}

TEST(Submit, FiveAllowedPerUtcDay) {
    auto s = start();
    const auto p = s->engine.register_participant(s->cid, "alice", false, kDay1);
    std::mt19937_64 rng(3);
    for (int i = 0; i < 5; ++i)
        s->engine.submit(s->cid, p.id, testsupport::noisy_rows(s->cfg, 0.5, rng), kDay1 + i * 3'600'000);
    try {
        s->engine.submit(s->cid, p.id, testsupport::noisy_rows(s->cfg, 0.5, rng), kDay1 + 10 * 3'600'000);
        FAIL() << "sixth submission accepted";
    } catch (const RateLimited& e) {
        EXPECT_EQ(e.next_allowed() * 1000, parse_utc("2024-03-11T00:00:00Z"));
    }
    const Timestamp midnight = parse_utc("2024-03-11T00:00:00Z");
    EXPECT_NO_THROW(s->engine.submit(s->cid, p.id, testsupport::noisy_rows(s->cfg, 0.5, rng), midnight));
    EXPECT_EQ(s->engine.snapshot()->find(s->cid)->submissions.size(), 6u);
}

TEST(Submit, RejectedUploadsDoNotConsumeQuota) {
    auto s = start();
    const auto p = s->engine.register_participant(s->cid, "bob", true, kDay1);
    auto rows = testsupport::truth_rows(s->cfg);
    auto bad = rows;
    bad.pop_back();
    for (int i = 0; i < 10; ++i) EXPECT_THROW(s->engine.submit(s->cid, p.id, bad, kDay1 + i), ValidationError);
    for (int i = 0; i < 5; ++i) EXPECT_NO_THROW(s->engine.submit(s->cid, p.id, rows, kDay1 + 100 + i));
    EXPECT_THROW(s->engine.submit(s->cid, p.id, rows, kDay1 + 200), RateLimited);
}

TEST(Submit, WindowAndRegistrationChecks) {
    auto s = start();
    const auto p = s->engine.register_participant(s->cid, "carol", false, kDay1);
    const auto rows = testsupport::truth_rows(s->cfg);
    EXPECT_THROW(s->engine.submit(s->cid, p.id, rows, s->cfg.opens_at - 1), WindowClosed);
    EXPECT_THROW(s->engine.submit(s->cid, p.id, rows, s->cfg.closes_at), WindowClosed);
    EXPECT_THROW(s->engine.submit(s->cid, "p999", rows, kDay1), NotFound);
    EXPECT_THROW(s->engine.submit("c999", p.id, rows, kDay1), NotFound);
    EXPECT_THROW(s->engine.register_participant(s->cid, "late", false, s->cfg.closes_at), WindowClosed);
}

TEST(Submit, PerfectSubmissionRanksFirst) {
    auto s = start();
    std::mt19937_64 rng(4);
    const auto a = s->engine.register_participant(s->cid, "noisy", false, kDay1);
    const auto b = s->engine.register_participant(s->cid, "oracle", false, kDay1);
    s->engine.submit(s->cid, a.id, testsupport::noisy_rows(s->cfg, 0.7, rng), kDay1);
    const auto sub = s->engine.submit(s->cid, b.id, testsupport::truth_rows(s->cfg), kDay1 + 5);
    EXPECT_DOUBLE_EQ(sub->ranking_score, 1.0);
    for (const auto& [k, v] : sub->scores) EXPECT_DOUBLE_EQ(v, 1.0) << k;
    const auto lb = leaderboard(*s->engine.snapshot()->find(s->cid));
    ASSERT_EQ(lb.size(), 2u);
    EXPECT_EQ(lb[0].participant->id, b.id);
    EXPECT_EQ(lb[0].rank, 1);
}

TEST(Submit, ScoringIsDeterministic) {
    auto s = start();
    std::mt19937_64 rng(5);
    const auto rows = testsupport::noisy_rows(s->cfg, 0.6, rng);
    const Competition& c = *s->engine.snapshot()->find(s->cid);
    const auto a = score_rows(c, rows);
    auto shuffled = rows;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const auto b = score_rows(c, shuffled);
    EXPECT_EQ(a.first, b.first);
    EXPECT_EQ(a.second, b.second);
}

TEST(Leaderboard, OrdersByHiddenScore) {
    Competition c;
    c.participants = {{"p1", "SVM-like", "t1", false, 0}, {"p2", "XGBoost-like", "t2", false, 0}};
    auto add = [&](std::string id, std::string pid, Timestamp at, double wmcc) {
        auto s = std::make_shared<Submission>();
        s->id = std::move(id);
        s->participant_id = std::move(pid);
        s->received_at = at;
        s->scores = {{"wmcc", wmcc}};
        s->ranking_score = metrics::leaderboard_score(s->scores, {{"wmcc", 1.0}});
        c.submissions.push_back(s);
    };
    add("s1", "p1", 10, 0.713);
    add("s2", "p2", 20, 0.761);
    auto lb = leaderboard(c);
    ASSERT_EQ(lb.size(), 2u);
    EXPECT_EQ(lb[0].participant->display_name, "XGBoost-like");
    EXPECT_EQ(lb[1].rank, 2);

    add("s3", "p1", 30, 0.761);
    lb = leaderboard(c);
    EXPECT_EQ(lb[0].participant->id, "p2");
    EXPECT_EQ(lb[1].best->id, "s3");
    EXPECT_EQ(lb[1].last->id, "s3");
}

TEST(Leaderboard, TieGoesToEarlierBestSubmission) {
    auto s = start();
    const auto a = s->engine.register_participant(s->cid, "first", false, kDay1);
    const auto b = s->engine.register_participant(s->cid, "second", false, kDay1);
    const auto rows = testsupport::truth_rows(s->cfg);
    s->engine.submit(s->cid, b.id, rows, kDay1 + 50);
    s->engine.submit(s->cid, a.id, rows, kDay1 + 10);
    const auto lb = leaderboard(*s->engine.snapshot()->find(s->cid));
    ASSERT_EQ(lb.size(), 2u);
    EXPECT_EQ(lb[0].participant->id, a.id);
}

TEST(Leaderboard, ParticipantsWithoutSubmissionsAbsent) {
    auto s = start();
    s->engine.register_participant(s->cid, "idle", false, kDay1);
    EXPECT_TRUE(leaderboard(*s->engine.snapshot()->find(s->cid)).empty());
    EXPECT_TRUE(leaderboard_json(*s->engine.snapshot()->find(s->cid), Role::Public).empty());
}

TEST(Leaderboard, BestNeverDecreasesAndDominatesLast) {
    auto s = start(6);
    std::mt19937_64 rng(6);
    std::vector<Participant> ps;
    for (int i = 0; i < 4; ++i) ps.push_back(s->engine.register_participant(s->cid, "p" + std::to_string(i), false, kDay1));
    std::map<std::string, double> best;
    std::uniform_real_distribution<double> keep(0.2, 1.0);
    Timestamp t = kDay1;
    for (int k = 0; k < 60; ++k) {
        const auto& p = ps[k % 4];
        t += 6 * 3'600'000;
        s->engine.submit(s->cid, p.id, testsupport::noisy_rows(s->cfg, keep(rng), rng), t);
        for (const auto& e : leaderboard(*s->engine.snapshot()->find(s->cid))) {
            const auto pid = e.participant->id;
            if (best.count(pid)) {
                EXPECT_GE(e.best->ranking_score, best[pid]);
            }
            best[pid] = e.best->ranking_score;
            EXPECT_GE(e.best->ranking_score, e.last->ranking_score);
        }
    }
    const auto lb = leaderboard(*s->engine.snapshot()->find(s->cid));
    for (std::size_t i = 1; i < lb.size(); ++i) EXPECT_GE(lb[i - 1].best->ranking_score, lb[i].best->ranking_score);
}

TEST(Views, HostSeesWeightsPublicDoesNot) {
    auto s = start();
    const auto p = s->engine.register_participant(s->cid, "dana", false, kDay1);
    s->engine.submit(s->cid, p.id, testsupport::truth_rows(s->cfg), kDay1);
    const Competition& c = *s->engine.snapshot()->find(s->cid);
    const auto host = leaderboard_json(c, Role::Host);
    const auto pub = leaderboard_json(c, Role::Public);
    EXPECT_TRUE(host[0]["best"].contains("ranking_score"));
    EXPECT_FALSE(pub[0]["best"].contains("ranking_score"));
    for (const auto& m : {"wmcc", "accuracy", "f1", "precision", "recall"}) EXPECT_TRUE(pub[0]["best"]["metrics"].contains(m));
    EXPECT_FALSE(participant_json(p).contains("token"));
    EXPECT_TRUE(registration_json(p).contains("token"));
}

TEST(Views, HistoryHasExactlyOneBest) {
    auto s = start();
    std::mt19937_64 rng(7);
    const auto p = s->engine.register_participant(s->cid, "erin", false, kDay1);
    const auto q = s->engine.register_participant(s->cid, "frank", false, kDay1);
    for (int i = 0; i < 3; ++i) s->engine.submit(s->cid, p.id, testsupport::noisy_rows(s->cfg, 0.5, rng), kDay1 + i);
    s->engine.submit(s->cid, q.id, testsupport::noisy_rows(s->cfg, 0.5, rng), kDay1 + 9);
    const auto h = history_json(*s->engine.snapshot()->find(s->cid), p.id);
    ASSERT_EQ(h.size(), 3u);
    int best = 0;
    for (const auto& r : h) {
        best += r["best"].get<bool>();
        EXPECT_EQ(r["participant_id"], p.id);
    }
    EXPECT_EQ(best, 1);
}

TEST(Auth, TokenIdentifiesParticipant) {
    auto s = start();
    const auto p = s->engine.register_participant(s->cid, "gus", false, kDay1);
    const auto q = s->engine.register_participant(s->cid, "hana", false, kDay1);
    EXPECT_EQ(s->engine.authenticate(s->cid, p.token)->id, p.id);
    EXPECT_EQ(s->engine.authenticate(s->cid, q.token)->id, q.id);
    EXPECT_FALSE(s->engine.authenticate(s->cid, "nope").has_value());
    EXPECT_FALSE(s->engine.authenticate("c999", p.token).has_value());
    EXPECT_THROW(s->engine.register_participant(s->cid, " GUS ", false, kDay1), Conflict);
}

TEST(Journal, RestartReproducesLeaderboard) {
    TempDir dir("journal_restart");
    std::mt19937_64 rng(8);
    std::string before;
    State state_before;
    std::string cid;
    {
        Engine e({dir.path(), 256, true});
        cid = e.create_competition(make_config(rng), kDay1 - 1);
        const auto cfg = e.snapshot()->find(cid)->config;
        const auto p = e.register_participant(cid, "ivan", false, kDay1);
        for (int i = 0; i < 3; ++i) e.submit(cid, p.id, testsupport::noisy_rows(cfg, 0.6, rng), kDay1 + i);
        before = leaderboard_json(*e.snapshot()->find(cid), Role::Host).dump();
        state_before = *e.snapshot();
    }
    Engine again({dir.path(), 256, true});
    EXPECT_EQ(leaderboard_json(*again.snapshot()->find(cid), Role::Host).dump(), before);
    EXPECT_TRUE(*again.snapshot() == state_before);
}

TEST(Journal, TruncatedFinalRecordIsDropped) {
    TempDir dir("journal_torn");
    std::mt19937_64 rng(9);
    State after_two;
    {
        Engine e({dir.path(), 0, true});
        const auto cid = e.create_competition(make_config(rng), kDay1 - 1);
        e.register_participant(cid, "june", false, kDay1);
        after_two = *e.snapshot();
        e.register_participant(cid, "kay", false, kDay1);
    }
    const auto path = Engine::journal_path(dir.path());
    const auto size = std::filesystem::file_size(path);
    for (std::uintmax_t cut : {1u, 5u, 9u, 40u}) {
        TempDir copy("journal_torn_copy");
        std::filesystem::copy_file(path, Engine::journal_path(copy.path()));
        std::filesystem::resize_file(Engine::journal_path(copy.path()), size - cut);
        Engine e({copy.path(), 0, true});
        EXPECT_TRUE(*e.snapshot() == after_two) << "cut " << cut;
        EXPECT_NO_THROW(e.register_participant("c1", "kay2", false, kDay1));
        Engine reopened({copy.path(), 0, true});
        EXPECT_EQ(reopened.snapshot()->find("c1")->participants.size(), 2u);
    }
}

TEST(Journal, CorruptInteriorRecordReportsOffset) {
    TempDir dir("journal_corrupt");
    std::mt19937_64 rng(10);
    {
        Engine e({dir.path(), 0, true});
        const auto cid = e.create_competition(make_config(rng), kDay1 - 1);
        e.register_participant(cid, "lee", false, kDay1);
        e.register_participant(cid, "mo", false, kDay1);
    }
    const auto path = Engine::journal_path(dir.path());
    const auto bytes = read_text_file(path);
    const auto scan = scan_journal(bytes);
    ASSERT_EQ(scan.records.size(), 3u);
    const auto target = scan.records[1].offset;
    std::string damaged = bytes;
    damaged[target + 20] ^= 0x5A;
    atomic_write(path, damaged);
    try {
        Engine e({dir.path(), 0, true});
        FAIL() << "corruption not detected";
    } catch (const RecoveryError& err) {
        EXPECT_EQ(err.offset(), target);
    }
}

TEST(Journal, BadMagicRejected) {
    EXPECT_THROW(scan_journal("NOTAJRNL"), RecoveryError);
    EXPECT_TRUE(scan_journal("NEOJ").torn_tail);
    EXPECT_TRUE(scan_journal("").records.empty());
}

namespace {

// Drives an engine with a random mix of accepted and rejected operations.
void random_ops(Engine& e, std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<std::string> comps;
    std::map<std::string, std::vector<std::string>> parts;
    Timestamp t = parse_utc("2024-03-01T00:00:00Z");
    int made = 0;
    for (int i = 0; i < n; ++i) {
        t += static_cast<Timestamp>(u(rng) * 4 * 3'600'000);
        const double r = u(rng);
        try {
            if (comps.empty() || r < 0.05) {
                auto cfg = make_config(rng, 20, 16, "k" + std::to_string(made++) + "_");
                if (u(rng) < 0.5) cfg.ranking.weights = {{"wmcc", u(rng)}, {"kappa", u(rng)}};
                if (u(rng) < 0.1) cfg.train.push_back({cfg.hidden.grades.begin()->first, "x", 1});
                comps.push_back(e.create_competition(cfg, t));
            } else if (r < 0.25) {
                const auto& cid = comps[rng() % comps.size()];
                const std::string name = "user" + std::to_string(rng() % 40);
                parts[cid].push_back(e.register_participant(cid, name, u(rng) < 0.3, t).id);
            } else {
                const auto& cid = comps[rng() % comps.size()];
                if (parts[cid].empty()) continue;
                const auto& pid = parts[cid][rng() % parts[cid].size()];
                const auto& cfg = e.snapshot()->find(cid)->config;
                auto rows = testsupport::noisy_rows(cfg, u(rng), rng);
                if (u(rng) < 0.05) rows.pop_back();
                e.submit(cid, pid, rows, t);
            }
        } catch (const Error&) {
        }
    }
}

}  // namespace

TEST(Journal, ThousandRandomOperationsReplayExactly) {
    for (std::uint64_t snap_every : {0ull, 37ull}) {
        TempDir dir("journal_random");
        std::mt19937_64 rng(11 + snap_every);
        State expected;
        {
            Engine e({dir.path(), snap_every, false});
            random_ops(e, rng, 1000);
            expected = *e.snapshot();
        }
        EXPECT_GT(expected.seq, 500u);
        Engine again({dir.path(), snap_every, false});
        EXPECT_TRUE(*again.snapshot() == expected) << "snapshot_every " << snap_every;
        EXPECT_EQ(codec::state_to_json(*again.snapshot()), codec::state_to_json(expected));
    }
}

TEST(Concurrency, ParallelUploadsNeverExceedDailyLimit) {
    auto s = start(12);
    std::vector<Participant> ps;
    for (int i = 0; i < 4; ++i) ps.push_back(s->engine.register_participant(s->cid, "racer" + std::to_string(i), false, kDay1));
    const auto csv = testsupport::rows_csv(testsupport::truth_rows(s->cfg));
    std::atomic<int> accepted{0}, limited{0};
    std::vector<std::thread> threads;
    for (int k = 0; k < 100; ++k) {
        threads.emplace_back([&, k] {
            try {
                s->engine.submit_csv(s->cid, ps[k % 4].id, csv, kDay1 + k);
                ++accepted;
            } catch (const RateLimited&) {
                ++limited;
            }
        });
    }
    for (auto& t : threads) t.join();
    EXPECT_EQ(accepted.load(), 20);
    EXPECT_EQ(limited.load(), 80);
    std::map<std::string, int> per;
    for (const auto& sub : s->engine.snapshot()->find(s->cid)->submissions) ++per[sub->participant_id];
    for (const auto& [pid, n] : per) EXPECT_EQ(n, 5);
}

TEST(Confinement, RandomStatesLeakNothing) {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        std::mt19937_64 rng(100 + seed);
        Engine e;
        random_ops(e, rng, 150);
        for (const auto& [cid, c] : e.snapshot()->competitions) {
            LeakScanner scan(*c, c->config.ranking.hidden == false);
            for (const auto& [what, payload] : testsupport::public_payloads(*c)) {
                const auto leaks = scan.scan(payload);
                EXPECT_TRUE(leaks.empty()) << what << ": " << (leaks.empty() ? "" : leaks[0]);
            }
            auto rows = testsupport::truth_rows(c->config);
            rows.pop_back();
            rows[0].grade = 9;
            try {
                validate_submission(testsupport::rows_csv(rows), *c);
            } catch (const ValidationError& err) {
                EXPECT_TRUE(scan.scan_message(err.what()).empty());
                for (const auto& i : err.issues()) EXPECT_TRUE(scan.scan_message(i.message).empty()) << i.message;
            }
        }
    }
}

TEST(Confinement, ScannerFlagsPlantedLeaks) {
    auto s = start();
    const Competition& c = *s->engine.snapshot()->find(s->cid);
    LeakScanner scan(c, false);
    const auto& [id, g] = *c.config.hidden.grades.begin();
    EXPECT_FALSE(scan.scan({{"epochs", {{{"epoch_id", id}, {"grade", g}}}}}).empty());
    EXPECT_FALSE(scan.scan({{id, g}}).empty());
    EXPECT_FALSE(scan.scan({{"ranking_weights", {{"wmcc", 1}}}}).empty());
    std::vector<int> seq;
    for (const auto& [k, v] : c.config.hidden.grades) seq.push_back(v);
    EXPECT_FALSE(scan.scan({{"x", seq}}).empty());
    EXPECT_FALSE(scan.scan_message("epoch " + id + "," + std::to_string(g)).empty());
}
