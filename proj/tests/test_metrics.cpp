#include <gtest/gtest.h>

#include <random>

#include "neoeeg/metrics/metrics.hpp"

using namespace neoeeg;
using namespace neoeeg::metrics;

namespace {

// R_K straight from its covariance definition on a dense matrix.
double rk_oracle(const std::vector<std::vector<double>>& c) {
    const std::size_t k = c.size();
    double s = 0;
    std::vector<double> t(k, 0), p(k, 0);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) {
            s += c[i][j];
            t[i] += c[i][j];
            p[j] += c[i][j];
        }
    double trace = 0;
    for (std::size_t i = 0; i < k; ++i) trace += c[i][i];
    double cov_xy = trace * s, cov_xx = s * s, cov_yy = s * s;
    for (std::size_t i = 0; i < k; ++i) {
        cov_xy -= p[i] * t[i];
        cov_xx -= p[i] * p[i];
        cov_yy -= t[i] * t[i];
    }
    if (cov_xx * cov_yy == 0) return 0.0;
    return cov_xy / std::sqrt(cov_xx * cov_yy);
}

std::vector<std::vector<double>> weighted_oracle(const std::vector<int>& a, const std::vector<int>& b) {
    const double w[4][4] = {{1, 1, 2, 3}, {1, 1, 1, 2}, {2, 1, 1, 1}, {3, 2, 1, 1}};
    std::vector<std::vector<double>> c(4, std::vector<double>(4, 0));
    for (std::size_t i = 0; i < a.size(); ++i) c[a[i] - 1][b[i] - 1] += w[a[i] - 1][b[i] - 1];
    return c;
}

std::vector<int> random_grades(std::size_t n, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> g(1, 4);
    std::vector<int> v(n);
    for (auto& x : v) x = g(rng);
    return v;
}

std::vector<int> noisy_copy(const std::vector<int>& truth, double flip, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> g(1, 4);
    auto out = truth;
    for (auto& v : out)
        if (u(rng) < flip) v = g(rng);
    return out;
}

}  // namespace

TEST(Confusion, IdentityDiagonal) {
    const std::vector<int> y{1, 2, 3, 4};
    const auto cm = confusion(y, y);
    for (int i = 1; i <= 4; ++i)
        for (int j = 1; j <= 4; ++j) EXPECT_DOUBLE_EQ(cm.at(i, j), i == j ? 1.0 : 0.0);
}

TEST(Confusion, SingleCorner) {
    const auto cm = confusion(std::vector<int>{1}, std::vector<int>{4});
    EXPECT_DOUBLE_EQ(cm.at(1, 4), 1.0);
    EXPECT_DOUBLE_EQ(cm.total(), 1.0);
}

TEST(Confusion, RowSumsCountTruth) {
    std::mt19937_64 rng(1);
    const auto a = random_grades(1000, rng), b = random_grades(1000, rng);
    const auto cm = confusion(a, b);
    for (int i = 1; i <= 4; ++i) {
        double row = 0;
        for (int j = 1; j <= 4; ++j) row += cm.at(i, j);
        EXPECT_DOUBLE_EQ(row, static_cast<double>(std::count(a.begin(), a.end(), i)));
    }
}

TEST(Confusion, Errors) {
    EXPECT_THROW(confusion(std::vector<int>{1, 2}, std::vector<int>{1}), MetricError);
    EXPECT_THROW(confusion(std::vector<int>{1, 5}, std::vector<int>{1, 2}), MetricError);
    EXPECT_THROW(confusion(std::vector<int>{0}, std::vector<int>{1}), MetricError);
}

TEST(WeightedCm, WeightsAndCells) {
    const double expected[4][4] = {{1, 1, 2, 3}, {1, 1, 1, 2}, {2, 1, 1, 1}, {3, 2, 1, 1}};
    for (int i = 1; i <= 4; ++i)
        for (int j = 1; j <= 4; ++j) EXPECT_DOUBLE_EQ(weight(i, j), expected[i - 1][j - 1]);
    EXPECT_DOUBLE_EQ(weighted_cm(confusion(std::vector<int>{1}, std::vector<int>{4})).at(1, 4), 3.0);
    const auto adjacent = confusion(std::vector<int>{1, 2, 3, 4, 2}, std::vector<int>{2, 3, 4, 3, 1});
    EXPECT_EQ(weighted_cm(adjacent), adjacent);
}

TEST(Mcc, PerfectAndDegenerate) {
    const std::vector<int> y{1, 2, 3, 4, 1};
    EXPECT_DOUBLE_EQ(mcc(confusion(y, y)), 1.0);
    bool degenerate = false;
    EXPECT_DOUBLE_EQ(mcc(confusion(y, std::vector<int>(5, 2)), &degenerate), 0.0);
    EXPECT_TRUE(degenerate);
}

TEST(Mcc, WorkedExample) {
    const std::vector<int> t{1, 1, 2, 3, 4}, p{1, 4, 2, 3, 4};
    EXPECT_NEAR(mcc(confusion(t, p)), 14.0 / 18.0, 1e-12);
    EXPECT_NEAR(weighted_mcc(t, p), 0.6, 1e-12);
    EXPECT_NEAR(weighted_mcc(t, p), rk_oracle(weighted_oracle(t, p)), 1e-12);
    EXPECT_LT(weighted_mcc(t, p), mcc(confusion(t, p)));
}

TEST(Mcc, RandomAgreesWithOracle) {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 500; ++trial) {
        const auto a = random_grades(3 + trial % 40, rng), b = noisy_copy(a, 0.5, rng);
        EXPECT_NEAR(weighted_mcc(a, b), rk_oracle(weighted_oracle(a, b)), 1e-12);
        const auto cm = confusion(a, b);
        std::vector<std::vector<double>> dense(4, std::vector<double>(4));
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) dense[i][j] = cm.counts[i][j];
        EXPECT_NEAR(mcc(cm), rk_oracle(dense), 1e-12);
    }
}

TEST(Mcc, AdjacentErrorsLeaveWeightedEqual) {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> step(-1, 1);
    for (int trial = 0; trial < 300; ++trial) {
        auto a = random_grades(12, rng), b = a;
        for (auto& v : b) v = std::clamp(v + step(rng), 1, 4);
        EXPECT_EQ(weighted_mcc(a, b), mcc(confusion(a, b)));
    }
}

TEST(Mcc, RelabelingInvariance) {
    std::mt19937_64 rng(4);
    const int perm[5] = {0, 3, 1, 4, 2};
    const int reverse[5] = {0, 4, 3, 2, 1};
    for (int trial = 0; trial < 200; ++trial) {
        const auto a = random_grades(20, rng), b = noisy_copy(a, 0.6, rng);
        auto pa = a, pb = b, ra = a, rb = b;
        for (auto& v : pa) v = perm[v];
        for (auto& v : pb) v = perm[v];
        for (auto& v : ra) v = reverse[v];
        for (auto& v : rb) v = reverse[v];
        EXPECT_NEAR(mcc(confusion(a, b)), mcc(confusion(pa, pb)), 1e-12);
        // reversal keeps |i - j| and therefore the weights
        EXPECT_NEAR(weighted_mcc(a, b), weighted_mcc(ra, rb), 1e-12);
    }
}

TEST(Mcc, BoundedOnRandomInputs) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 500; ++trial) {
        const auto a = random_grades(1 + trial % 30, rng), b = random_grades(a.size(), rng);
        const double w = weighted_mcc(a, b), m = mcc(confusion(a, b));
        EXPECT_GE(w, -1.0 - 1e-12);
        EXPECT_LE(w, 1.0 + 1e-12);
        EXPECT_GE(m, -1.0 - 1e-12);
        EXPECT_LE(m, 1.0 + 1e-12);
    }
}

TEST(Prf, Perfect) {
    const std::vector<int> y{1, 2, 3, 4, 4};
    const auto r = prf_accuracy(confusion(y, y));
    EXPECT_DOUBLE_EQ(r.accuracy, 1.0);
    EXPECT_DOUBLE_EQ(r.precision, 1.0);
    EXPECT_DOUBLE_EQ(r.recall, 1.0);
    EXPECT_DOUBLE_EQ(r.f1, 1.0);
}

TEST(Prf, SingleClassPredicted) {
    const std::vector<int> t{1, 2, 3, 4, 1, 2, 3, 4};
    const auto r = prf_accuracy(confusion(t, std::vector<int>(8, 2)));
    EXPECT_DOUBLE_EQ(r.accuracy, 0.25);
    EXPECT_DOUBLE_EQ(r.recall, 0.25);
    EXPECT_TRUE(r.absent_classes.empty());
}

TEST(Prf, TwoClassTabulation) {
    const auto r = prf_accuracy(confusion(std::vector<int>{1, 1, 2, 2}, std::vector<int>{1, 2, 1, 2}));
    EXPECT_DOUBLE_EQ(r.accuracy, 0.5);
    EXPECT_DOUBLE_EQ(r.precision, 0.5);
    EXPECT_DOUBLE_EQ(r.recall, 0.5);
    EXPECT_EQ(r.absent_classes, (std::vector<int>{3, 4}));
}

TEST(Prf, MatchesPerClassOracle) {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 200; ++trial) {
        const auto a = random_grades(25, rng), b = noisy_copy(a, 0.5, rng);
        double prec = 0, rec = 0, f1 = 0;
        int classes = 0;
        for (int k = 1; k <= 4; ++k) {
            double tp = 0, fp = 0, fn = 0;
            for (std::size_t i = 0; i < a.size(); ++i) {
                tp += a[i] == k && b[i] == k;
                fp += a[i] != k && b[i] == k;
                fn += a[i] == k && b[i] != k;
            }
            if (tp + fp + fn == 0) continue;
            ++classes;
            const double p = tp + fp > 0 ? tp / (tp + fp) : 0, r = tp + fn > 0 ? tp / (tp + fn) : 0;
            prec += p;
            rec += r;
            f1 += p + r > 0 ? 2 * p * r / (p + r) : 0;
        }
        const auto r = prf_accuracy(confusion(a, b));
        EXPECT_NEAR(r.precision, prec / classes, 1e-12);
        EXPECT_NEAR(r.recall, rec / classes, 1e-12);
        EXPECT_NEAR(r.f1, f1 / classes, 1e-12);
    }
}

TEST(Kappa, Examples) {
    const std::vector<int> a{1, 2, 3, 4, 2};
    EXPECT_DOUBLE_EQ(cohen_kappa(a, a), 1.0);
    EXPECT_NEAR(cohen_kappa(std::vector<int>{1, 1, 2, 2}, std::vector<int>{1, 2, 1, 2}), 0.0, 1e-12);
    EXPECT_DOUBLE_EQ(cohen_kappa(std::vector<int>(6, 3), std::vector<int>(6, 3)), 1.0);
    EXPECT_THROW(cohen_kappa(std::vector<int>{1}, std::vector<int>{1, 2}), MetricError);
}

TEST(Kappa, IndependentRatersNearZero) {
    std::mt19937_64 rng(7);
    const auto a = random_grades(100000, rng), b = random_grades(100000, rng);
    EXPECT_LT(std::abs(cohen_kappa(a, b)), 0.02);
}

TEST(Kappa, Symmetric) {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 100; ++trial) {
        const auto a = random_grades(30, rng), b = noisy_copy(a, 0.5, rng);
        EXPECT_NEAR(cohen_kappa(a, b), cohen_kappa(b, a), 1e-14);
    }
}

TEST(Bootstrap, PerfectPredictions) {
    std::mt19937_64 rng(9);
    const auto a = random_grades(50, rng);
    const auto ci = bootstrap_ci(metric_fn("wmcc"), a, a);
    EXPECT_DOUBLE_EQ(ci.low, 1.0);
    EXPECT_DOUBLE_EQ(ci.high, 1.0);
}

TEST(Bootstrap, DeterministicPerSeed) {
    std::mt19937_64 rng(10);
    const auto a = random_grades(60, rng), b = noisy_copy(a, 0.4, rng);
    BootstrapOptions o;
    o.resamples = 200;
    o.seed = 42;
    EXPECT_EQ(bootstrap_ci(metric_fn("mcc"), a, b, o), bootstrap_ci(metric_fn("mcc"), a, b, o));
    o.seed = 43;
    const auto other = bootstrap_ci(metric_fn("mcc"), a, b, o);
    o.seed = 42;
    EXPECT_NE(bootstrap_ci(metric_fn("mcc"), a, b, o), other);
}

TEST(Bootstrap, PointInsideInterval) {
    std::mt19937_64 rng(11);
    BootstrapOptions o;
    o.resamples = 300;
    for (int trial = 0; trial < 100; ++trial) {
        const auto a = random_grades(40, rng), b = noisy_copy(a, 0.5, rng);
        o.seed = static_cast<std::uint64_t>(trial);
        const auto report = metric_report(a, b, o);
        for (const auto& [name, mv] : report.metrics) {
            EXPECT_LE(mv.ci.low, mv.value) << name;
            EXPECT_GE(mv.ci.high, mv.value) << name;
        }
    }
}

TEST(Bootstrap, IntervalShrinksWithSampleSize) {
    std::mt19937_64 rng(12);
    BootstrapOptions o;
    o.resamples = 200;
    double small = 0, large = 0;
    for (int trial = 0; trial < 50; ++trial) {
        o.seed = static_cast<std::uint64_t>(trial);
        const auto a = random_grades(100, rng), b = noisy_copy(a, 0.4, rng);
        const auto c = random_grades(400, rng), d = noisy_copy(c, 0.4, rng);
        auto ci = bootstrap_ci(metric_fn("wmcc"), a, b, o);
        small += ci.high - ci.low;
        ci = bootstrap_ci(metric_fn("wmcc"), c, d, o);
        large += ci.high - ci.low;
    }
    EXPECT_LT(large, small);
}

TEST(Bootstrap, Errors) {
    const std::vector<int> few{1, 2, 3};
    EXPECT_THROW(bootstrap_ci(metric_fn("mcc"), few, few), CiError);
    // every resample of a single-class truth with wrong predictions is degenerate
    const std::vector<int> t(20, 1), p(20, 2);
    EXPECT_THROW(bootstrap_ci(metric_fn("mcc"), t, p), CiError);
}

TEST(Bootstrap, SubjectClusters) {
    std::mt19937_64 rng(13);
    const auto a = random_grades(60, rng), b = noisy_copy(a, 0.3, rng);
    BootstrapOptions o;
    o.resamples = 200;
    for (int i = 0; i < 60; ++i) o.groups.push_back("s" + std::to_string(i / 6));
    const auto ci = bootstrap_ci(metric_fn("accuracy"), a, b, o);
    EXPECT_LE(ci.low, ci.high);
    o.groups.pop_back();
    EXPECT_THROW(bootstrap_ci(metric_fn("accuracy"), a, b, o), CiError);
}

TEST(Ensemble, Examples) {
    const std::vector<int> m{1, 2, 3, 4};
    EXPECT_EQ(ensemble_majority({m, m, m}), m);
    EXPECT_EQ(ensemble_majority({{1}, {1}, {2}, {4}}), std::vector<int>{1});
    EXPECT_EQ(ensemble_majority({{2}, {2}, {3}, {3}}), std::vector<int>{3});
    EXPECT_THROW(ensemble_majority({{1, 2}, {1}}), MetricError);
    EXPECT_THROW(ensemble_majority({{1}}), MetricError);
}

TEST(Ensemble, ModelOrderInvariant) {
    std::mt19937_64 rng(14);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<std::vector<int>> models;
        for (int k = 0; k < 2 + trial % 4; ++k) models.push_back(random_grades(15, rng));
        auto shuffled = models;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        EXPECT_EQ(ensemble_majority(models), ensemble_majority(shuffled));
    }
}

TEST(Leaderboard, WeightedSum) {
    const std::map<std::string, double> v{{"wmcc", 0.6}, {"accuracy", 0.8}};
    EXPECT_DOUBLE_EQ(leaderboard_score(v, {{"wmcc", 1.0}}), 0.6);
    EXPECT_NEAR(leaderboard_score(v, {{"wmcc", 0.5}, {"accuracy", 0.5}}), 0.7, 1e-15);
    EXPECT_THROW(leaderboard_score(v, {}), ConfigError);
    EXPECT_THROW(leaderboard_score(v, {{"auc", 1.0}}), ConfigError);
    EXPECT_THROW(leaderboard_score(v, {{"wmcc", -1.0}}), ConfigError);
}

TEST(Report, JsonRoundTrip) {
    std::mt19937_64 rng(15);
    const auto a = random_grades(30, rng), b = noisy_copy(a, 0.3, rng);
    BootstrapOptions o;
    o.resamples = 100;
    const auto r = metric_report(a, b, o);
    EXPECT_EQ(report_from_json(nlohmann::json::parse(to_json(r).dump())), r);
    for (const auto& c : table_columns()) EXPECT_TRUE(r.metrics.count(c)) << c;
}
