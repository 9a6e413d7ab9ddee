#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "neoeeg/errors.hpp"

namespace neoeeg::metrics {

inline constexpr int kGrades = 4;

struct ConfusionMatrix {
    std::array<std::array<double, kGrades>, kGrades> counts{};

    double total() const {
        double s = 0;
        for (const auto& r : counts)
            for (double v : r) s += v;
        return s;
    }
    double& at(int true_grade, int pred_grade) { return counts[true_grade - 1][pred_grade - 1]; }
    double at(int true_grade, int pred_grade) const { return counts[true_grade - 1][pred_grade - 1]; }
    bool operator==(const ConfusionMatrix&) const = default;
};

/// Ordinal penalty weights max(1, |i - j|).
inline constexpr double weight(int i, int j) {
    const int d = i > j ? i - j : j - i;
    return d > 1 ? static_cast<double>(d) : 1.0;
}

inline void check_grades(std::span<const int> v) {
    for (int g : v)
        if (g < 1 || g > kGrades) throw MetricError("grade " + std::to_string(g) + " outside 1-4");
}

inline ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred) {
    if (y_true.size() != y_pred.size())
        throw MetricError("length mismatch: " + std::to_string(y_true.size()) + " true vs " +
                          std::to_string(y_pred.size()) + " predicted");
    if (y_true.empty()) throw MetricError("no predictions to score");
    check_grades(y_true);
    check_grades(y_pred);
    ConfusionMatrix cm;
    for (std::size_t k = 0; k < y_true.size(); ++k) cm.at(y_true[k], y_pred[k]) += 1;
    return cm;
}

inline ConfusionMatrix weighted_cm(const ConfusionMatrix& cm) {
    ConfusionMatrix w;
    for (int i = 1; i <= kGrades; ++i)
        for (int j = 1; j <= kGrades; ++j) w.at(i, j) = cm.at(i, j) * weight(i, j);
    return w;
}

/// Multiclass MCC (R_K). Defined as 0 when either variance term vanishes.
inline double mcc(const ConfusionMatrix& cm, bool* degenerate = nullptr) {
    double c = 0, s = 0, pt = 0, pp = 0, tt = 0;
    std::array<double, kGrades> t{}, p{};
    for (int i = 0; i < kGrades; ++i)
        for (int j = 0; j < kGrades; ++j) {
            const double v = cm.counts[i][j];
            t[i] += v;
            p[j] += v;
            s += v;
            if (i == j) c += v;
        }
    for (int k = 0; k < kGrades; ++k) {
        pt += p[k] * t[k];
        pp += p[k] * p[k];
        tt += t[k] * t[k];
    }
    const double den = (s * s - pp) * (s * s - tt);
    if (degenerate) *degenerate = !(den > 0);
    if (!(den > 0)) return 0.0;
    return (c * s - pt) / std::sqrt(den);
}

inline double weighted_mcc(std::span<const int> y_true, std::span<const int> y_pred) {
    return mcc(weighted_cm(confusion(y_true, y_pred)));
}

struct Prf {
    double accuracy = 0, precision = 0, recall = 0, f1 = 0;
    /// Grades absent from both truth and prediction; they are left out of the macro average.
    std::vector<int> absent_classes;
};

/// Accuracy and macro precision/recall/F1 over the classes that occur in truth or prediction.
/// An occurring class with no predictions (or no support) contributes 0 precision (recall).
inline Prf prf_accuracy(const ConfusionMatrix& cm) {
    Prf r;
    const double n = cm.total();
    if (!(n > 0)) throw MetricError("empty confusion matrix");
    double trace = 0;
    int classes = 0;
    for (int k = 1; k <= kGrades; ++k) {
        trace += cm.at(k, k);
        double row = 0, col = 0;
        for (int j = 1; j <= kGrades; ++j) {
            row += cm.at(k, j);
            col += cm.at(j, k);
        }
        if (row == 0 && col == 0) {
            r.absent_classes.push_back(k);
            continue;
        }
        ++classes;
        const double prec = col > 0 ? cm.at(k, k) / col : 0.0;
        const double rec = row > 0 ? cm.at(k, k) / row : 0.0;
        r.precision += prec;
        r.recall += rec;
        r.f1 += prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
    }
    r.accuracy = trace / n;
    r.precision /= classes;
    r.recall /= classes;
    r.f1 /= classes;
    return r;
}

/// Cohen's kappa with marginal-product chance agreement.
inline double cohen_kappa(std::span<const int> a, std::span<const int> b) {
    const auto cm = confusion(a, b);
    const double n = cm.total();
    double po = 0, pe = 0;
    for (int k = 1; k <= kGrades; ++k) {
        po += cm.at(k, k);
        double row = 0, col = 0;
        for (int j = 1; j <= kGrades; ++j) {
            row += cm.at(k, j);
            col += cm.at(j, k);
        }
        pe += row * col;
    }
    po /= n;
    pe /= n * n;
    if (pe >= 1.0) return po >= 1.0 ? 1.0 : 0.0;
    return (po - pe) / (1.0 - pe);
}

/// Per-epoch modal grade across models; ties go to the more severe grade.
inline std::vector<int> ensemble_majority(const std::vector<std::vector<int>>& preds) {
    if (preds.size() < 2) throw MetricError("ensemble needs at least two models");
    const std::size_t n = preds.front().size();
    for (const auto& p : preds) {
        if (p.size() != n) throw MetricError("ensemble inputs differ in length");
        check_grades(p);
    }
    std::vector<int> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::array<int, kGrades + 1> votes{};
        for (const auto& p : preds) ++votes[static_cast<std::size_t>(p[i])];
        int best = kGrades;
        for (int g = kGrades; g >= 1; --g)
            if (votes[static_cast<std::size_t>(g)] > votes[static_cast<std::size_t>(best)]) best = g;
        out[i] = best;
    }
    return out;
}

inline const std::vector<std::string>& metric_names() {
    static const std::vector<std::string> names{"wmcc", "mcc", "accuracy", "f1", "precision", "recall", "kappa"};
    return names;
}

/// Weighted sum of metric values. Weights must be non-empty, non-negative and name known metrics.
inline double leaderboard_score(const std::map<std::string, double>& values, const std::map<std::string, double>& weights) {
    if (weights.empty()) throw ConfigError("ranking weights are empty");
    double s = 0;
    for (const auto& [k, w] : weights) {
        if (!(w >= 0)) throw ConfigError("ranking weight for '" + k + "' is negative");
        auto it = values.find(k);
        if (it == values.end()) throw ConfigError("unknown ranking metric '" + k + "'");
        s += w * it->second;
    }
    return s;
}

inline void validate_weights(const std::map<std::string, double>& weights) {
    std::map<std::string, double> probe;
    for (const auto& n : metric_names()) probe[n] = 0.0;
    leaderboard_score(probe, weights);
}

/// All scalar metrics of one prediction set.
inline std::map<std::string, double> all_metrics(std::span<const int> y_true, std::span<const int> y_pred) {
    const auto cm = confusion(y_true, y_pred);
    const auto prf = prf_accuracy(cm);
    return {{"wmcc", mcc(weighted_cm(cm))}, {"mcc", mcc(cm)},           {"accuracy", prf.accuracy},
            {"f1", prf.f1},                 {"precision", prf.precision}, {"recall", prf.recall},
            {"kappa", cohen_kappa(y_true, y_pred)}};
}

struct Interval {
    double low = 0, high = 0;
    std::size_t degenerate = 0;
    bool operator==(const Interval&) const = default;
};

using MetricFn = std::function<std::optional<double>(std::span<const int>, std::span<const int>)>;

struct BootstrapOptions {
    std::size_t resamples = 1000;
    double level = 0.95;
    std::uint64_t seed = 0;
    double max_degenerate_fraction = 0.2;
    /// Optional cluster label per epoch; when set, whole clusters are resampled.
    std::vector<std::string> groups;
};

namespace metrics_detail {

inline double quantile_sorted(const std::vector<double>& v, double q) {
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace metrics_detail

/// Percentile bootstrap interval. Each resample draws from its own generator seeded by
/// (seed, resample index), so results do not depend on evaluation order.
inline Interval bootstrap_ci(const MetricFn& metric, std::span<const int> y_true, std::span<const int> y_pred,
                             const BootstrapOptions& opt = {}) {
    if (y_true.size() != y_pred.size()) throw MetricError("length mismatch");
    const std::size_t n = y_true.size();
    if (n < 10) throw CiError("bootstrap needs at least 10 epochs");
    if (opt.resamples == 0) throw CiError("bootstrap needs at least one resample");
    if (!(opt.level > 0 && opt.level < 1)) throw CiError("confidence level must lie in (0, 1)");

    std::vector<std::vector<std::size_t>> clusters;
    if (!opt.groups.empty()) {
        if (opt.groups.size() != n) throw CiError("group labels do not match the epochs");
        std::map<std::string, std::vector<std::size_t>> by;
        for (std::size_t i = 0; i < n; ++i) by[opt.groups[i]].push_back(i);
        for (auto& [_, v] : by) clusters.push_back(std::move(v));
    } else {
        for (std::size_t i = 0; i < n; ++i) clusters.push_back({i});
    }

    std::vector<double> values;
    values.reserve(opt.resamples);
    Interval ci;
    std::vector<int> t, p;
    for (std::size_t b = 0; b < opt.resamples; ++b) {
        std::seed_seq seq{static_cast<std::uint32_t>(opt.seed), static_cast<std::uint32_t>(opt.seed >> 32),
                          static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
        std::mt19937_64 rng(seq);
        t.clear();
        p.clear();
        for (std::size_t k = 0; k < clusters.size(); ++k) {
            const auto& c = clusters[static_cast<std::size_t>(rng() % clusters.size())];
            for (auto i : c) {
                t.push_back(y_true[i]);
                p.push_back(y_pred[i]);
            }
        }
        const auto v = metric(t, p);
        if (!v || !std::isfinite(*v))
            ++ci.degenerate;
        else
            values.push_back(*v);
    }
    if (static_cast<double>(ci.degenerate) > opt.max_degenerate_fraction * static_cast<double>(opt.resamples))
        throw CiError(std::to_string(ci.degenerate) + " of " + std::to_string(opt.resamples) +
                      " bootstrap resamples were degenerate");
    std::sort(values.begin(), values.end());
    const double alpha = (1.0 - opt.level) / 2.0;
    ci.low = metrics_detail::quantile_sorted(values, alpha);
    ci.high = metrics_detail::quantile_sorted(values, 1.0 - alpha);
    return ci;
}

/// Metric functions usable with bootstrap_ci; MCC-type metrics report a degenerate resample when
/// the denominator vanishes.
inline MetricFn metric_fn(const std::string& name) {
    if (name == "wmcc" || name == "mcc") {
        const bool weighted = name == "wmcc";
        return [weighted](std::span<const int> a, std::span<const int> b) -> std::optional<double> {
            auto cm = confusion(a, b);
            if (weighted) cm = weighted_cm(cm);
            bool degenerate = false;
            const double v = mcc(cm, &degenerate);
            if (degenerate) {
                // A perfect resample with a single class is agreement, not an undefined value.
                if (std::equal(a.begin(), a.end(), b.begin())) return 1.0;
                return std::nullopt;
            }
            return v;
        };
    }
    if (name == "kappa")
        return [](std::span<const int> a, std::span<const int> b) -> std::optional<double> { return cohen_kappa(a, b); };
    if (name == "accuracy" || name == "f1" || name == "precision" || name == "recall")
        return [name](std::span<const int> a, std::span<const int> b) -> std::optional<double> {
            const auto r = prf_accuracy(confusion(a, b));
            if (name == "accuracy") return r.accuracy;
            if (name == "f1") return r.f1;
            if (name == "precision") return r.precision;
            return r.recall;
        };
    throw ConfigError("unknown metric '" + name + "'");
}

struct MetricValue {
    double value = 0;
    Interval ci;
    bool operator==(const MetricValue&) const = default;
};

struct MetricReport {
    std::map<std::string, MetricValue> metrics;
    bool mcc_degenerate = false;
    std::size_t n = 0;
    bool operator==(const MetricReport&) const = default;
};

/// Point values for every metric, with bootstrap intervals when `resamples > 0`.
inline MetricReport metric_report(std::span<const int> y_true, std::span<const int> y_pred,
                                  const BootstrapOptions& opt = {}) {
    MetricReport r;
    r.n = y_true.size();
    const auto cm = confusion(y_true, y_pred);
    mcc(cm, &r.mcc_degenerate);
    for (const auto& [name, v] : all_metrics(y_true, y_pred)) {
        MetricValue mv{v, {v, v, 0}};
        if (opt.resamples > 0) {
            mv.ci = bootstrap_ci(metric_fn(name), y_true, y_pred, opt);
            // the percentile interval can miss the point value on tiny skewed samples
            mv.ci.low = std::min(mv.ci.low, v);
            mv.ci.high = std::max(mv.ci.high, v);
        }
        r.metrics[name] = mv;
    }
    return r;
}

inline nlohmann::json to_json(const MetricReport& r) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [name, mv] : r.metrics)
        j[name] = {{"value", mv.value}, {"ci_low", mv.ci.low}, {"ci_high", mv.ci.high}, {"degenerate_resamples", mv.ci.degenerate}};
    return {{"n", r.n}, {"mcc_degenerate", r.mcc_degenerate}, {"metrics", j}};
}

inline MetricReport report_from_json(const nlohmann::json& j) {
    MetricReport r;
    r.n = j.at("n").get<std::size_t>();
    r.mcc_degenerate = j.at("mcc_degenerate").get<bool>();
    for (const auto& [name, v] : j.at("metrics").items())
        r.metrics[name] = {v.at("value").get<double>(),
                           {v.at("ci_low").get<double>(), v.at("ci_high").get<double>(),
                            v.at("degenerate_resamples").get<std::size_t>()}};
    return r;
}

/// Leaderboard column order: wMCC, accuracy, F1, precision, recall.
inline const std::vector<std::string>& table_columns() {
    static const std::vector<std::string> cols{"wmcc", "accuracy", "f1", "precision", "recall"};
    return cols;
}

}  // namespace neoeeg::metrics
