#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "neoeeg/features/neural.hpp"
#include "neoeeg/features/stats.hpp"
#include "neoeeg/grader/svm.hpp"

namespace neoeeg::grader {

struct Platt {
    double a = -1.0;
    double b = 0.0;

    /// Calibrated probability of the positive class.
    double operator()(double f) const {
        const double z = a * f + b;
        return z >= 0 ? std::exp(-z) / (1.0 + std::exp(-z)) : 1.0 / (1.0 + std::exp(z));
    }
    bool operator==(const Platt&) const = default;
};

/// Sigmoid fit to decision values (Newton method with backtracking, regularised targets).
inline Platt fit_platt(const std::vector<double>& f, const std::vector<int>& y) {
    double prior1 = 0, prior0 = 0;
    for (int v : y) (v > 0 ? prior1 : prior0) += 1;
    const double hi = (prior1 + 1.0) / (prior1 + 2.0), lo = 1.0 / (prior0 + 2.0);
    const std::size_t n = f.size();
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = y[i] > 0 ? hi : lo;

    double A = 0.0, B = std::log((prior0 + 1.0) / (prior1 + 1.0));
    auto objective = [&](double a, double b) {
        double fv = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double z = f[i] * a + b;
            fv += z >= 0 ? t[i] * z + std::log1p(std::exp(-z)) : (t[i] - 1) * z + std::log1p(std::exp(z));
        }
        return fv;
    };
    double fval = objective(A, B);
    constexpr double sigma = 1e-12, eps = 1e-5, min_step = 1e-10;
    for (int it = 0; it < 100; ++it) {
        double h11 = sigma, h22 = sigma, h21 = 0, g1 = 0, g2 = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double z = f[i] * A + B;
            double p, q;
            if (z >= 0) {
                p = std::exp(-z) / (1.0 + std::exp(-z));
                q = 1.0 / (1.0 + std::exp(-z));
            } else {
                p = 1.0 / (1.0 + std::exp(z));
                q = std::exp(z) / (1.0 + std::exp(z));
            }
            const double d2 = p * q;
            h11 += f[i] * f[i] * d2;
            h22 += d2;
            h21 += f[i] * d2;
            const double d1 = t[i] - p;
            g1 += f[i] * d1;
            g2 += d1;
        }
        if (std::abs(g1) < eps && std::abs(g2) < eps) break;
        const double det = h11 * h22 - h21 * h21;
        const double dA = -(h22 * g1 - h21 * g2) / det;
        const double dB = -(-h21 * g1 + h11 * g2) / det;
        const double gd = g1 * dA + g2 * dB;
        double step = 1;
        while (step >= min_step) {
            const double nA = A + step * dA, nB = B + step * dB;
            const double nf = objective(nA, nB);
            if (nf < fval + 1e-4 * step * gd) {
                A = nA;
                B = nB;
                fval = nf;
                break;
            }
            step /= 2;
        }
        if (step < min_step) break;
    }
    return {A, B};
}

struct Normalization {
    std::vector<double> median;
    std::vector<double> iqr;
    /// Features compared on a log scale; non-positive values there count as missing.
    std::vector<bool> log_scale;

    double transform(std::size_t k, double v) const {
        if (is_missing(v)) return kMissing;
        if (k < log_scale.size() && log_scale[k]) return v > 0 ? std::log(v) : kMissing;
        return v;
    }
    std::vector<double> apply(const std::vector<double>& x) const {
        std::vector<double> out(x.size());
        for (std::size_t k = 0; k < x.size(); ++k) {
            const double v = transform(k, x[k]);
            out[k] = is_missing(v) ? 0.0 : (v - median[k]) / iqr[k];
        }
        return out;
    }
    bool operator==(const Normalization&) const = default;
};

/// Per-feature median and interquartile range of the defined training values (IQR 0 -> 1).
inline Normalization fit_normalization(const Matrix& X, std::vector<bool> log_scale = {}) {
    Normalization n;
    const std::size_t d = X.empty() ? 0 : X.front().size();
    log_scale.resize(d, false);
    n.log_scale = log_scale;
    for (std::size_t k = 0; k < d; ++k) {
        std::vector<double> col;
        for (const auto& r : X) {
            const double v = n.transform(k, r[k]);
            if (!is_missing(v)) col.push_back(v);
        }
        const double med = col.empty() ? 0.0 : features::percentile(col, 50);
        double iqr = col.empty() ? 1.0 : features::percentile(col, 75) - features::percentile(col, 25);
        if (!(iqr > 0)) iqr = 1.0;
        n.median.push_back(med);
        n.iqr.push_back(iqr);
    }
    return n;
}

struct Stage {
    int grade = 0;
    LinearSvmModel svm;
    Platt platt;
    bool operator==(const Stage&) const = default;
};

struct GraderCascade {
    std::vector<std::string> feature_names;
    Normalization normalization;
    std::vector<Stage> stages;
    bool operator==(const GraderCascade&) const = default;
};

inline SmoOptions default_cascade_smo() {
    SmoOptions o;
    o.C = 10.0;
    return o;
}

struct CascadeConfig {
    SmoOptions smo = default_cascade_smo();
    std::array<int, 3> order{1, 2, 3};
    /// Amplitude-like features, normalised after taking logarithms.
    std::set<std::string> log_features{"svd.max_singular", "spectral.max_power", "reeg.min_p95", "reeg.max_range"};
};

struct GradePrediction {
    std::string epoch_id;
    int grade = 0;
    double probability = 0;
    bool operator==(const GradePrediction&) const = default;
};

/// One-against-rest stages in the configured order; rows are put in a canonical order first so the
/// result does not depend on input order.
inline GraderCascade cascade_train(const std::vector<features::FeatureVector>& rows, const std::vector<int>& grades,
                                   const CascadeConfig& cfg = {}) {
    if (rows.size() != grades.size()) throw TrainError("feature rows and grades differ in count");
    if (rows.empty()) throw TrainError("no training rows");
    std::set<int> present(grades.begin(), grades.end());
    for (int g = 1; g <= 4; ++g)
        if (!present.count(g)) throw TrainError("grade " + std::to_string(g) + " is missing from the training data");
    std::set<int> distinct(cfg.order.begin(), cfg.order.end());
    if (distinct.size() != 3) throw TrainError("cascade stages must target distinct grades");

    const auto& names = rows.front().names;
    for (const auto& r : rows)
        if (r.names != names) throw TrainError("feature rows have different schemas");

    std::vector<std::size_t> idx(rows.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    auto key_less = [&](std::size_t a, std::size_t b) {
        for (std::size_t k = 0; k < names.size(); ++k) {
            const double va = rows[a].values[k], vb = rows[b].values[k];
            const bool ma = is_missing(va), mb = is_missing(vb);
            if (ma != mb) return ma;
            if (!ma && va != vb) return va < vb;
        }
        return grades[a] < grades[b];
    };
    std::stable_sort(idx.begin(), idx.end(), key_less);

    Matrix raw;
    std::vector<int> g;
    for (auto i : idx) {
        raw.push_back(rows[i].values);
        g.push_back(grades[i]);
    }
    GraderCascade model;
    model.feature_names = names;
    std::vector<bool> log_scale;
    for (const auto& n : names) log_scale.push_back(cfg.log_features.count(n) > 0);
    model.normalization = fit_normalization(raw, log_scale);
    Matrix X;
    for (const auto& r : raw) X.push_back(model.normalization.apply(r));

    for (int target : cfg.order) {
        std::vector<int> y;
        for (int v : g) y.push_back(v == target ? 1 : -1);
        Stage s;
        s.grade = target;
        s.svm = smo_train(X, y, cfg.smo);
        std::vector<double> f;
        for (const auto& x : X) f.push_back(s.svm.decision(x));
        s.platt = fit_platt(f, y);
        s.svm.alphas.clear();
        s.svm.support_indices.clear();
        model.stages.push_back(std::move(s));
    }
    return model;
}

/// Reorders the input features to the model schema; throws naming every missing feature.
inline std::vector<double> align_features(const GraderCascade& model, const features::FeatureVector& x) {
    std::map<std::string, double> by_name;
    for (std::size_t i = 0; i < x.names.size(); ++i) by_name[x.names[i]] = x.values[i];
    std::vector<double> out;
    std::string missing;
    for (const auto& n : model.feature_names) {
        auto it = by_name.find(n);
        if (it == by_name.end()) {
            missing += (missing.empty() ? "" : ", ") + n;
            continue;
        }
        out.push_back(it->second);
    }
    if (!missing.empty()) throw PredictError("feature schema mismatch; missing: " + missing);
    return out;
}

/// Stage scores in cascade order.
inline std::vector<double> stage_scores(const GraderCascade& model, const features::FeatureVector& x) {
    const auto z = model.normalization.apply(align_features(model, x));
    std::vector<double> out;
    for (const auto& s : model.stages) out.push_back(s.platt(s.svm.decision(z)));
    return out;
}

/// First stage with calibrated score above 0.5 decides; otherwise the residual grade.
inline GradePrediction cascade_predict(const GraderCascade& model, const features::FeatureVector& x) {
    if (model.stages.size() != 3) throw PredictError("model must have exactly three stages");
    const auto scores = stage_scores(model, x);
    GradePrediction p;
    p.epoch_id = x.epoch_id;
    for (std::size_t k = 0; k < scores.size(); ++k) {
        if (scores[k] > 0.5) {
            p.grade = model.stages[k].grade;
            p.probability = scores[k];
            return p;
        }
    }
    std::set<int> used;
    for (const auto& s : model.stages) used.insert(s.grade);
    for (int g = 1; g <= 4; ++g)
        if (!used.count(g)) p.grade = g;
    p.probability = 1.0 - *std::max_element(scores.begin(), scores.end());
    return p;
}

}  // namespace neoeeg::grader
