#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "neoeeg/errors.hpp"

namespace neoeeg::grader {

using Matrix = std::vector<std::vector<double>>;

struct SmoOptions {
    double C = 1.0;
    double tol = 1e-3;
    int max_passes = 100;
};

struct LinearSvmModel {
    std::vector<double> weights;
    double bias = 0;
    double C = 1.0;
    std::vector<std::size_t> support_indices;
    std::vector<double> alphas;
    std::size_t iterations = 0;

    double decision(const std::vector<double>& x) const {
        double s = bias;
        for (std::size_t k = 0; k < weights.size(); ++k) s += weights[k] * x[k];
        return s;
    }
    bool operator==(const LinearSvmModel&) const = default;
};

/// Dual objective sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j <x_i, x_j>.
inline double dual_objective(const Matrix& X, const std::vector<int>& y, const std::vector<double>& alpha) {
    const std::size_t d = X.empty() ? 0 : X.front().size();
    std::vector<double> w(d, 0.0);
    double s = 0;
    for (std::size_t i = 0; i < X.size(); ++i) {
        s += alpha[i];
        for (std::size_t k = 0; k < d; ++k) w[k] += alpha[i] * y[i] * X[i][k];
    }
    double ww = 0;
    for (double v : w) ww += v * v;
    return s - 0.5 * ww;
}

/// Largest violation of the KKT conditions for the given model on (X, y).
inline double kkt_violation(const LinearSvmModel& m, const Matrix& X, const std::vector<int>& y) {
    double worst = 0;
    const double eps = 1e-12 * m.C;
    for (std::size_t i = 0; i < X.size(); ++i) {
        const double margin = y[i] * m.decision(X[i]);
        const double a = m.alphas[i];
        if (a <= eps)
            worst = std::max(worst, 1.0 - margin);
        else if (a >= m.C - eps)
            worst = std::max(worst, margin - 1.0);
        else
            worst = std::max(worst, std::abs(margin - 1.0));
    }
    return worst;
}

/// Linear soft-margin SVM trained by SMO with second-order working-set selection.
inline LinearSvmModel smo_train(const Matrix& X, const std::vector<int>& y, const SmoOptions& opt = {}) {
    const std::size_t n = X.size();
    if (n != y.size()) throw TrainError("feature and label counts differ");
    if (!(opt.C > 0)) throw TrainError("C must be positive");
    std::size_t pos = 0, neg = 0;
    for (int v : y) {
        if (v == 1)
            ++pos;
        else if (v == -1)
            ++neg;
        else
            throw TrainError("labels must be +1 or -1");
    }
    if (pos == 0 || neg == 0) throw TrainError("training labels contain a single class");
    const std::size_t d = X.front().size();
    for (const auto& r : X)
        if (r.size() != d) throw TrainError("ragged feature matrix");

    std::vector<double> K(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            double s = 0;
            for (std::size_t k = 0; k < d; ++k) s += X[i][k] * X[j][k];
            K[i * n + j] = K[j * n + i] = s;
        }
    auto Q = [&](std::size_t i, std::size_t j) { return y[i] * y[j] * K[i * n + j]; };

    const double C = opt.C;
    std::vector<double> alpha(n, 0.0), G(n, -1.0);
    auto in_up = [&](std::size_t t) { return (y[t] == 1 && alpha[t] < C) || (y[t] == -1 && alpha[t] > 0); };
    auto in_low = [&](std::size_t t) { return (y[t] == 1 && alpha[t] > 0) || (y[t] == -1 && alpha[t] < C); };

    const std::size_t max_iter = static_cast<std::size_t>(opt.max_passes) * std::max<std::size_t>(n, 100) * 10;
    constexpr double tau = 1e-12;
    std::size_t iter = 0;
    // Stop at a gap below tol so that the midpoint bias leaves every KKT residual under tol / 2.
    for (; iter < max_iter; ++iter) {
        double gmax = -std::numeric_limits<double>::infinity(), gmin = std::numeric_limits<double>::infinity();
        std::size_t i = n;
        for (std::size_t t = 0; t < n; ++t)
            if (in_up(t) && -y[t] * G[t] > gmax) {
                gmax = -y[t] * G[t];
                i = t;
            }
        std::size_t j = n;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t < n; ++t) {
            if (!in_low(t)) continue;
            const double v = -y[t] * G[t];
            gmin = std::min(gmin, v);
            const double b = gmax - v;
            if (b > 0) {
                double a = K[i * n + i] + K[t * n + t] - 2.0 * K[i * n + t];
                if (a <= 0) a = tau;
                const double obj = -(b * b) / a;
                if (obj < best) {
                    best = obj;
                    j = t;
                }
            }
        }
        if (i == n || j == n || gmax - gmin < opt.tol) break;

        const double old_ai = alpha[i], old_aj = alpha[j];
        if (y[i] != y[j]) {
            double quad = K[i * n + i] + K[j * n + j] - 2.0 * K[i * n + j];
            if (quad <= 0) quad = tau;
            const double delta = (-G[i] - G[j]) / quad;
            const double diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if (diff > 0) {
                if (alpha[j] < 0) {
                    alpha[j] = 0;
                    alpha[i] = diff;
                }
            } else if (alpha[i] < 0) {
                alpha[i] = 0;
                alpha[j] = -diff;
            }
            if (diff > 0) {
                if (alpha[i] > C) {
                    alpha[i] = C;
                    alpha[j] = C - diff;
                }
            } else if (alpha[j] > C) {
                alpha[j] = C;
                alpha[i] = C + diff;
            }
        } else {
            double quad = K[i * n + i] + K[j * n + j] - 2.0 * K[i * n + j];
            if (quad <= 0) quad = tau;
            const double delta = (G[i] - G[j]) / quad;
            const double sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if (sum > C) {
                if (alpha[i] > C) {
                    alpha[i] = C;
                    alpha[j] = sum - C;
                }
            } else if (alpha[j] < 0) {
                alpha[j] = 0;
                alpha[i] = sum;
            }
            if (sum > C) {
                if (alpha[j] > C) {
                    alpha[j] = C;
                    alpha[i] = sum - C;
                }
            } else if (alpha[i] < 0) {
                alpha[i] = 0;
                alpha[j] = sum;
            }
        }
        const double di = alpha[i] - old_ai, dj = alpha[j] - old_aj;
        for (std::size_t t = 0; t < n; ++t) G[t] += Q(t, i) * di + Q(t, j) * dj;
    }

    LinearSvmModel m;
    m.C = C;
    m.alphas = alpha;
    m.iterations = iter;
    m.weights.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (alpha[i] <= 0) continue;
        m.support_indices.push_back(i);
        for (std::size_t k = 0; k < d; ++k) m.weights[k] += alpha[i] * y[i] * X[i][k];
    }
    // Feasible bias interval implied by the KKT conditions; take its midpoint.
    double lo = -std::numeric_limits<double>::infinity(), hi = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        double wx = 0;
        for (std::size_t k = 0; k < d; ++k) wx += m.weights[k] * X[i][k];
        const double edge = y[i] - wx;  // bias putting example i exactly on the margin
        const bool at_zero = alpha[i] <= 0, at_c = alpha[i] >= C;
        const bool raise = (y[i] == 1 && !at_c) || (y[i] == -1 && !at_zero);  // needs bias >= edge
        const bool lower = (y[i] == 1 && !at_zero) || (y[i] == -1 && !at_c);  // needs bias <= edge
        if (raise) lo = std::max(lo, edge);
        if (lower) hi = std::min(hi, edge);
    }
    if (std::isfinite(lo) && std::isfinite(hi))
        m.bias = (lo + hi) / 2.0;
    else
        m.bias = std::isfinite(lo) ? lo : hi;

    const double violation = kkt_violation(m, X, y);
    if (iter >= max_iter && violation > opt.tol)
        throw TrainError("SMO did not converge after " + std::to_string(iter) + " iterations; largest KKT violation " +
                         std::to_string(violation));
    return m;
}

}  // namespace neoeeg::grader
