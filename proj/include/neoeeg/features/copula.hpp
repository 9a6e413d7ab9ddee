#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "neoeeg/errors.hpp"

namespace neoeeg::features {

/// Probability integral transform by mid-ranks: rank / (n + 1), ties share their average rank.
inline std::vector<double> pit(std::span<const double> x) {
    const std::size_t n = x.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> u(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && x[idx[j]] == x[idx[i]]) ++j;
        const double rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k) u[idx[k]] = rank / static_cast<double>(n + 1);
        i = j;
    }
    return u;
}

namespace copula_detail {

inline std::uint64_t tie_pairs(std::uint64_t t) { return t * (t - 1) / 2; }

inline std::uint64_t merge_count(std::vector<double>& v, std::vector<double>& buf, std::size_t lo, std::size_t hi) {
    if (hi - lo < 2) return 0;
    const std::size_t mid = lo + (hi - lo) / 2;
    std::uint64_t swaps = merge_count(v, buf, lo, mid) + merge_count(v, buf, mid, hi);
    std::size_t i = lo, j = mid, k = lo;
    while (i < mid && j < hi) {
        if (v[j] < v[i]) {
            swaps += mid - i;
            buf[k++] = v[j++];
        } else {
            buf[k++] = v[i++];
        }
    }
    while (i < mid) buf[k++] = v[i++];
    while (j < hi) buf[k++] = v[j++];
    std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
              v.begin() + static_cast<std::ptrdiff_t>(lo));
    return swaps;
}

}  // namespace copula_detail

/// Kendall tau-b in O(n log n) (Knight's algorithm).
inline double kendall_tau(std::span<const double> a, std::span<const double> b) {
    using namespace copula_detail;
    if (a.size() != b.size()) throw CopulaError("series must have equal length");
    const std::size_t n = a.size();
    if (n < 2) throw CopulaError("need at least two observations");
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) {
        return a[i] < a[j] || (a[i] == a[j] && b[i] < b[j]);
    });
    std::uint64_t n1 = 0, n3 = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && a[idx[j]] == a[idx[i]]) ++j;
        n1 += tie_pairs(j - i);
        for (std::size_t k = i; k < j;) {
            std::size_t m = k;
            while (m < j && b[idx[m]] == b[idx[k]]) ++m;
            n3 += tie_pairs(m - k);
            k = m;
        }
        i = j;
    }
    std::vector<double> ys(n), buf(n);
    for (std::size_t i = 0; i < n; ++i) ys[i] = b[idx[i]];
    const std::uint64_t swaps = merge_count(ys, buf, 0, n);
    std::uint64_t n2 = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && ys[j] == ys[i]) ++j;
        n2 += tie_pairs(j - i);
        i = j;
    }
    const std::uint64_t n0 = tie_pairs(n);
    if (n1 == n0 || n2 == n0) throw CopulaError("series is degenerate (all values tied)");
    const double num = static_cast<double>(n0) - static_cast<double>(n1) - static_cast<double>(n2) +
                       static_cast<double>(n3) - 2.0 * static_cast<double>(swaps);
    const double den = std::sqrt(static_cast<double>(n0 - n1) * static_cast<double>(n0 - n2));
    return std::clamp(num / den, -1.0, 1.0);
}

/// First Debye function D1(x) = (1/x) * integral_0^x t / (e^t - 1) dt.
inline double debye1(double x) {
    if (x == 0.0) return 1.0;
    if (x < 0) return debye1(-x) - x / 2.0;
    auto f = [](double t) { return t == 0.0 ? 1.0 : t / std::expm1(t); };
    // Adaptive Simpson on [0, x].
    auto simpson = [&](double a, double b, double fa, double fm, double fb) { return (b - a) / 6.0 * (fa + 4 * fm + fb); };
    struct Task {
        double a, b, fa, fm, fb, whole;
        int depth;
    };
    double total = 0;
    std::vector<Task> stack;
    const double fa = f(0.0), fb = f(x), fm = f(x / 2);
    stack.push_back({0.0, x, fa, fm, fb, simpson(0.0, x, fa, fm, fb), 0});
    while (!stack.empty()) {
        Task t = stack.back();
        stack.pop_back();
        const double m = (t.a + t.b) / 2;
        const double flm = f((t.a + m) / 2), frm = f((m + t.b) / 2);
        const double left = simpson(t.a, m, t.fa, flm, t.fm);
        const double right = simpson(m, t.b, t.fm, frm, t.fb);
        if (t.depth > 40 || std::abs(left + right - t.whole) <= 1e-13 * 15) {
            total += left + right + (left + right - t.whole) / 15.0;
        } else {
            stack.push_back({t.a, m, t.fa, flm, t.fm, left, t.depth + 1});
            stack.push_back({m, t.b, t.fm, frm, t.fb, right, t.depth + 1});
        }
    }
    return total / x;
}

/// Kendall's tau implied by a Frank copula with parameter theta.
inline double frank_tau(double theta) {
    if (std::abs(theta) < 1e-3) return theta / 9.0 - theta * theta * theta / 900.0;
    return 1.0 - 4.0 / theta * (1.0 - debye1(theta));
}

/// Frank copula distribution function C(u1, u2; theta).
inline double frank_cdf(double u1, double u2, double theta) {
    if (theta == 0.0) return u1 * u2;
    const double num = std::expm1(-theta * u1) * std::expm1(-theta * u2);
    return -std::log1p(num / std::expm1(-theta)) / theta;
}

struct CopulaOptions {
    double theta_cap = 35.0;
    double tau_tolerance = 1e-6;
    double independence_threshold = 1e-4;
    std::size_t min_length = 32;
};

struct CopulaEstimate {
    double theta = 0;
    double tau = 0;
    std::vector<double> u1, u2;
};

/// Frank parameter by inverting tau(theta) with bracketed bisection on [0, cap].
inline double frank_theta_from_tau(double tau, const CopulaOptions& opt = {}) {
    const double target = std::abs(tau);
    const double sign = tau < 0 ? -1.0 : 1.0;
    if (target >= frank_tau(opt.theta_cap)) return sign * opt.theta_cap;
    double lo = 0, hi = opt.theta_cap;
    double mid = 0;
    for (int it = 0; it < 200; ++it) {
        mid = (lo + hi) / 2;
        const double t = frank_tau(mid);
        if (std::abs(t - target) < opt.tau_tolerance && hi - lo < 1e-9) break;
        (t < target ? lo : hi) = mid;
    }
    if (std::abs(mid) < opt.independence_threshold) return 0.0;
    return sign * mid;
}

/// Fits a Frank copula to two unit-interval series via Kendall's tau.
inline CopulaEstimate frank_theta(std::span<const double> u1, std::span<const double> u2, const CopulaOptions& opt = {}) {
    if (u1.size() != u2.size()) throw CopulaError("series must have equal length");
    if (u1.size() < opt.min_length) throw CopulaError("need at least " + std::to_string(opt.min_length) + " observations");
    for (std::size_t i = 0; i < u1.size(); ++i)
        if (!(u1[i] > 0 && u1[i] < 1 && u2[i] > 0 && u2[i] < 1)) throw CopulaError("values must lie in (0, 1)");
    CopulaEstimate est;
    est.tau = kendall_tau(u1, u2);
    est.theta = frank_theta_from_tau(est.tau, opt);
    est.u1.assign(u1.begin(), u1.end());
    est.u2.assign(u2.begin(), u2.end());
    return est;
}

/// Frank parameter of two raw channels after the probability integral transform.
inline double channel_pair_theta(std::span<const double> a, std::span<const double> b, const CopulaOptions& opt = {}) {
    const auto u1 = pit(a);
    const auto u2 = pit(b);
    return frank_theta(u1, u2, opt).theta;
}

}  // namespace neoeeg::features
