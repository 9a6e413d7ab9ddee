#pragma once

// Synthetic neonatal EEG with grade-dependent continuity and amplitude, for demos and tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "neoeeg/io/recording.hpp"
#include "neoeeg/io/split.hpp"

namespace neoeeg::synth {

inline const std::vector<std::string> kElectrodes{"F3", "F4", "C3", "C4", "Cz", "T3", "T4", "O1", "O2"};

struct SubjectTraits {
    double gain = 1.0;
    std::vector<double> electrode_gain;
};

struct SynthOptions {
    double fs = 64.0;
    double duration_s = 3600.0;
};

namespace synth_detail {

/// Unit-variance AR(1) noise, a crude stand-in for the low-frequency dominated EEG spectrum.
inline std::vector<double> ar1(std::mt19937_64& rng, std::size_t n, double phi) {
    std::normal_distribution<double> g;
    std::vector<double> x(n);
    const double scale = std::sqrt(1.0 - phi * phi);
    double prev = g(rng);
    for (auto& v : x) {
        prev = phi * prev + scale * g(rng);
        v = prev;
    }
    return x;
}

/// Amplitude envelope alternating bursts and inter-burst intervals.
struct Pattern {
    double burst_uv_lo, burst_uv_hi;
    double burst_s_lo, burst_s_hi;
    double ibi_uv_lo, ibi_uv_hi;
    double ibi_s_lo, ibi_s_hi;
    bool continuous;
};

inline Pattern pattern_for(int grade) {
    switch (grade) {
        case 1: return {35, 60, 0, 0, 35, 60, 0, 0, true};
        case 2: return {50, 90, 3, 8, 12, 22, 10, 20, false};
        case 3: return {25, 45, 1.5, 4, 2, 5, 20, 50, false};
        default: return {3, 7, 0, 0, 2.0, 6.0, 0, 0, true};
    }
}

inline std::vector<double> envelope(std::mt19937_64& rng, int grade, std::size_t n, double fs) {
    const Pattern p = pattern_for(grade);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto draw = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };
    std::vector<double> a(n);
    if (p.continuous) {
        // Slowly wandering level around a per-epoch mean.
        const double level = draw(p.ibi_uv_lo, p.ibi_uv_hi);
        const auto wobble = ar1(rng, n / static_cast<std::size_t>(fs) + 2, 0.98);
        for (std::size_t i = 0; i < n; ++i) a[i] = level * (1.0 + 0.1 * wobble[static_cast<std::size_t>(double(i) / fs)]);
        return a;
    }
    const double ibi_level = draw(p.ibi_uv_lo, p.ibi_uv_hi);
    std::size_t i = static_cast<std::size_t>(draw(0, p.ibi_s_hi) * fs);
    std::fill(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(std::min(i, n)), ibi_level);
    while (i < n) {
        const auto blen = static_cast<std::size_t>(draw(p.burst_s_lo, p.burst_s_hi) * fs);
        const double amp = draw(p.burst_uv_lo, p.burst_uv_hi);
        for (std::size_t k = 0; k < blen && i < n; ++k, ++i) a[i] = amp;
        const auto glen = static_cast<std::size_t>(draw(p.ibi_s_lo, p.ibi_s_hi) * fs);
        for (std::size_t k = 0; k < glen && i < n; ++k, ++i) a[i] = ibi_level;
    }
    return a;
}

}  // namespace synth_detail

inline SubjectTraits draw_subject(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    SubjectTraits t;
    t.gain = 0.8 + 0.4 * u(rng);
    for (std::size_t c = 0; c < kElectrodes.size(); ++c) t.electrode_gain.push_back(0.6 + 0.8 * u(rng));
    return t;
}

/// One raw multichannel epoch (electrode labels, µV) of the given grade.
inline io::Recording synthesize_epoch(int grade, const SubjectTraits& subject, std::uint64_t seed,
                                      const SynthOptions& opt = {}) {
    std::mt19937_64 rng(seed);
    const auto n = static_cast<std::size_t>(std::llround(opt.duration_s * opt.fs));
    const auto env = synth_detail::envelope(rng, grade, n, opt.fs);
    const auto shared = synth_detail::ar1(rng, n, 0.9);
    io::Recording rec;
    rec.fs = opt.fs;
    rec.channel_labels = kElectrodes;
    for (std::size_t c = 0; c < kElectrodes.size(); ++c) {
        const auto own = synth_detail::ar1(rng, n, 0.9);
        std::vector<double> x(n);
        const double g = subject.gain * subject.electrode_gain[c];
        for (std::size_t i = 0; i < n; ++i) x[i] = env[i] * g * (0.6 * shared[i] + 0.8 * own[i]);
        rec.samples.push_back(std::move(x));
    }
    return rec;
}

struct SyntheticEpoch {
    std::string epoch_id;
    std::string subject_id;
    int grade = 0;
    std::uint64_t seed = 0;
    SubjectTraits subject;
};

/// Corpus plan: `per_grade` epochs of each grade spread over subjects contributing
/// `epochs_per_subject` epochs each. Signals are generated on demand from the seeds.
inline std::vector<SyntheticEpoch> plan_corpus(std::size_t per_grade, std::size_t epochs_per_subject,
                                               std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<int> grades;
    for (int g = 1; g <= 4; ++g) grades.insert(grades.end(), per_grade, g);
    for (std::size_t i = grades.size() - 1; i > 0; --i) std::swap(grades[i], grades[io::bounded_draw(rng, i + 1)]);
    std::vector<SyntheticEpoch> out;
    SubjectTraits traits;
    for (std::size_t i = 0; i < grades.size(); ++i) {
        const std::size_t subject = i / std::max<std::size_t>(1, epochs_per_subject);
        if (i % std::max<std::size_t>(1, epochs_per_subject) == 0) traits = draw_subject(rng);
        char id[32], sid[32];
        std::snprintf(id, sizeof id, "ep%04zu", i + 1);
        std::snprintf(sid, sizeof sid, "sub%03zu", subject + 1);
        out.push_back({id, sid, grades[i], rng(), traits});
    }
    return out;
}

inline io::Recording render(const SyntheticEpoch& e, const SynthOptions& opt = {}) {
    auto rec = synthesize_epoch(e.grade, e.subject, e.seed, opt);
    rec.subject_id = e.subject_id;
    return rec;
}

}  // namespace neoeeg::synth
