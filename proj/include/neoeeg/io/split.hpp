#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "neoeeg/errors.hpp"

namespace neoeeg::io {

struct DatasetSplit {
    std::set<std::string> train;
    std::set<std::string> test;
    std::uint64_t seed = 0;
};

template <class T>
concept SubjectTagged = requires(const T& e) {
    { e.epoch_id } -> std::convertible_to<std::string>;
    { e.subject_id } -> std::convertible_to<std::string>;
};

/// Lightweight epoch reference for splitting without loading signals.
struct EpochRef {
    std::string epoch_id;
    std::string subject_id;
};

/// Unbiased index in [0, n) from a 64-bit Mersenne twister, portable across standard libraries.
inline std::size_t bounded_draw(std::mt19937_64& rng, std::size_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % static_cast<std::uint64_t>(n);
    std::uint64_t r;
    do r = rng();
    while (r >= limit);
    return static_cast<std::size_t>(r % n);
}

/// Splits at subject granularity: subjects are shuffled with the seed and the train side is
/// filled greedily until its epoch count is as close as possible to the target fraction.
template <SubjectTagged Epoch>
DatasetSplit split_by_subject(std::span<const Epoch> epochs, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw SplitError("train fraction must lie in (0, 1)");
    std::map<std::string, std::vector<std::string>> by_subject;
    for (const auto& e : epochs) by_subject[std::string(e.subject_id)].push_back(std::string(e.epoch_id));
    if (by_subject.size() < 2) throw SplitError("need at least two distinct subjects to split");

    std::vector<std::string> subjects;
    for (const auto& [s, _] : by_subject) subjects.push_back(s);
    std::mt19937_64 rng(seed);
    for (std::size_t i = subjects.size() - 1; i > 0; --i) std::swap(subjects[i], subjects[bounded_draw(rng, i + 1)]);

    const double target = train_fraction * static_cast<double>(epochs.size());
    DatasetSplit split;
    split.seed = seed;
    double in_train = 0;
    std::size_t taken = 0;
    for (std::size_t i = 0; i < subjects.size(); ++i) {
        const auto& s = subjects[i];
        const double n = static_cast<double>(by_subject[s].size());
        const bool must_take = taken == 0;
        const bool must_leave = i + 1 == subjects.size() && split.test.empty();
        const bool closer = std::abs(in_train + n - target) < std::abs(in_train - target);
        if (!must_leave && (must_take || (in_train < target && closer))) {
            for (const auto& id : by_subject[s]) split.train.insert(id);
            in_train += n;
            ++taken;
        } else {
            for (const auto& id : by_subject[s]) split.test.insert(id);
        }
    }
    return split;
}

template <SubjectTagged Epoch>
DatasetSplit split_by_subject(const std::vector<Epoch>& epochs, double train_fraction, std::uint64_t seed) {
    return split_by_subject(std::span<const Epoch>(epochs), train_fraction, seed);
}

}  // namespace neoeeg::io
