#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "neoeeg/errors.hpp"

namespace neoeeg::grader {

/// Centred moving median over `window_s` of segments spaced `step_s` apart; near the edges the
/// window shrinks symmetrically so it always has odd length.
inline std::vector<int> median_smooth(std::span<const int> labels, double window_s = 210.0, double step_s = 30.0) {
    if (!(step_s > 0) || !(window_s > 0)) throw Error("median_smooth needs positive window and step");
    auto span = static_cast<std::size_t>(std::llround(window_s / step_s));
    if (span % 2 == 0) ++span;
    const std::size_t half = span / 2;
    std::vector<int> out(labels.size());
    std::vector<int> buf;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const std::size_t h = std::min({half, i, labels.size() - 1 - i});
        buf.assign(labels.begin() + static_cast<std::ptrdiff_t>(i - h), labels.begin() + static_cast<std::ptrdiff_t>(i + h + 1));
        std::nth_element(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(h), buf.end());
        out[i] = buf[h];
    }
    return out;
}

/// Modal grade; ties go to the more severe (higher) grade.
inline int majority_vote(std::span<const int> labels) {
    if (labels.empty()) throw Error("majority_vote needs at least one label");
    std::array<std::size_t, 5> counts{};
    for (int g : labels) {
        if (g < 1 || g > 4) throw Error("grade " + std::to_string(g) + " outside 1-4");
        ++counts[static_cast<std::size_t>(g)];
    }
    int best = 4;
    for (int g = 4; g >= 1; --g)
        if (counts[static_cast<std::size_t>(g)] > counts[static_cast<std::size_t>(best)]) best = g;
    return best;
}

}  // namespace neoeeg::grader
