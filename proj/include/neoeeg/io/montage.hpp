#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "neoeeg/errors.hpp"
#include "neoeeg/io/recording.hpp"

namespace neoeeg::io {

/// One derived channel. Either electrode may list alternates separated by '/', e.g. "O1/P3";
/// the first one present in the recording is used.
struct MontagePair {
    std::string anode;
    std::string cathode;

    bool operator==(const MontagePair&) const = default;
};

struct MontageSpec {
    std::string name;
    std::vector<MontagePair> pairs;
    /// Hemisphere pairing as (left index, right index) into `pairs`, used by connectivity features.
    std::vector<std::pair<std::size_t, std::size_t>> hemisphere_pairs;

    bool operator==(const MontageSpec&) const = default;
};

/// Four-channel montage used by the per-segment CNN grader.
inline MontageSpec cnn_montage() {
    return {"cnn", {{"F3", "C3"}, {"F4", "C4"}, {"T3", "O1/P3"}, {"T4", "O2/P4"}}, {{0, 1}, {2, 3}}};
}

/// Eight-channel montage for the qEEG feature set. The first pair is kept as F3-C4, the
/// published listing; pass a custom spec to use F4-C4 instead.
inline MontageSpec neural_montage() {
    return {"neural",
            {{"F3", "C4"}, {"F3", "C3"}, {"C4", "T4"}, {"C3", "T3"},
             {"C4", "Cz"}, {"Cz", "C3"}, {"C4", "O2/P4"}, {"C3", "O1/P3"}},
            {{1, 0}, {3, 2}, {5, 4}, {7, 6}}};
}

/// Planes of the GASF image, in R/G/B order.
inline MontageSpec gasf_montage() { return {"gasf", {{"F4", "C4"}, {"F3", "C3"}, {"C4", "T4"}}, {}}; }

namespace montage_detail {

/// Mirror electrode across the midline: odd index <-> even index, midline unchanged.
inline std::optional<std::string> mirror(std::string_view electrode) {
    std::string e = electrode_key(electrode.substr(0, electrode.find('/')));
    if (e.empty()) return std::nullopt;
    if (e.back() == 'Z') return e;
    std::size_t i = e.size();
    while (i > 0 && std::isdigit(static_cast<unsigned char>(e[i - 1]))) --i;
    if (i == e.size()) return std::nullopt;
    const int n = std::stoi(e.substr(i));
    if (n <= 0) return std::nullopt;
    return e.substr(0, i) + std::to_string(n % 2 ? n + 1 : n - 1);
}

inline bool is_left(std::string_view electrode) {
    const std::string e = electrode_key(electrode.substr(0, electrode.find('/')));
    return !e.empty() && std::isdigit(static_cast<unsigned char>(e.back())) && (e.back() - '0') % 2 == 1;
}

inline void infer_hemisphere_pairs(MontageSpec& spec) {
    for (std::size_t i = 0; i < spec.pairs.size(); ++i) {
        const auto& p = spec.pairs[i];
        if (!(is_left(p.anode) || is_left(p.cathode))) continue;
        auto ma = mirror(p.anode);
        auto mc = mirror(p.cathode);
        if (!ma || !mc) continue;
        for (std::size_t j = 0; j < spec.pairs.size(); ++j) {
            if (j == i) continue;
            const auto a = electrode_key(spec.pairs[j].anode.substr(0, spec.pairs[j].anode.find('/')));
            const auto c = electrode_key(spec.pairs[j].cathode.substr(0, spec.pairs[j].cathode.find('/')));
            if ((a == *ma && c == *mc) || (a == *mc && c == *ma)) {
                spec.hemisphere_pairs.emplace_back(i, j);
                break;
            }
        }
    }
}

}  // namespace montage_detail

/// Parses "F3-C3,F4-C4,..." into a custom spec with inferred hemisphere pairing.
inline MontageSpec parse_montage(std::string_view text) {
    MontageSpec spec{"custom", {}, {}};
    std::size_t start = 0;
    while (start <= text.size()) {
        auto comma = text.find(',', start);
        auto item = trim(text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (!item.empty()) {
            auto dash = item.find('-');
            if (dash == std::string::npos || dash == 0 || dash + 1 == item.size())
                throw MontageError("montage pair '" + item + "' is not of the form A-B");
            spec.pairs.push_back({trim(item.substr(0, dash)), trim(item.substr(dash + 1))});
        }
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    if (spec.pairs.empty()) throw MontageError("montage has no pairs");
    montage_detail::infer_hemisphere_pairs(spec);
    return spec;
}

/// Built-in montage by name ("cnn", "neural", "gasf") or a custom pair list.
inline MontageSpec montage_by_name(std::string_view name) {
    if (name == "cnn") return cnn_montage();
    if (name == "neural") return neural_montage();
    if (name == "gasf") return gasf_montage();
    return parse_montage(name);
}

/// Resolves an electrode (with '/' alternates) against a recording; returns the channel index.
inline std::size_t resolve_electrode(const Recording& rec, std::string_view electrode) {
    std::size_t start = 0;
    while (true) {
        auto slash = electrode.find('/', start);
        auto candidate = electrode.substr(start, slash == std::string_view::npos ? std::string_view::npos : slash - start);
        if (auto idx = find_channel(rec, candidate)) return *idx;
        if (slash == std::string_view::npos) break;
        start = slash + 1;
    }
    throw MontageError("montage references channel '" + std::string(electrode) + "' missing from the recording");
}

/// Bipolar derivation: output channel k = anode_k - cathode_k, labelled "A-B".
inline Recording derive_montage(const Recording& rec, const MontageSpec& spec) {
    Recording out;
    out.fs = rec.fs;
    out.subject_id = rec.subject_id;
    out.start_offset = rec.start_offset;
    for (const auto& p : spec.pairs) {
        const std::size_t a = resolve_electrode(rec, p.anode);
        const std::size_t c = resolve_electrode(rec, p.cathode);
        const auto& xa = rec.samples[a];
        const auto& xc = rec.samples[c];
        std::vector<double> d(xa.size());
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = xa[i] - xc[i];
        out.channel_labels.push_back(trim(rec.channel_labels[a]) + "-" + trim(rec.channel_labels[c]));
        out.samples.push_back(std::move(d));
    }
    return out;
}

}  // namespace neoeeg::io
