#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/SVD>

#include "neoeeg/errors.hpp"

namespace neoeeg::features {

/// Largest singular value of a channel-by-sample matrix given as rows.
inline double max_singular_value(const std::vector<std::vector<double>>& rows, std::size_t start, std::size_t count) {
    if (rows.size() < 2) throw FeatureError("SVD feature needs at least two channels");
    if (count < rows.size()) throw FeatureError("window has fewer samples than channels");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(count));
    for (std::size_t c = 0; c < rows.size(); ++c) {
        if (rows[c].size() < start + count) throw FeatureError("channel shorter than the SVD window");
        for (std::size_t i = 0; i < count; ++i)
            m(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(i)) = rows[c][start + i];
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

/// Per-window largest singular value over non-overlapping windows.
inline std::vector<double> windowed_singular_values(const std::vector<std::vector<double>>& channels, double fs,
                                                    double window_s) {
    if (channels.empty()) throw FeatureError("SVD feature needs at least two channels");
    const auto w = static_cast<std::size_t>(std::llround(window_s * fs));
    const std::size_t len = channels.front().size();
    if (w == 0 || w > len) throw FeatureError("SVD window does not fit in the epoch");
    std::vector<double> out;
    for (std::size_t s = 0; s + w <= len; s += w) out.push_back(max_singular_value(channels, s, w));
    return out;
}

/// Maximum over windows of the largest singular value.
inline double svd_max_singular(const std::vector<std::vector<double>>& channels, double fs, double window_s = 4.0) {
    const auto v = windowed_singular_values(channels, fs, window_s);
    return *std::max_element(v.begin(), v.end());
}

}  // namespace neoeeg::features
