#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "qkshots/errors.hpp"

namespace qkshots {

// Quantile by linear interpolation between order statistics (Hyndman-Fan
// type 7, the numpy/R default). `sorted` must be ascending and non-empty.
inline double quantile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) {
        throw ShapeError("quantile of an empty sample");
    }
    if (!(q >= 0.0 && q <= 1.0)) {
        throw DomainError("quantile level must be in [0, 1]");
    }
    const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline double quantile(std::span<const double> values, double q) {
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    return quantile_sorted(sorted, q);
}

inline double mean(std::span<const double> values) {
    if (values.empty()) {
        throw ShapeError("mean of an empty sample");
    }
    double total = 0.0;
    for (const double v : values) {
        total += v;
    }
    return total / static_cast<double>(values.size());
}

// Population standard deviation (divides by the sample size).
inline double population_stddev(std::span<const double> values) {
    const double mu = mean(values);
    double ss = 0.0;
    for (const double v : values) {
        ss += (v - mu) * (v - mu);
    }
    return std::sqrt(ss / static_cast<double>(values.size()));
}

}  // namespace qkshots
