// Exact (infinite-shot) fidelity and projected quantum kernels.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qkshots/errors.hpp"
#include "qkshots/feature_map.hpp"
#include "qkshots/parallel.hpp"
#include "qkshots/statevector.hpp"
#include "qkshots/statistics.hpp"

namespace qkshots {

enum class KernelFamily { FidelityQ, ProjectedQ };

inline std::string_view to_string(KernelFamily f) {
    return f == KernelFamily::FidelityQ ? "fidelity" : "projected";
}

inline KernelFamily parse_kernel_family(std::string_view s) {
    if (s == "fidelity" || s == "FQ" || s == "fq") {
        return KernelFamily::FidelityQ;
    }
    if (s == "projected" || s == "PQ" || s == "pq") {
        return KernelFamily::ProjectedQ;
    }
    throw ConfigError("unknown kernel family '" + std::string(s) + "' (expected \"fidelity\" or \"projected\")");
}

inline constexpr double kDefaultGamma = 1.0;

using DataPoint = std::vector<double>;
using ReducedStates = std::vector<ReducedDensityMatrix>;

// Dense m x m Gram matrix plus the settings that produced it.
struct KernelMatrix {
    std::size_t m = 0;
    std::vector<double> values;  // row-major
    KernelFamily family = KernelFamily::FidelityQ;
    double gamma = kDefaultGamma;
    FeatureMapConfig config{};
    std::string dataset_id;

    KernelMatrix() = default;
    KernelMatrix(std::size_t size, KernelFamily fam, double g, FeatureMapConfig cfg)
        : m(size), values(size * size, 0.0), family(fam), gamma(g), config(cfg) {}

    double operator()(std::size_t i, std::size_t j) const { return values[i * m + j]; }

    void set_symmetric(std::size_t i, std::size_t j, double v) {
        values[i * m + j] = v;
        values[j * m + i] = v;
    }

    // The m(m-1)/2 strictly-upper-triangle entries, row by row.
    std::vector<double> off_diagonal() const {
        std::vector<double> out;
        out.reserve(m * (m - 1) / 2);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = i + 1; j < m; ++j) {
                out.push_back((*this)(i, j));
            }
        }
        return out;
    }
};

inline double fidelity_kernel(const StateVector& a, const StateVector& b) {
    return std::norm(inner_product(a, b));
}

inline double projected_kernel(std::span<const ReducedDensityMatrix> a, std::span<const ReducedDensityMatrix> b,
                               double gamma) {
    if (a.size() != b.size() || a.empty()) {
        throw ShapeError("projected_kernel: reduced-state lists must be non-empty and of equal length (" +
                         std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
    }
    if (!(gamma > 0.0)) {
        throw ConfigError("projected_kernel: gamma must be > 0");
    }
    double distance = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        distance += hs_distance_squared(a[k], b[k]);
    }
    return std::exp(-gamma * distance);
}

namespace detail {

inline std::vector<std::pair<std::size_t, std::size_t>> upper_pairs(std::size_t m) {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    pairs.reserve(m * (m - 1) / 2);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            pairs.emplace_back(i, j);
        }
    }
    return pairs;
}

}  // namespace detail

inline std::vector<StateVector> embed_all(std::span<const DataPoint> points, const FeatureMapConfig& cfg,
                                          unsigned threads = 1) {
    std::vector<std::optional<StateVector>> slots(points.size());
    parallel_for(points.size(), threads, [&](std::size_t i) { slots[i].emplace(embed(points[i], cfg)); });
    std::vector<StateVector> states;
    states.reserve(points.size());
    for (auto& s : slots) {
        states.push_back(std::move(*s));
    }
    return states;
}

inline std::vector<ReducedStates> reduce_all(std::span<const StateVector> states, unsigned threads = 1) {
    std::vector<ReducedStates> out(states.size());
    parallel_for(states.size(), threads, [&](std::size_t i) { out[i] = reduce_all_qubits(states[i]); });
    return out;
}

inline KernelMatrix fidelity_gram(std::span<const StateVector> states, const FeatureMapConfig& cfg,
                                  unsigned threads = 1) {
    KernelMatrix k(states.size(), KernelFamily::FidelityQ, kDefaultGamma, cfg);
    const auto pairs = detail::upper_pairs(states.size());
    parallel_for(pairs.size(), threads, [&](std::size_t p) {
        const auto [i, j] = pairs[p];
        k.set_symmetric(i, j, fidelity_kernel(states[i], states[j]));
    });
    for (std::size_t i = 0; i < k.m; ++i) {
        k.set_symmetric(i, i, 1.0);
    }
    return k;
}

inline KernelMatrix projected_gram(std::span<const ReducedStates> reduced, double gamma, const FeatureMapConfig& cfg,
                                   unsigned threads = 1) {
    KernelMatrix k(reduced.size(), KernelFamily::ProjectedQ, gamma, cfg);
    const auto pairs = detail::upper_pairs(reduced.size());
    parallel_for(pairs.size(), threads, [&](std::size_t p) {
        const auto [i, j] = pairs[p];
        k.set_symmetric(i, j, projected_kernel(reduced[i], reduced[j], gamma));
    });
    for (std::size_t i = 0; i < k.m; ++i) {
        k.set_symmetric(i, i, 1.0);
    }
    return k;
}

// Embeds every point once and builds the full symmetric Gram matrix.
inline KernelMatrix gram_matrix(std::span<const DataPoint> points, const FeatureMapConfig& cfg, KernelFamily family,
                                double gamma = kDefaultGamma, unsigned threads = 1) {
    if (points.size() < 2) {
        throw ShapeError("gram_matrix: need at least 2 data points, got " + std::to_string(points.size()));
    }
    cfg.validate();
    const auto states = embed_all(points, cfg, threads);
    if (family == KernelFamily::FidelityQ) {
        return fidelity_gram(states, cfg, threads);
    }
    if (!(gamma > 0.0)) {
        throw ConfigError("gram_matrix: gamma must be > 0");
    }
    const auto reduced = reduce_all(states, threads);
    return projected_gram(reduced, gamma, cfg, threads);
}

struct KernelStatistics {
    std::size_t count = 0;
    double mean = 0.0;
    double std = 0.0;  // population standard deviation
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    double iqr = 0.0;
    // Mean of ln(kappa) over the off-diagonal entries (projected kernels only).
    // -infinity when some entry is exactly zero; log_mean_warning is then set.
    std::optional<double> log_mean;
    bool log_mean_warning = false;
};

inline KernelStatistics statistics_of(std::span<const double> values, bool with_log_mean) {
    if (values.empty()) {
        throw ShapeError("kernel statistics need at least one off-diagonal entry");
    }
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    KernelStatistics s;
    s.count = sorted.size();
    s.mean = mean(sorted);
    s.std = population_stddev(sorted);
    s.median = quantile_sorted(sorted, 0.5);
    s.q1 = quantile_sorted(sorted, 0.25);
    s.q3 = quantile_sorted(sorted, 0.75);
    s.iqr = s.q3 - s.q1;
    if (with_log_mean) {
        double total = 0.0;
        for (const double v : sorted) {
            if (v <= 0.0) {
                s.log_mean = -std::numeric_limits<double>::infinity();
                s.log_mean_warning = true;
                return s;
            }
            total += std::log(v);
        }
        s.log_mean = total / static_cast<double>(sorted.size());
    }
    return s;
}

// Ensemble statistics over the strictly-upper-triangle entries (diagonal excluded).
inline KernelStatistics kernel_statistics(const KernelMatrix& k) {
    if (k.m < 2) {
        throw ShapeError("kernel_statistics: need m >= 2");
    }
    const auto values = k.off_diagonal();
    return statistics_of(values, k.family == KernelFamily::ProjectedQ);
}

}  // namespace qkshots
