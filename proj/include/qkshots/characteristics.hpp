// Feature-map diagnostics over a dataset: expressibility relative to the Haar
// second moment, and mean single-qubit relative entropy to I/2.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "qkshots/errors.hpp"
#include "qkshots/feature_map.hpp"
#include "qkshots/kernels.hpp"
#include "qkshots/parallel.hpp"
#include "qkshots/statevector.hpp"

namespace qkshots {

// 1 / (2^(n-1) (2^n + 1)): mean squared fidelity of Haar-random state pairs.
inline double haar_second_moment(int n_qubits) {
    const double dim = std::ldexp(1.0, n_qubits);
    return 1.0 / (0.5 * dim * (dim + 1.0));
}

// (1/m^2) sum over all ordered pairs (i = j included) of |<psi_j|psi_i>|^4,
// minus the Haar value.
inline double expressibility(std::span<const DataPoint> points, const FeatureMapConfig& cfg, unsigned threads = 1) {
    if (points.empty()) {
        throw ShapeError("expressibility: need at least one data point");
    }
    cfg.validate();
    const auto states = embed_all(points, cfg, threads);
    const std::size_t m = states.size();
    std::vector<double> row_sums(m, 0.0);
    parallel_for(m, threads, [&](std::size_t i) {
        double s = 0.0;
        for (std::size_t j = i + 1; j < m; ++j) {
            const double f = fidelity_kernel(states[i], states[j]);
            s += f * f;
        }
        row_sums[i] = s;
    });
    double total = static_cast<double>(m);  // diagonal terms, fidelity 1
    for (const double s : row_sums) {
        total += 2.0 * s;
    }
    return total / static_cast<double>(m * m) - haar_second_moment(cfg.n_qubits);
}

// S(rho || I/2) in nats from the eigenvalue lambda = 1/2 + Bloch radius:
// lambda ln lambda + (1 - lambda) ln(1 - lambda) + ln 2, with 0 ln 0 = 0.
inline double relative_entropy_to_mixed(const ReducedDensityMatrix& rho) {
    const double lambda = std::clamp(rho.max_eigenvalue(), 0.0, 1.0);
    auto xlogx = [](double x) { return x > 0.0 ? x * std::log(x) : 0.0; };
    return std::clamp(xlogx(lambda) + xlogx(1.0 - lambda) + std::numbers::ln2, 0.0, std::numbers::ln2);
}

// Mean of S(rho_k(x) || I/2) over every qubit k and data point x.
inline double mean_relative_entropy(std::span<const DataPoint> points, const FeatureMapConfig& cfg,
                                    unsigned threads = 1) {
    if (points.empty()) {
        throw ShapeError("mean_relative_entropy: need at least one data point");
    }
    cfg.validate();
    std::vector<double> per_point(points.size(), 0.0);
    parallel_for(points.size(), threads, [&](std::size_t i) {
        const auto reduced = reduce_all_qubits(embed(points[i], cfg));
        double s = 0.0;
        for (const auto& rho : reduced) {
            s += relative_entropy_to_mixed(rho);
        }
        per_point[i] = s / static_cast<double>(reduced.size());
    });
    double total = 0.0;
    for (const double v : per_point) {
        total += v;
    }
    return total / static_cast<double>(points.size());
}

}  // namespace qkshots
