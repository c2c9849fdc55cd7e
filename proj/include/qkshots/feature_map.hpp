// ZZ feature map: r repetitions of [H on every qubit, then the diagonal
// exp(i sum_S phi_S(x) prod_{i in S} Z_i)], with phi_i(x) = x_i and
// phi_ij(x) = (pi - x_i)(pi - x_j) over the pairs of the entanglement strategy.

#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qkshots/errors.hpp"
#include "qkshots/statevector.hpp"

namespace qkshots {

enum class Entanglement { Linear, Full };

inline std::string_view to_string(Entanglement e) {
    return e == Entanglement::Linear ? "linear" : "full";
}

inline Entanglement parse_entanglement(std::string_view s) {
    if (s == "linear") {
        return Entanglement::Linear;
    }
    if (s == "full") {
        return Entanglement::Full;
    }
    throw ConfigError("unknown entanglement strategy '" + std::string(s) + "' (expected \"linear\" or \"full\")");
}

struct FeatureMapConfig {
    int n_qubits = 2;
    int repetitions = 1;
    Entanglement entanglement = Entanglement::Full;
    int qubit_cap = kDefaultQubitCap;

    void validate() const {
        if (n_qubits < 1 || n_qubits > qubit_cap) {
            throw ConfigError("feature map: n_qubits must be in [1, " + std::to_string(qubit_cap) + "], got " +
                              std::to_string(n_qubits));
        }
        if (repetitions < 1) {
            throw ConfigError("feature map: repetitions must be >= 1, got " + std::to_string(repetitions));
        }
    }

    friend bool operator==(const FeatureMapConfig&, const FeatureMapConfig&) = default;
};

struct QubitPair {
    int first;
    int second;
    friend bool operator==(const QubitPair&, const QubitPair&) = default;
};

// Linear: (i, i+1); Full: every i < j in lexicographic order.
inline std::vector<QubitPair> entangling_pairs(int n, Entanglement e) {
    std::vector<QubitPair> pairs;
    if (e == Entanglement::Linear) {
        for (int i = 0; i + 1 < n; ++i) {
            pairs.push_back({i, i + 1});
        }
    } else {
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) {
                pairs.push_back({i, j});
            }
        }
    }
    return pairs;
}

struct PairAngle {
    QubitPair pair;
    double angle;
};

struct EncodingAngles {
    std::vector<double> singles;
    std::vector<PairAngle> pairs;
};

inline EncodingAngles encoding_angles(std::span<const double> x, const FeatureMapConfig& cfg) {
    cfg.validate();
    const auto n = static_cast<std::size_t>(cfg.n_qubits);
    if (x.size() < n) {
        throw ShapeError("encoding_angles: data point has " + std::to_string(x.size()) + " features, need at least " +
                         std::to_string(n));
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(x[i])) {
            throw DomainError("encoding_angles: feature " + std::to_string(i) + " is not finite");
        }
    }
    EncodingAngles out;
    out.singles.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(n));
    for (const QubitPair& p : entangling_pairs(cfg.n_qubits, cfg.entanglement)) {
        const double a = (std::numbers::pi - x[static_cast<std::size_t>(p.first)]) *
                         (std::numbers::pi - x[static_cast<std::size_t>(p.second)]);
        out.pairs.push_back({p, a});
    }
    return out;
}

// Phase of basis state b: sum_i singles[i] z_i(b) + sum_(i,j) angle z_i(b) z_j(b),
// with z_i(b) = +1 when bit i of b is 0 and -1 otherwise.
inline std::vector<double> diagonal_phases(const EncodingAngles& angles, int n) {
    const std::size_t dim = std::size_t{1} << n;
    std::vector<double> phases(dim, 0.0);
    for (std::size_t b = 0; b < dim; ++b) {
        double phase = 0.0;
        for (int i = 0; i < n; ++i) {
            const double z = ((b >> i) & 1U) ? -1.0 : 1.0;
            phase += angles.singles[static_cast<std::size_t>(i)] * z;
        }
        for (const PairAngle& pa : angles.pairs) {
            const bool same = (((b >> pa.pair.first) ^ (b >> pa.pair.second)) & 1U) == 0;
            phase += same ? pa.angle : -pa.angle;
        }
        phases[b] = phase;
    }
    return phases;
}

// U(x)|0> with U(x) = (exp(i sum phi_S Z_S) H^{(x)n})^r.
inline StateVector embed(std::span<const double> x, const FeatureMapConfig& cfg) {
    const EncodingAngles angles = encoding_angles(x, cfg);
    const std::vector<double> phases = diagonal_phases(angles, cfg.n_qubits);
    StateVector state = vacuum_state(cfg.n_qubits, cfg.qubit_cap);
    for (int rep = 0; rep < cfg.repetitions; ++rep) {
        state = apply_diagonal_phase(apply_hadamard_layer(state), phases);
    }
    return state;
}

}  // namespace qkshots
