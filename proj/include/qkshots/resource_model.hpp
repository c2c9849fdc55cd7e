// Runtime and energy of kernel estimation on ideal or surface-code-corrected
// hardware, and a parameterized classical simulation baseline.

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>

#include "qkshots/errors.hpp"
#include "qkshots/feature_map.hpp"
#include "qkshots/kernels.hpp"
#include "qkshots/measurement_sim.hpp"
#include "qkshots/shot_estimator.hpp"

namespace qkshots {

struct HardwareProfile {
    double t_gate = 50e-9;                    // s per physical gate layer
    double t_meas = 100e-9;                   // s per physical measurement
    double p_phys = 1e-3;                     // physical error rate
    double power_per_physical_qubit = 0.030;  // W
    double qubits_per_logical_factor = 2.0;   // physical qubits per logical = factor * d^2

    void validate() const {
        if (!(t_gate > 0.0) || !(t_meas > 0.0) || !(p_phys > 0.0) || !(power_per_physical_qubit > 0.0) ||
            !(qubits_per_logical_factor > 0.0)) {
            throw ConfigError("hardware profile: every field must be > 0");
        }
    }

    std::int64_t physical_qubits_per_logical(int d) const {
        return static_cast<std::int64_t>(std::llround(qubits_per_logical_factor * d * d));
    }
};

// Classical simulation cost flops = c0 2^(alpha n) count, count = m(m-1)/2
// pairs (fidelity) or m points (projected). The exponents default to
// 1.07 / 2.30; c0, flops and watts are placeholders, not measured machine data.
struct ClassicalProfile {
    std::string name = "placeholder";
    double alpha_fq = 1.07;
    double alpha_pq = 2.30;
    // Chosen so that one n=10 fidelity entry costs about as much as 10^4
    // ideal shots of the n=10 linear r=1 circuit. Recalibrate with calibrate_c0.
    double c0 = 6.6e6;
    double flops = 1e12;  // sustained flop/s
    double watts = 1e3;

    double alpha(KernelFamily f) const { return f == KernelFamily::FidelityQ ? alpha_fq : alpha_pq; }

    void validate() const {
        if (!(alpha_fq > 0.0) || !(alpha_pq > 0.0) || !(c0 > 0.0) || !(flops > 0.0) || !(watts > 0.0)) {
            throw ConfigError("classical profile: every field must be > 0");
        }
    }
};

// Gate layers needed to schedule the pairs of one repetition: a path needs
// n-1 sequential layers here; the complete graph is edge-coloured round-robin
// with n-1 colours for even n and n for odd n.
inline int pair_layers(int n, Entanglement e) {
    if (n < 2) {
        return 0;
    }
    if (e == Entanglement::Linear) {
        return n - 1;
    }
    return n % 2 == 0 ? n - 1 : n;
}

// One embedding is r (1 + pair layers); fidelity runs U(y)^dagger U(x), the
// projected family adds one basis-change layer before measuring.
inline int circuit_depth(const FeatureMapConfig& cfg, KernelFamily family) {
    cfg.validate();
    const int embed = cfg.repetitions * (1 + pair_layers(cfg.n_qubits, cfg.entanglement));
    return family == KernelFamily::FidelityQ ? 2 * embed : embed + 1;
}

// p_L = 0.03 (p / 0.01)^((d+1)/2), written as 0.03 p^k 100^k.
inline double logical_error_rate(int d, double p_phys) {
    if (d < 3 || d % 2 == 0) {
        throw DomainError("logical_error_rate: code distance must be odd and >= 3, got " + std::to_string(d));
    }
    if (!(p_phys > 0.0)) {
        throw DomainError("logical_error_rate: p_phys must be > 0");
    }
    const double k = (d + 1) / 2;
    return 0.03 * std::pow(p_phys, k) * std::pow(100.0, k);
}

inline constexpr int kMaxCodeDistance = 51;

namespace detail {

inline std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

}  // namespace detail

// Smallest odd d >= 3 with n_logical * layers * p_L(d) <= error_budget.
inline int choose_code_distance(double error_budget, std::int64_t n_logical, std::int64_t layers, double p_phys) {
    if (!(error_budget > 0.0 && error_budget < 1.0)) {
        throw DomainError("choose_code_distance: error budget must be in (0, 1), got " + detail::sci(error_budget));
    }
    if (n_logical < 1 || layers < 1) {
        throw DomainError("choose_code_distance: need n_logical >= 1 and layers >= 1");
    }
    if (!(p_phys > 0.0 && p_phys < 0.01)) {
        throw DomainError("choose_code_distance: p_phys = " + detail::sci(p_phys) +
                          " is not below the 0.01 threshold; larger codes do not help");
    }
    const double ops = static_cast<double>(n_logical) * static_cast<double>(layers);
    for (int d = 3; d <= kMaxCodeDistance; d += 2) {
        if (ops * logical_error_rate(d, p_phys) <= error_budget) {
            return d;
        }
    }
    throw DomainError("choose_code_distance: budget " + detail::sci(error_budget) + " needs d > " +
                      std::to_string(kMaxCodeDistance) + " (n_logical*layers = " + detail::sci(ops) +
                      ", p_L(" + std::to_string(kMaxCodeDistance) +
                      ") = " + detail::sci(logical_error_rate(kMaxCodeDistance, p_phys)) + ")");
}

struct QuantumCost {
    std::int64_t total_shots = 0;
    int layers = 0;
    int n_qubits = 0;
    double t_gate_eff = 0.0;
    double t_meas_eff = 0.0;
    double runtime_s = 0.0;
    double energy_j = 0.0;
    std::int64_t physical_qubits = 0;
    std::optional<int> code_distance;
    std::optional<double> logical_error_rate;
};

// runtime = shots (layers t_gate + t_meas); energy = runtime * qubits * power.
// Corrected execution runs every gate and measurement at the logical cycle
// time d (t_gate + t_meas) on n * factor * d^2 physical qubits.
inline QuantumCost quantum_cost_raw(std::int64_t total_shots, int layers, int n_qubits, const HardwareProfile& hw,
                                    bool corrected, double error_budget = 0.0) {
    hw.validate();
    if (total_shots < 1 || layers < 1 || n_qubits < 1) {
        throw DomainError("quantum_cost: shots, layers and qubits must be >= 1");
    }
    QuantumCost c;
    c.total_shots = total_shots;
    c.layers = layers;
    c.n_qubits = n_qubits;
    if (corrected) {
        const int d = choose_code_distance(error_budget, n_qubits, layers, hw.p_phys);
        const double cycle = d * (hw.t_gate + hw.t_meas);
        c.code_distance = d;
        c.logical_error_rate = logical_error_rate(d, hw.p_phys);
        c.t_gate_eff = cycle;
        c.t_meas_eff = cycle;
        c.physical_qubits = static_cast<std::int64_t>(n_qubits) * hw.physical_qubits_per_logical(d);
    } else {
        c.t_gate_eff = hw.t_gate;
        c.t_meas_eff = hw.t_meas;
        c.physical_qubits = n_qubits;
    }
    c.runtime_s = static_cast<double>(total_shots) * (layers * c.t_gate_eff + c.t_meas_eff);
    c.energy_j = c.runtime_s * static_cast<double>(c.physical_qubits) * hw.power_per_physical_qubit;
    return c;
}

// Cost of a whole Gram matrix with N shots per estimated quantity.
inline QuantumCost quantum_cost(std::int64_t shots_per_estimate, const FeatureMapConfig& cfg, KernelFamily family,
                                std::int64_t m, const HardwareProfile& hw, bool corrected,
                                double error_budget = 0.0) {
    return quantum_cost_raw(total_shots(family, m, shots_per_estimate), circuit_depth(cfg, family), cfg.n_qubits, hw,
                            corrected, error_budget);
}

inline QuantumCost quantum_cost(const ShotBudget& budget, const FeatureMapConfig& cfg, KernelFamily family,
                                std::int64_t m, const HardwareProfile& hw, bool corrected,
                                double error_budget = 0.0) {
    if (budget.n_required == kUnboundedShots) {
        throw DomainError("quantum_cost: shot budget is unbounded");
    }
    return quantum_cost(budget.n_required, cfg, family, m, hw, corrected, error_budget);
}

struct ClassicalCost {
    double flops_needed = 0.0;
    double runtime_s = 0.0;
    double energy_j = 0.0;
};

inline double classical_count(KernelFamily family, std::int64_t m) {
    const auto md = static_cast<double>(m);
    return family == KernelFamily::FidelityQ ? md * (md - 1.0) / 2.0 : md;
}

inline ClassicalCost classical_cost(KernelFamily family, int n, std::int64_t m, const ClassicalProfile& p) {
    p.validate();
    if (n < 1 || m < 1) {
        throw DomainError("classical_cost: need n >= 1 and m >= 1");
    }
    ClassicalCost c;
    c.flops_needed = p.c0 * std::exp2(p.alpha(family) * n) * classical_count(family, m);
    c.runtime_s = c.flops_needed / p.flops;
    c.energy_j = c.runtime_s * p.watts;
    return c;
}

// c0 that makes classical_cost reproduce a measured runtime exactly.
inline double calibrate_c0(KernelFamily family, int n, std::int64_t m, double measured_runtime_s,
                           const ClassicalProfile& p) {
    if (!(measured_runtime_s > 0.0)) {
        throw DomainError("calibrate_c0: measured runtime must be > 0");
    }
    return measured_runtime_s * p.flops / (std::exp2(p.alpha(family) * n) * classical_count(family, m));
}

// Smallest n in [n_min, n_max] where quantum_runtime(n) < classical runtime.
template <class QuantumRuntime>
std::optional<int> crossover_n(int n_min, int n_max, KernelFamily family, std::int64_t m, const ClassicalProfile& p,
                               QuantumRuntime&& quantum_runtime) {
    for (int n = n_min; n <= n_max; ++n) {
        if (quantum_runtime(n) < classical_cost(family, n, m, p).runtime_s) {
            return n;
        }
    }
    return std::nullopt;
}

}  // namespace qkshots
