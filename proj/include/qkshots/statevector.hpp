// Dense pure-state simulator used to embed data points.
//
// Qubit k corresponds to bit k of the basis-state index (qubit 0 is the least
// significant bit). States are values: every operation returns a new state.

#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qkshots/errors.hpp"

namespace qkshots {

using Complex = std::complex<double>;

inline constexpr int kDefaultQubitCap = 14;

class StateVector {
public:
    // Takes ownership of the amplitudes; their count must be 2^n_qubits.
    StateVector(int n_qubits, std::vector<Complex> amplitudes)
        : n_qubits_(n_qubits), amplitudes_(std::move(amplitudes)) {
        if (n_qubits_ < 1 || n_qubits_ > 62) {
            throw ConfigError("StateVector: n_qubits must be in [1, 62], got " + std::to_string(n_qubits_));
        }
        if (amplitudes_.size() != (std::size_t{1} << n_qubits_)) {
            throw ShapeError("StateVector: expected " + std::to_string(std::size_t{1} << n_qubits_) +
                             " amplitudes, got " + std::to_string(amplitudes_.size()));
        }
    }

    int n_qubits() const noexcept { return n_qubits_; }
    std::size_t dimension() const noexcept { return amplitudes_.size(); }
    std::span<const Complex> amplitudes() const noexcept { return amplitudes_; }
    const Complex& operator[](std::size_t i) const { return amplitudes_[i]; }

    double norm_squared() const noexcept {
        double total = 0.0;
        for (const Complex& a : amplitudes_) {
            total += std::norm(a);
        }
        return total;
    }

private:
    int n_qubits_;
    std::vector<Complex> amplitudes_;
};

// 2x2 single-qubit density matrix. The three independent real components are
// diag = rho_00, re = Re(rho_01), im = Im(rho_01).
class ReducedDensityMatrix {
public:
    constexpr ReducedDensityMatrix() = default;
    constexpr ReducedDensityMatrix(double diag, double re, double im) : diag_(diag), re_(re), im_(im) {}

    static constexpr ReducedDensityMatrix maximally_mixed() { return {0.5, 0.0, 0.0}; }

    constexpr double diag() const noexcept { return diag_; }
    constexpr double re() const noexcept { return re_; }
    constexpr double im() const noexcept { return im_; }

    std::array<std::array<Complex, 2>, 2> entries() const {
        return {{{Complex{diag_, 0.0}, Complex{re_, im_}}, {Complex{re_, -im_}, Complex{1.0 - diag_, 0.0}}}};
    }

    double trace() const noexcept { return 1.0; }

    // Distance of the Bloch vector from the centre; eigenvalues are 1/2 +- radius.
    double bloch_radius() const noexcept {
        const double dz = diag_ - 0.5;
        return std::sqrt(dz * dz + re_ * re_ + im_ * im_);
    }
    double min_eigenvalue() const noexcept { return 0.5 - bloch_radius(); }
    double max_eigenvalue() const noexcept { return 0.5 + bloch_radius(); }

    // Squared Schatten 2-norm of (a - b): 2 [(d_D)^2 + (d_R)^2 + (d_I)^2].
    friend double hs_distance_squared(const ReducedDensityMatrix& a, const ReducedDensityMatrix& b) {
        const double dd = a.diag_ - b.diag_;
        const double dr = a.re_ - b.re_;
        const double di = a.im_ - b.im_;
        return 2.0 * (dd * dd + dr * dr + di * di);
    }

    friend bool operator==(const ReducedDensityMatrix&, const ReducedDensityMatrix&) = default;

private:
    double diag_ = 1.0;
    double re_ = 0.0;
    double im_ = 0.0;
};

// |0...0> on n qubits.
inline StateVector vacuum_state(int n, int cap = kDefaultQubitCap) {
    if (n < 1 || n > cap) {
        throw ConfigError("vacuum_state: n must be in [1, " + std::to_string(cap) + "], got " + std::to_string(n));
    }
    std::vector<Complex> amps(std::size_t{1} << n, Complex{0.0, 0.0});
    amps[0] = Complex{1.0, 0.0};
    return StateVector(n, std::move(amps));
}

namespace detail {

inline void hadamard_in_place(std::vector<Complex>& amps, int qubit) {
    constexpr double kInvSqrt2 = 0.70710678118654752440;
    const std::size_t stride = std::size_t{1} << qubit;
    const std::size_t dim = amps.size();
    for (std::size_t block = 0; block < dim; block += 2 * stride) {
        for (std::size_t i = block; i < block + stride; ++i) {
            const Complex a0 = amps[i];
            const Complex a1 = amps[i + stride];
            amps[i] = (a0 + a1) * kInvSqrt2;
            amps[i + stride] = (a0 - a1) * kInvSqrt2;
        }
    }
}

inline std::vector<Complex> copy_amplitudes(const StateVector& s) {
    const auto span = s.amplitudes();
    return {span.begin(), span.end()};
}

inline void check_qubit(const StateVector& s, int qubit, const char* what) {
    if (qubit < 0 || qubit >= s.n_qubits()) {
        throw IndexError(std::string(what) + ": qubit " + std::to_string(qubit) + " out of range for " +
                         std::to_string(s.n_qubits()) + " qubits");
    }
}

}  // namespace detail

// H applied to every qubit.
inline StateVector apply_hadamard_layer(const StateVector& s) {
    auto amps = detail::copy_amplitudes(s);
    for (int q = 0; q < s.n_qubits(); ++q) {
        detail::hadamard_in_place(amps, q);
    }
    return StateVector(s.n_qubits(), std::move(amps));
}

inline StateVector apply_hadamard(const StateVector& s, int qubit) {
    detail::check_qubit(s, qubit, "apply_hadamard");
    auto amps = detail::copy_amplitudes(s);
    detail::hadamard_in_place(amps, qubit);
    return StateVector(s.n_qubits(), std::move(amps));
}

// S^dagger = diag(1, -i) on one qubit.
inline StateVector apply_s_dagger(const StateVector& s, int qubit) {
    detail::check_qubit(s, qubit, "apply_s_dagger");
    auto amps = detail::copy_amplitudes(s);
    const std::size_t mask = std::size_t{1} << qubit;
    for (std::size_t i = 0; i < amps.size(); ++i) {
        if (i & mask) {
            amps[i] *= Complex{0.0, -1.0};
        }
    }
    return StateVector(s.n_qubits(), std::move(amps));
}

// Multiplies amplitude i by exp(i * phases[i]).
inline StateVector apply_diagonal_phase(const StateVector& s, std::span<const double> phases) {
    if (phases.size() != s.dimension()) {
        throw ShapeError("apply_diagonal_phase: expected " + std::to_string(s.dimension()) + " phases, got " +
                         std::to_string(phases.size()));
    }
    auto amps = detail::copy_amplitudes(s);
    for (std::size_t i = 0; i < amps.size(); ++i) {
        amps[i] *= std::polar(1.0, phases[i]);
    }
    return StateVector(s.n_qubits(), std::move(amps));
}

// <b|a> = sum_i conj(b_i) a_i
inline Complex inner_product(const StateVector& a, const StateVector& b) {
    if (a.n_qubits() != b.n_qubits()) {
        throw ShapeError("inner_product: qubit counts differ (" + std::to_string(a.n_qubits()) + " vs " +
                         std::to_string(b.n_qubits()) + ")");
    }
    const auto x = a.amplitudes();
    const auto y = b.amplitudes();
    Complex acc{0.0, 0.0};
    for (std::size_t i = 0; i < x.size(); ++i) {
        acc += std::conj(y[i]) * x[i];
    }
    return acc;
}

// Partial trace over every qubit except k, in O(2^n).
inline ReducedDensityMatrix reduce_to_qubit(const StateVector& s, int k) {
    detail::check_qubit(s, k, "reduce_to_qubit");
    const auto amps = s.amplitudes();
    const std::size_t mask = std::size_t{1} << k;
    double p0 = 0.0;
    double p1 = 0.0;
    Complex off{0.0, 0.0};
    for (std::size_t i = 0; i < amps.size(); ++i) {
        if (i & mask) {
            continue;
        }
        const Complex a0 = amps[i];
        const Complex a1 = amps[i | mask];
        p0 += std::norm(a0);
        p1 += std::norm(a1);
        off += a0 * std::conj(a1);
    }
    // Renormalize the diagonal so the trace is exactly one.
    const double total = p0 + p1;
    return {p0 / total, off.real() / total, off.imag() / total};
}

inline std::vector<ReducedDensityMatrix> reduce_all_qubits(const StateVector& s) {
    std::vector<ReducedDensityMatrix> out;
    out.reserve(static_cast<std::size_t>(s.n_qubits()));
    for (int k = 0; k < s.n_qubits(); ++k) {
        out.push_back(reduce_to_qubit(s, k));
    }
    return out;
}

}  // namespace qkshots
