// Finite-shot kernel estimation as binomial sampling, with optional
// depolarizing noise applied to the per-shot success probabilities.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "qkshots/errors.hpp"
#include "qkshots/kernels.hpp"
#include "qkshots/parallel.hpp"
#include "qkshots/rng.hpp"

namespace qkshots {

// With probability p_error a circuit run ends in the maximally mixed state.
struct NoiseModel {
    double p_error = 0.0;

    void validate() const {
        if (!(p_error >= 0.0 && p_error <= 1.0)) {
            throw DomainError("noise model: p_error must be in [0, 1]");
        }
    }

    // (1 - p) q + p q_mixed
    double depolarize(double q, double q_mixed) const { return (1.0 - p_error) * q + p_error * q_mixed; }
};

// Success probability of measuring |0...0> on the maximally mixed n-qubit state.
inline double mixed_vacuum_probability(int n_qubits) {
    return std::ldexp(1.0, -n_qubits);
}

enum class TomographyBasis { D = 0, R = 1, I = 2 };

// Probability of the "0" outcome in each basis:
// D: rho_00, R: Re(rho_01) + 1/2, I: 1/2 - Im(rho_01).
inline std::array<double, 3> measured_probabilities(const ReducedDensityMatrix& rho) {
    return {rho.diag(), rho.re() + 0.5, 0.5 - rho.im()};
}

// Inverse of measured_probabilities.
inline ReducedDensityMatrix from_measured_probabilities(const std::array<double, 3>& m) {
    return {m[0], m[1] - 0.5, 0.5 - m[2]};
}

// Projects estimated components onto the physical set: diag into [0,1], then
// (re, im) scaled radially when diag(1-diag) < re^2 + im^2.
inline ReducedDensityMatrix clip_to_physical(double diag, double re, double im) {
    diag = std::clamp(diag, 0.0, 1.0);
    const double limit = diag * (1.0 - diag);
    const double radius2 = re * re + im * im;
    if (radius2 > limit) {
        const double scale = radius2 > 0.0 ? std::sqrt(limit / radius2) : 0.0;
        re *= scale;
        im *= scale;
    }
    return {diag, re, im};
}

struct ShotResult {
    double estimate = 0.0;
    std::int64_t n_shots = 0;
    std::int64_t successes = 0;
    std::uint64_t seed = 0;
    friend bool operator==(const ShotResult&, const ShotResult&) = default;
};

namespace detail {

inline void check_probability(double q, const char* what) {
    if (!(q >= 0.0 && q <= 1.0)) {
        throw DomainError(std::string(what) + ": probability must be in [0, 1]");
    }
}

inline std::int64_t draw_binomial(std::int64_t n, double q, std::uint64_t seed) {
    if (q <= 0.0) {
        return 0;
    }
    if (q >= 1.0) {
        return n;
    }
    Engine engine = make_engine(seed);
    std::binomial_distribution<std::int64_t> dist(n, q);
    return dist(engine);
}

}  // namespace detail

// Estimates a fidelity kernel value from N shots.
inline ShotResult sample_fidelity(double kappa_true, std::int64_t n_shots, const NoiseModel& noise, int n_qubits,
                                  std::uint64_t seed) {
    detail::check_probability(kappa_true, "sample_fidelity");
    noise.validate();
    if (n_shots < 1) {
        throw DomainError("sample_fidelity: N must be >= 1");
    }
    const double q = noise.depolarize(kappa_true, mixed_vacuum_probability(n_qubits));
    ShotResult r;
    r.n_shots = n_shots;
    r.seed = seed;
    r.successes = detail::draw_binomial(n_shots, q, seed);
    r.estimate = static_cast<double>(r.successes) / static_cast<double>(n_shots);
    return r;
}

struct TomographyResult {
    std::vector<ReducedDensityMatrix> estimates;          // clipped to the physical set
    std::vector<std::array<std::int64_t, 3>> successes;  // per qubit, per basis D/R/I
    std::int64_t n_shots = 0;
    std::uint64_t seed = 0;
};

// One-qubit tomography of every reduced state with N shots per basis. The
// k-th bit of a joint measurement is an independent-marginal Binomial trial,
// so each (qubit, basis) count is drawn directly from its marginal.
inline TomographyResult sample_tomography(std::span<const ReducedDensityMatrix> rhos, std::int64_t n_shots,
                                          const NoiseModel& noise, std::uint64_t seed) {
    noise.validate();
    if (n_shots < 1) {
        throw DomainError("sample_tomography: N must be >= 1");
    }
    TomographyResult out;
    out.n_shots = n_shots;
    out.seed = seed;
    out.estimates.reserve(rhos.size());
    out.successes.reserve(rhos.size());
    const auto nd = static_cast<double>(n_shots);
    for (std::size_t k = 0; k < rhos.size(); ++k) {
        const auto probs = measured_probabilities(rhos[k]);
        std::array<std::int64_t, 3> counts{};
        std::array<double, 3> freq{};
        for (std::size_t basis = 0; basis < 3; ++basis) {
            const double q = std::clamp(noise.depolarize(probs[basis], 0.5), 0.0, 1.0);
            counts[basis] = detail::draw_binomial(n_shots, q, derive_seed(seed, {k, basis}));
            freq[basis] = static_cast<double>(counts[basis]) / nd;
        }
        const ReducedDensityMatrix raw = from_measured_probabilities(freq);
        out.estimates.push_back(clip_to_physical(raw.diag(), raw.re(), raw.im()));
        out.successes.push_back(counts);
    }
    return out;
}

// Total circuit runs for a whole Gram matrix:
// fidelity N m (m-1) / 2, projected 3 m N.
inline std::int64_t total_shots(KernelFamily family, std::int64_t m, std::int64_t n_shots) {
    if (m < 2 || n_shots < 1) {
        throw DomainError("total_shots: need m >= 2 and N >= 1");
    }
    constexpr auto kMax = std::numeric_limits<std::int64_t>::max();
    if (family == KernelFamily::FidelityQ) {
        const std::int64_t pairs = m * (m - 1) / 2;
        if (pairs > kMax / n_shots) {
            throw DomainError("total_shots: overflow");
        }
        return pairs * n_shots;
    }
    if (3 * m > kMax / n_shots) {
        throw DomainError("total_shots: overflow");
    }
    return 3 * m * n_shots;
}

struct SampledKernelMatrix {
    KernelMatrix matrix;
    std::int64_t shots_per_estimate = 0;
    double p_error = 0.0;
    std::uint64_t seed = 0;
    std::int64_t total_shots = 0;
};

// Finite-shot Gram matrix. Fidelity: every upper-triangle entry is sampled
// independently with seed derive_seed(seed, {i, j}). Projected: every point's
// tomography is sampled once (seed derive_seed(seed, {point})) and the entries
// are built classically from the estimated reduced states.
inline SampledKernelMatrix sample_gram(std::span<const DataPoint> points, const FeatureMapConfig& cfg,
                                       KernelFamily family, double gamma, std::int64_t n_shots,
                                       const NoiseModel& noise, std::uint64_t seed, unsigned threads = 1) {
    if (points.size() < 2) {
        throw ShapeError("sample_gram: need at least 2 data points");
    }
    cfg.validate();
    noise.validate();
    SampledKernelMatrix out;
    out.shots_per_estimate = n_shots;
    out.p_error = noise.p_error;
    out.seed = seed;
    out.total_shots = total_shots(family, static_cast<std::int64_t>(points.size()), n_shots);

    const auto states = embed_all(points, cfg, threads);
    if (family == KernelFamily::FidelityQ) {
        KernelMatrix exact = fidelity_gram(states, cfg, threads);
        KernelMatrix est(exact.m, family, gamma, cfg);
        const auto pairs = detail::upper_pairs(exact.m);
        parallel_for(pairs.size(), threads, [&](std::size_t p) {
            const auto [i, j] = pairs[p];
            const double kappa = std::clamp(exact(i, j), 0.0, 1.0);
            const ShotResult r = sample_fidelity(kappa, n_shots, noise, cfg.n_qubits, derive_seed(seed, {i, j}));
            est.set_symmetric(i, j, r.estimate);
        });
        for (std::size_t i = 0; i < est.m; ++i) {
            est.set_symmetric(i, i, 1.0);
        }
        out.matrix = std::move(est);
        return out;
    }

    const auto reduced = reduce_all(states, threads);
    std::vector<ReducedStates> estimated(reduced.size());
    parallel_for(reduced.size(), threads, [&](std::size_t i) {
        estimated[i] = sample_tomography(reduced[i], n_shots, noise, derive_seed(seed, {i})).estimates;
    });
    out.matrix = projected_gram(estimated, gamma, cfg, threads);
    return out;
}

}  // namespace qkshots
