// Shot-count bounds for single kernel entries and whole Gram matrices:
// spread (Chebyshev), concentration avoidance (binomial side condition), their
// depolarizing-noise variants, and the tolerable circuit error probability.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qkshots/errors.hpp"
#include "qkshots/kernels.hpp"
#include "qkshots/measurement_sim.hpp"
#include "qkshots/special_functions.hpp"
#include "qkshots/statevector.hpp"

namespace qkshots {

inline constexpr std::int64_t kUnboundedShots = std::numeric_limits<std::int64_t>::max();
inline constexpr double kDefaultEpsilon = 1.0;
inline constexpr double kDefaultPSpread = 0.9;
inline constexpr double kDefaultPCa = 0.99;
// Concentration point of every measured tomography probability.
inline constexpr double kProjectedMu = 0.5;

struct BoundResult {
    double value = 0.0;  // real-valued bound before rounding up
    std::int64_t shots = 1;
    bool degenerate = false;  // zero-variance input, formula not informative
    bool unbounded = false;   // no finite N satisfies the condition

    friend bool operator==(const BoundResult&, const BoundResult&) = default;
};

namespace detail {

// Rounds a real bound up to whole shots. Values within 1e-9 (relative) of an
// integer are snapped first so that 250.00000000000006 becomes 250.
inline std::int64_t ceil_shots(double v) {
    if (!(v < 9.0e18)) {
        return kUnboundedShots;
    }
    const double r = std::round(v);
    const double c = std::abs(v - r) <= 1e-9 * std::max(1.0, std::abs(v)) ? r : std::ceil(v);
    return std::max<std::int64_t>(1, static_cast<std::int64_t>(c));
}

inline BoundResult make_bound(double value) {
    BoundResult b;
    b.value = value;
    b.shots = ceil_shots(value);
    b.unbounded = b.shots == kUnboundedShots;
    return b;
}

inline BoundResult degenerate_bound() {
    BoundResult b;
    b.value = 0.0;
    b.shots = 1;
    b.degenerate = true;
    return b;
}

inline BoundResult unbounded_bound() {
    BoundResult b;
    b.value = std::numeric_limits<double>::infinity();
    b.shots = kUnboundedShots;
    b.unbounded = true;
    return b;
}

inline void require_open_unit(double v, const char* what) {
    if (!(v > 0.0 && v < 1.0)) {
        throw DomainError(std::string(what) + " must be in (0, 1)");
    }
}

inline void require_closed_unit(double v, const char* what) {
    if (!(v >= 0.0 && v <= 1.0)) {
        throw DomainError(std::string(what) + " must be in [0, 1]");
    }
}

// (1 - P_spread) eps^2 Delta^2, validating every factor.
inline double spread_denominator(double eps, double delta_ens, double p_spread) {
    if (!(eps > 0.0) || !std::isfinite(eps)) {
        throw DomainError("eps must be > 0");
    }
    if (!(delta_ens >= 0.0) || !std::isfinite(delta_ens)) {
        throw DomainError("delta_ensemble must be >= 0");
    }
    if (delta_ens == 0.0) {
        throw DomainError("delta_ensemble is 0: the kernel ensemble is indistinguishable");
    }
    require_open_unit(p_spread, "P_spread");
    return (1.0 - p_spread) * eps * eps * delta_ens * delta_ens;
}

inline void require_same_length(std::span<const ReducedDensityMatrix> x, std::span<const ReducedDensityMatrix> y) {
    if (x.size() != y.size() || x.empty()) {
        throw ShapeError("reduced-state lists must be non-empty and of equal length (" + std::to_string(x.size()) +
                         " vs " + std::to_string(y.size()) + ")");
    }
}

}  // namespace detail

// Noiseless fidelity spread bound: kappa(1-kappa) / [(1-P) eps^2 Delta^2].
inline BoundResult n_spread_fq(double kappa, double eps, double delta_ens, double p_spread) {
    detail::require_closed_unit(kappa, "kappa");
    const double denom = detail::spread_denominator(eps, delta_ens, p_spread);
    if (kappa == 0.0 || kappa == 1.0) {
        return detail::degenerate_bound();
    }
    return detail::make_bound(kappa * (1.0 - kappa) / denom);
}

// Delta-method variance term of qubit k for the projected kernel. With
// Z = (M_D, M_R, M_I) of x followed by those of y, |dX/dZ_i| = 4|Z_i - Z_{i+3}|
// and the covariances are bounded by Cauchy-Schwarz, so the double sum
// factorises into (sum_i |dX/dZ_i| sqrt(Z_i(1-Z_i)))^2.
inline double pq_variance_term(const ReducedDensityMatrix& x, const ReducedDensityMatrix& y) {
    const auto zx = measured_probabilities(x);
    const auto zy = measured_probabilities(y);
    double s = 0.0;
    for (std::size_t a = 0; a < 3; ++a) {
        const double d = 4.0 * std::abs(zx[a] - zy[a]);
        s += d * std::sqrt(std::max(0.0, zx[a] * (1.0 - zx[a])));
        s += d * std::sqrt(std::max(0.0, zy[a] * (1.0 - zy[a])));
    }
    return s * s;
}

// Noisy variant: every single-shot variance replaced by its bound 1, giving
// (sum_i |dX/dZ_i|)^2 = 64 (sum_alpha |d_alpha|)^2. `shrink` scales the
// component differences (1 - p under depolarizing noise).
inline double pq_variance_term_noisy(const ReducedDensityMatrix& x, const ReducedDensityMatrix& y,
                                     double shrink = 1.0) {
    const auto zx = measured_probabilities(x);
    const auto zy = measured_probabilities(y);
    double s = 0.0;
    for (std::size_t a = 0; a < 3; ++a) {
        s += 2.0 * 4.0 * shrink * std::abs(zx[a] - zy[a]);
    }
    return s * s;
}

inline double pq_variance_sum(std::span<const ReducedDensityMatrix> x, std::span<const ReducedDensityMatrix> y) {
    detail::require_same_length(x, y);
    double total = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        total += pq_variance_term(x[k], y[k]);
    }
    return total;
}

inline double pq_variance_sum_noisy(std::span<const ReducedDensityMatrix> x, std::span<const ReducedDensityMatrix> y,
                                    double shrink = 1.0) {
    detail::require_same_length(x, y);
    double total = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        total += pq_variance_term_noisy(x[k], y[k], shrink);
    }
    return total;
}

namespace detail {

inline BoundResult pq_spread_from_sum(double n, double gamma, double kappa, double v_sum, double factor,
                                      double denom) {
    if (v_sum == 0.0 || kappa == 0.0) {
        return degenerate_bound();
    }
    return make_bound(factor * n * gamma * gamma * kappa * kappa * v_sum / denom);
}

inline void require_gamma(double gamma) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
        throw ConfigError("gamma must be > 0");
    }
}

}  // namespace detail

// Noiseless projected spread bound: n gamma^2 kappa^2 sum_k V_k / [(1-P) eps^2 Delta^2].
inline BoundResult n_spread_pq(std::span<const ReducedDensityMatrix> rho_x, std::span<const ReducedDensityMatrix> rho_y,
                               double kappa, double gamma, double eps, double delta_ens, double p_spread) {
    detail::require_closed_unit(kappa, "kappa");
    detail::require_gamma(gamma);
    const double denom = detail::spread_denominator(eps, delta_ens, p_spread);
    const double v_sum = pq_variance_sum(rho_x, rho_y);
    return detail::pq_spread_from_sum(static_cast<double>(rho_x.size()), gamma, kappa, v_sum, 1.0, denom);
}

// Noisy fidelity spread bound: 4 / [(1-P) eps^2 Delta^2].
inline BoundResult n_spread_noisy_fq(double eps, double delta_ens, double p_spread) {
    return detail::make_bound(4.0 / detail::spread_denominator(eps, delta_ens, p_spread));
}

// Noisy projected spread bound: 4 n gamma^2 kappa_f^2 sum_k Vhat_k / [(1-P) eps^2 Delta^2].
// Inputs are the noiseless states and kernel value; depolarizing shrinks every
// component difference by (1-p), so kappa_f = kappa^((1-p)^2).
inline BoundResult n_spread_noisy_pq(std::span<const ReducedDensityMatrix> rho_x,
                                     std::span<const ReducedDensityMatrix> rho_y, double kappa, double gamma,
                                     double eps, double delta_ens, double p_spread, const NoiseModel& noise) {
    detail::require_closed_unit(kappa, "kappa");
    detail::require_gamma(gamma);
    noise.validate();
    const double denom = detail::spread_denominator(eps, delta_ens, p_spread);
    const double shrink = 1.0 - noise.p_error;
    const double kappa_f = std::pow(kappa, shrink * shrink);
    const double v_sum = pq_variance_sum_noisy(rho_x, rho_y, shrink);
    return detail::pq_spread_from_sum(static_cast<double>(rho_x.size()), gamma, kappa_f, v_sum, 4.0, denom);
}

// Smallest N with 1 - (1 - m)^N >= P_CA (at least one success).
inline BoundResult n_ca_fq(double m_true, double p_ca) {
    detail::require_closed_unit(m_true, "expected measured value");
    detail::require_open_unit(p_ca, "P_CA");
    if (m_true == 0.0) {
        return detail::unbounded_bound();
    }
    if (m_true == 1.0) {
        return detail::make_bound(1.0);
    }
    const double log_fail = std::log1p(-m_true);
    const double value = std::log1p(-p_ca) / log_fail;
    auto covered = [&](std::int64_t n) { return -std::expm1(static_cast<double>(n) * log_fail) >= p_ca; };
    std::int64_t n = detail::ceil_shots(value);
    if (n == kUnboundedShots) {
        return detail::unbounded_bound();
    }
    while (!covered(n)) {
        ++n;
    }
    while (n > 1 && covered(n - 1)) {
        --n;
    }
    BoundResult b;
    b.value = value;
    b.shots = n;
    return b;
}

namespace detail {

// floor / ceil of a product that is snapped to the nearest integer when it is
// within rounding noise of one (N mu = 11.000000000000002 counts as 11).
inline double snapped(double v) {
    const double r = std::round(v);
    return std::abs(v - r) <= 1e-9 * std::max(1.0, std::abs(v)) ? r : v;
}

// Exact side condition for N shots: P[K > N mu] >= P_CA when m > mu,
// P[K < N mu] >= P_CA when m < mu, with K ~ Binomial(N, m).
inline bool ca_condition_holds(std::int64_t n, double m, double mu, double p_ca) {
    const double nm = snapped(static_cast<double>(n) * mu);
    if (m > mu) {
        return binomial_sf(static_cast<std::int64_t>(std::floor(nm)), n, m) >= p_ca;
    }
    return binomial_cdf(static_cast<std::int64_t>(std::ceil(nm)) - 1, n, m) >= p_ca;
}

inline constexpr std::int64_t kSearchLimit = std::int64_t{1} << 40;

// First index in [0, kSearchLimit) for which pred holds, assuming pred is
// monotone (false...true): doubling followed by bisection.
template <class Pred>
std::int64_t first_true(Pred&& pred) {
    if (pred(0)) {
        return 0;
    }
    std::int64_t lo = 0;  // known false
    std::int64_t hi = 1;
    while (!pred(hi)) {
        lo = hi;
        hi *= 2;
        if (hi >= kSearchLimit) {
            return -1;
        }
    }
    while (hi - lo > 1) {
        const std::int64_t mid = lo + (hi - lo) / 2;
        if (pred(mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return hi;
}

}  // namespace detail

namespace detail {

// First N in [n_from, n_to] passing the exact side condition, or -1. The
// threshold floor(N mu) (or ceil(N mu) - 1) grows in unit steps, so the
// condition is a sawtooth in N; the scan walks every N. L = P[K <= t] and
// log pmf(t) are carried by the one-step recurrences and recomputed from
// scratch every 2^16 steps. Candidates within 1e-9 of the target are
// confirmed with a direct evaluation.
inline std::int64_t first_passing_scan(double m, double mu, double p_ca, std::int64_t n_from, std::int64_t n_to) {
    const bool upper = m > mu;
    const double log_m = std::log(m);
    const double log_q = std::log1p(-m);
    auto threshold = [&](std::int64_t n) {
        const double nm = snapped(static_cast<double>(n) * mu);
        return upper ? static_cast<std::int64_t>(std::floor(nm)) : static_cast<std::int64_t>(std::ceil(nm)) - 1;
    };
    // Upper branch passes when 1 - L >= P_CA, lower when L >= P_CA.
    auto margin = [&](double cdf) { return upper ? (1.0 - p_ca) - cdf : cdf - p_ca; };
    // The recurrence and a direct evaluation can disagree by about 1e-7 of the
    // tail at N ~ 1e8 (lgamma rounding), so the prefilter is loose and the
    // direct check decides.
    const double slack = 1e-9 + 1e-6 * std::min(p_ca, 1.0 - p_ca);
    constexpr std::int64_t kResync = std::int64_t{1} << 16;

    std::int64_t n = std::max<std::int64_t>(1, n_from);
    std::int64_t t = threshold(n);
    double cdf = binomial_cdf(t, n, m);
    double log_pmf = log_binomial_pmf(t, n, log_m, log_q);
    std::int64_t since_resync = 0;
    while (n <= n_to) {
        if (margin(cdf) >= -slack && ca_condition_holds(n, m, mu, p_ca)) {
            return n;
        }
        // N -> N + 1 at fixed threshold.
        cdf -= m * std::exp(log_pmf);
        log_pmf += log_q + std::log(static_cast<double>(n + 1) / static_cast<double>(n + 1 - t));
        ++n;
        const std::int64_t t_new = threshold(n);
        if (++since_resync == kResync || t_new < t || t_new > t + 1) {
            t = t_new;
            cdf = binomial_cdf(t, n, m);
            log_pmf = log_binomial_pmf(t, n, log_m, log_q);
            since_resync = 0;
            continue;
        }
        if (t_new == t + 1) {
            log_pmf += log_m - log_q + std::log(static_cast<double>(n - t) / static_cast<double>(t + 1));
            ++t;
            cdf += std::exp(log_pmf);
        }
    }
    return -1;
}

// A passing N from doubling and bisection over threshold blocks. Inside a
// block the condition is monotone, so the result passes and N - 1 fails, but
// an earlier block may also pass.
inline std::int64_t block_search(double m, double mu, double p_ca) {
    auto holds = [&](std::int64_t n) { return ca_condition_holds(n, m, mu, p_ca); };
    if (m > mu) {
        // Block c = {N : floor(N mu) = c} = [start(c), start(c + 1) - 1].
        auto start = [&](std::int64_t c) {
            return static_cast<std::int64_t>(snapped(std::ceil(snapped(static_cast<double>(c) / mu))));
        };
        const std::int64_t c = first_true([&](std::int64_t k) { return holds(start(k + 1) - 1); });
        if (c < 0) {
            return -1;
        }
        std::int64_t lo = std::max<std::int64_t>(1, start(c)) - 1;
        std::int64_t hi = start(c + 1) - 1;
        while (hi - lo > 1) {
            const std::int64_t mid = lo + (hi - lo) / 2;
            (holds(mid) ? hi : lo) = mid;
        }
        return hi;
    }
    // Block c = {N : ceil(N mu) - 1 = c}; the condition weakens along a block,
    // so a block passes iff its first N does.
    auto start = [&](std::int64_t c) {
        return static_cast<std::int64_t>(std::floor(snapped(static_cast<double>(c) / mu))) + 1;
    };
    const std::int64_t c = first_true([&](std::int64_t k) { return holds(start(k)); });
    return c < 0 ? -1 : start(c);
}

}  // namespace detail

// Smallest N for which the exact binomial side condition holds. The block
// search gives a passing candidate; every N in the 16 / |m - mu| trials below
// it is then checked. Along the sawtooth, one trial moves the tail probability
// by at most one pmf term while the trend needs about 2 / |m - mu| trials to
// move it by as much, so an earlier pass further down is not expected. The
// scan is exhaustive whenever the candidate lies inside that window.
inline BoundResult n_ca_binomial_exact(double m_true, double mu, double p_ca) {
    detail::require_closed_unit(m_true, "expected measured value");
    detail::require_closed_unit(mu, "concentration value");
    detail::require_open_unit(p_ca, "P_CA");
    if (m_true == mu) {
        throw BoundNotImposed("expected measured value equals the concentration value; the bound is not imposed");
    }
    std::int64_t n = -1;
    if (m_true == 1.0 || m_true == 0.0) {
        // Deterministic outcomes: one shot already lands on the correct side.
        n = 1;
    } else if (mu == 0.0) {
        // Threshold stays at 0 and P[K > 0] grows with N, so bisection is exact.
        const std::int64_t i =
            detail::first_true([&](std::int64_t k) { return detail::ca_condition_holds(k + 1, m_true, mu, p_ca); });
        n = i < 0 ? -1 : i + 1;
    } else {
        const std::int64_t candidate = detail::block_search(m_true, mu, p_ca);
        if (candidate > 0) {
            const double span = std::ceil(16.0 / std::abs(m_true - mu));
            const std::int64_t from =
                span >= static_cast<double>(candidate) ? 1 : candidate - static_cast<std::int64_t>(span);
            n = detail::first_passing_scan(m_true, mu, p_ca, from, candidate);
            if (n < 0) {
                // The candidate is known to pass; only the prefilter can miss it.
                n = candidate;
            }
        }
    }
    if (n < 0) {
        return detail::unbounded_bound();
    }
    BoundResult b;
    b.value = static_cast<double>(n);
    b.shots = n;
    return b;
}

// Normal approximation: z^2 m (1-m) / (m - mu)^2 with z = Phi^{-1}(P_CA).
// P_CA <= 0.5 makes the condition vacuous (z <= 0) and yields 1.
inline BoundResult n_ca_pq_normal(double m_true, double mu, double p_ca) {
    detail::require_closed_unit(m_true, "expected measured value");
    detail::require_closed_unit(mu, "concentration value");
    detail::require_open_unit(p_ca, "P_CA");
    if (m_true == mu) {
        throw BoundNotImposed("expected measured value equals the concentration value; the bound is not imposed");
    }
    const double z = std::max(0.0, inverse_normal_cdf(p_ca));
    const double diff = m_true - mu;
    return detail::make_bound(z * z * m_true * (1.0 - m_true) / (diff * diff));
}

enum class CaMethod { Normal, Exact };

inline std::string_view to_string(CaMethod m) {
    return m == CaMethod::Normal ? "normal" : "exact";
}

inline CaMethod parse_ca_method(std::string_view s) {
    if (s == "normal") {
        return CaMethod::Normal;
    }
    if (s == "exact") {
        return CaMethod::Exact;
    }
    throw ConfigError("unknown concentration-avoidance method '" + std::string(s) +
                      "' (expected \"normal\" or \"exact\")");
}

// Value the "0" outcome probability tends to under depolarizing noise: the
// vacuum probability 2^-n for fidelity circuits, 1/2 for a tomography bit.
inline double depolarized_target(KernelFamily family, int n_qubits) {
    return family == KernelFamily::FidelityQ ? mixed_vacuum_probability(n_qubits) : 0.5;
}

// Concentration avoidance under depolarizing noise: the noiseless bound with
// m -> (1-p) m + p q~ (and mu mapped the same way for the projected family).
inline BoundResult n_ca_noisy(KernelFamily family, double m_true, double mu, double p_ca, const NoiseModel& noise,
                              int n_qubits, CaMethod method = CaMethod::Normal) {
    noise.validate();
    detail::require_closed_unit(m_true, "expected measured value");
    const double target = depolarized_target(family, n_qubits);
    const double m_f = noise.depolarize(m_true, target);
    if (family == KernelFamily::FidelityQ) {
        return n_ca_fq(m_f, p_ca);
    }
    detail::require_closed_unit(mu, "concentration value");
    const double mu_f = noise.depolarize(mu, target);
    return method == CaMethod::Normal ? n_ca_pq_normal(m_f, mu_f, p_ca) : n_ca_binomial_exact(m_f, mu_f, p_ca);
}

struct ErrorBudget {
    double p_max = 1.0;
    double denominator = 0.0;
    bool unconstrained = false;  // vanishing noise sensitivity, any p is tolerable
};

// Largest per-run error probability keeping the noise-induced shift of the
// kernel below eps Delta / 2. Fidelity: eps Delta / (2 |2^-n - kappa|).
// Projected: eps Delta / (4 |kappa ln kappa|). Capped at 1.
inline ErrorBudget error_budget(KernelFamily family, double kappa, double eps, double delta_ens, int n_qubits) {
    detail::require_open_unit(kappa, "kappa");
    if (!(eps > 0.0) || !(delta_ens > 0.0)) {
        throw DomainError("error_budget: eps and delta_ensemble must be > 0");
    }
    ErrorBudget b;
    if (family == KernelFamily::FidelityQ) {
        b.denominator = 2.0 * std::abs(mixed_vacuum_probability(n_qubits) - kappa);
    } else {
        b.denominator = 4.0 * std::abs(kappa * std::log(kappa));
    }
    if (b.denominator < 1e-15) {
        b.unconstrained = true;
        b.p_max = 1.0;
        return b;
    }
    b.p_max = std::min(1.0, eps * delta_ens / b.denominator);
    return b;
}

enum class Effect { Spread, ConcentrationAvoidance };

inline std::string_view to_string(Effect e) {
    return e == Effect::Spread ? "spread" : "concentration_avoidance";
}

enum class SpreadPath { KernelStatistics, RepresentativeStates, RhoTable };

inline std::string_view to_string(SpreadPath p) {
    switch (p) {
        case SpreadPath::KernelStatistics:
            return "kernel_statistics";
        case SpreadPath::RepresentativeStates:
            return "representative_states";
        case SpreadPath::RhoTable:
            return "rho_table";
    }
    return "?";
}

struct BudgetSettings {
    double eps = kDefaultEpsilon;
    double p_spread = kDefaultPSpread;
    double p_ca = kDefaultPCa;
    NoiseModel noise{};
    CaMethod ca_method = CaMethod::Normal;  // per-entry projected CA only
};

// Everything a dataset-level budget was computed from.
struct BudgetInputs {
    KernelFamily family = KernelFamily::FidelityQ;
    int n_qubits = 0;
    std::size_t m = 0;
    double gamma = kDefaultGamma;
    double eps = kDefaultEpsilon;
    double p_spread = kDefaultPSpread;
    double p_ca = kDefaultPCa;
    double p_error = 0.0;
    double kappa_repr = 0.0;      // median of the off-diagonal entries
    double kappa_repr_f = 0.0;    // its depolarized counterpart
    double delta_ensemble = 0.0;  // IQR of the off-diagonal entries
    double mu = 0.0;              // concentration value of the measured quantity
    double measured_value = 0.0;  // fidelity: kappa_repr(_f) used in the CA bound
    std::optional<double> eps_r1;  // mean |M - mu| from the rho table
    std::optional<double> eps_r2;  // sqrt(-<ln kappa> / (12 gamma n))
    std::optional<double> eps_r_used;
    std::optional<double> mean_log_kappa;
    std::optional<double> variance_sum;  // sum_k V_k (or Vhat_k) used in the spread bound
    SpreadPath spread_path = SpreadPath::KernelStatistics;
    std::size_t excluded_unit_entries = 0;
};

struct ShotBudget {
    BoundResult spread;
    BoundResult ca;
    std::int64_t n_spread = 1;
    std::int64_t n_ca = 1;
    std::int64_t n_required = 1;
    Effect effect_dominant = Effect::Spread;
    bool noisy = false;
    BudgetInputs inputs;
    std::vector<std::string> warnings;
};

inline ShotBudget combine_budget(const BoundResult& spread, const BoundResult& ca, bool noisy) {
    ShotBudget b;
    b.spread = spread;
    b.ca = ca;
    b.n_spread = spread.shots;
    b.n_ca = ca.shots;
    b.n_required = std::max(b.n_spread, b.n_ca);
    b.effect_dominant = b.n_ca > b.n_spread ? Effect::ConcentrationAvoidance : Effect::Spread;
    b.noisy = noisy;
    return b;
}

// Per-entry fidelity budget.
inline ShotBudget entry_budget_fq(double kappa, double delta_ens, int n_qubits, const BudgetSettings& s) {
    s.noise.validate();
    const bool noisy = s.noise.p_error > 0.0;
    const BoundResult spread =
        noisy ? n_spread_noisy_fq(s.eps, delta_ens, s.p_spread) : n_spread_fq(kappa, s.eps, delta_ens, s.p_spread);
    const BoundResult ca = n_ca_noisy(KernelFamily::FidelityQ, kappa, 0.0, s.p_ca, s.noise, n_qubits);
    ShotBudget b = combine_budget(spread, ca, noisy);
    b.inputs.family = KernelFamily::FidelityQ;
    b.inputs.n_qubits = n_qubits;
    b.inputs.eps = s.eps;
    b.inputs.p_spread = s.p_spread;
    b.inputs.p_ca = s.p_ca;
    b.inputs.p_error = s.noise.p_error;
    b.inputs.kappa_repr = kappa;
    b.inputs.kappa_repr_f = s.noise.depolarize(kappa, mixed_vacuum_probability(n_qubits));
    b.inputs.delta_ensemble = delta_ens;
    b.inputs.measured_value = b.inputs.kappa_repr_f;
    return b;
}

namespace detail {

inline void keep_larger(BoundResult& acc, const BoundResult& r) {
    if (r.degenerate) {
        return;
    }
    if (acc.degenerate || r.shots > acc.shots) {
        acc = r;
    }
}

}  // namespace detail

// Largest side-condition bound over the measured probabilities of one point.
// Depends on the point alone, so callers building many entries can cache it.
inline BoundResult projected_point_ca(std::span<const ReducedDensityMatrix> rho, const BudgetSettings& s) {
    s.noise.validate();
    BoundResult ca = detail::degenerate_bound();
    const int n = static_cast<int>(rho.size());
    for (const ReducedDensityMatrix& r : rho) {
        for (const double m : measured_probabilities(r)) {
            const double m_f = s.noise.depolarize(m, 0.5);
            if (std::abs(m_f - kProjectedMu) < 1e-15) {
                continue;
            }
            detail::keep_larger(ca, n_ca_noisy(KernelFamily::ProjectedQ, m, kProjectedMu, s.p_ca, s.noise, n, s.ca_method));
        }
    }
    return ca;
}

// Per-entry projected budget with the per-point bounds from projected_point_ca
// supplied.
inline ShotBudget entry_budget_pq(std::span<const ReducedDensityMatrix> rho_x,
                                  std::span<const ReducedDensityMatrix> rho_y, double gamma, double delta_ens,
                                  const BudgetSettings& s, const BoundResult& ca_x, const BoundResult& ca_y) {
    detail::require_same_length(rho_x, rho_y);
    s.noise.validate();
    const bool noisy = s.noise.p_error > 0.0;
    const double kappa = projected_kernel(rho_x, rho_y, gamma);
    const BoundResult spread = noisy ? n_spread_noisy_pq(rho_x, rho_y, kappa, gamma, s.eps, delta_ens, s.p_spread, s.noise)
                                     : n_spread_pq(rho_x, rho_y, kappa, gamma, s.eps, delta_ens, s.p_spread);
    BoundResult ca = ca_x;
    detail::keep_larger(ca, ca_y);
    const int n = static_cast<int>(rho_x.size());
    ShotBudget b = combine_budget(spread, ca, noisy);
    b.inputs.family = KernelFamily::ProjectedQ;
    b.inputs.n_qubits = n;
    b.inputs.gamma = gamma;
    b.inputs.eps = s.eps;
    b.inputs.p_spread = s.p_spread;
    b.inputs.p_ca = s.p_ca;
    b.inputs.p_error = s.noise.p_error;
    b.inputs.kappa_repr = kappa;
    const double shrink = 1.0 - s.noise.p_error;
    b.inputs.kappa_repr_f = std::pow(kappa, shrink * shrink);
    b.inputs.delta_ensemble = delta_ens;
    b.inputs.mu = kProjectedMu;
    b.inputs.variance_sum = noisy ? pq_variance_sum_noisy(rho_x, rho_y, shrink) : pq_variance_sum(rho_x, rho_y);
    return b;
}

// Per-entry projected budget. The CA side takes the largest bound over all
// 3n measured probabilities of both points whose expected value differs from 1/2.
inline ShotBudget entry_budget_pq(std::span<const ReducedDensityMatrix> rho_x,
                                  std::span<const ReducedDensityMatrix> rho_y, double gamma, double delta_ens,
                                  const BudgetSettings& s) {
    return entry_budget_pq(rho_x, rho_y, gamma, delta_ens, s, projected_point_ca(rho_x, s), projected_point_ca(rho_y, s));
}

// Mean |M - 1/2| over every point, basis and qubit of a reduced-state table.
inline double epsilon_r1(std::span<const ReducedStates> table) {
    if (table.empty()) {
        throw ShapeError("epsilon_r1: empty reduced-state table");
    }
    double total = 0.0;
    std::size_t count = 0;
    for (const ReducedStates& point : table) {
        for (const ReducedDensityMatrix& rho : point) {
            for (const double m : measured_probabilities(rho)) {
                total += std::abs(m - kProjectedMu);
                ++count;
            }
        }
    }
    if (count == 0) {
        throw ShapeError("epsilon_r1: reduced-state table has no qubits");
    }
    return total / static_cast<double>(count);
}

struct EpsilonR2 {
    double value = 0.0;
    double mean_log_kappa = 0.0;
    std::size_t excluded_unit_entries = 0;
};

// sqrt(-<ln kappa> / (12 gamma n)) over the off-diagonal entries. Entries
// equal to 1 carry no information about the scale and are excluded.
inline EpsilonR2 epsilon_r2(const KernelMatrix& k, int n_qubits) {
    if (k.m < 2) {
        throw ShapeError("epsilon_r2: need m >= 2");
    }
    detail::require_gamma(k.gamma);
    EpsilonR2 out;
    double total = 0.0;
    std::size_t used = 0;
    for (const double v : k.off_diagonal()) {
        if (!(v > 0.0 && v <= 1.0)) {
            throw DomainError("epsilon_r2: projected kernel entries must lie in (0, 1], got " + std::to_string(v));
        }
        if (v == 1.0) {
            ++out.excluded_unit_entries;
            continue;
        }
        total += std::log(v);
        ++used;
    }
    if (used == 0) {
        throw DomainError("epsilon_r2: every off-diagonal entry equals 1");
    }
    out.mean_log_kappa = total / static_cast<double>(used);
    out.value = std::sqrt(-out.mean_log_kappa / (12.0 * k.gamma * static_cast<double>(n_qubits)));
    return out;
}

// Dataset-level budget. Fidelity: kappa_repr = median, Delta = IQR, CA with
// base 1 - kappa_repr(_f). Projected: CA from z^2 mu(1-mu) / eps_R^2 with the
// kernel-derived scale eps_R2 (times 1-p when noisy); spread from the average
// variance term over the rho table when given, else from two representative
// states whose components sit at 1/2 +- eps_R2 / sqrt(2).
inline ShotBudget dataset_budget(const KernelMatrix& k, const BudgetSettings& s,
                                 std::span<const ReducedStates> rho_table = {}) {
    s.noise.validate();
    const KernelStatistics stats = kernel_statistics(k);
    if (!(stats.iqr > 0.0)) {
        throw DomainError("dataset_budget: IQR of the kernel entries is 0; the ensemble spread is undefined");
    }
    const bool noisy = s.noise.p_error > 0.0;
    const double shrink = 1.0 - s.noise.p_error;
    const int n = k.config.n_qubits;
    BudgetInputs in;
    in.family = k.family;
    in.n_qubits = n;
    in.m = k.m;
    in.gamma = k.gamma;
    in.eps = s.eps;
    in.p_spread = s.p_spread;
    in.p_ca = s.p_ca;
    in.p_error = s.noise.p_error;
    in.kappa_repr = stats.median;
    in.delta_ensemble = stats.iqr;
    std::vector<std::string> warnings;

    BoundResult spread;
    BoundResult ca;
    if (k.family == KernelFamily::FidelityQ) {
        in.kappa_repr_f = s.noise.depolarize(stats.median, mixed_vacuum_probability(n));
        in.measured_value = in.kappa_repr_f;
        spread = noisy ? n_spread_noisy_fq(s.eps, stats.iqr, s.p_spread)
                       : n_spread_fq(stats.median, s.eps, stats.iqr, s.p_spread);
        ca = n_ca_fq(in.kappa_repr_f, s.p_ca);
    } else {
        if (!rho_table.empty() && rho_table.size() != k.m) {
            throw ShapeError("dataset_budget: rho table has " + std::to_string(rho_table.size()) +
                             " points, kernel matrix has " + std::to_string(k.m));
        }
        in.mu = kProjectedMu;
        in.kappa_repr_f = std::pow(stats.median, shrink * shrink);
        const EpsilonR2 e2 = epsilon_r2(k, n);
        in.eps_r2 = e2.value;
        in.mean_log_kappa = e2.mean_log_kappa;
        in.excluded_unit_entries = e2.excluded_unit_entries;
        if (e2.excluded_unit_entries > 0) {
            warnings.push_back(std::to_string(e2.excluded_unit_entries) +
                               " off-diagonal entries equal to 1 were excluded from <ln kappa>");
        }
        if (!rho_table.empty()) {
            in.eps_r1 = epsilon_r1(rho_table);
        }
        const double eps_r = shrink * e2.value;
        in.eps_r_used = eps_r;
        if (!(eps_r > 0.0)) {
            ca = detail::unbounded_bound();
        } else {
            const double z = std::max(0.0, inverse_normal_cdf(s.p_ca));
            ca = detail::make_bound(z * z * kProjectedMu * (1.0 - kProjectedMu) / (eps_r * eps_r));
        }

        double v_sum = 0.0;
        if (!rho_table.empty()) {
            in.spread_path = SpreadPath::RhoTable;
            double total = 0.0;
            std::size_t pairs = 0;
            for (std::size_t i = 0; i < rho_table.size(); ++i) {
                for (std::size_t j = i + 1; j < rho_table.size(); ++j) {
                    total += noisy ? pq_variance_sum_noisy(rho_table[i], rho_table[j], shrink)
                                   : pq_variance_sum(rho_table[i], rho_table[j]);
                    ++pairs;
                }
            }
            v_sum = total / static_cast<double>(pairs);
        } else {
            in.spread_path = SpreadPath::RepresentativeStates;
            const double offset = std::min(0.5, e2.value / std::numbers::sqrt2);
            const ReducedDensityMatrix up = from_measured_probabilities({0.5 + offset, 0.5 + offset, 0.5 + offset});
            const ReducedDensityMatrix down =
                from_measured_probabilities({0.5 - offset, 0.5 - offset, 0.5 - offset});
            const double per_qubit = noisy ? pq_variance_term_noisy(up, down, shrink) : pq_variance_term(up, down);
            v_sum = per_qubit * static_cast<double>(n);
        }
        in.variance_sum = v_sum;
        const double denom = detail::spread_denominator(s.eps, stats.iqr, s.p_spread);
        spread = noisy ? detail::pq_spread_from_sum(n, k.gamma, in.kappa_repr_f, v_sum, 4.0, denom)
                       : detail::pq_spread_from_sum(n, k.gamma, stats.median, v_sum, 1.0, denom);
    }
    ShotBudget b = combine_budget(spread, ca, noisy);
    b.inputs = in;
    b.warnings = std::move(warnings);
    return b;
}

}  // namespace qkshots
