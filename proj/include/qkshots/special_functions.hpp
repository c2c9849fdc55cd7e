// Normal quantiles and binomial tail probabilities used by the shot bounds.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

#include "qkshots/errors.hpp"

namespace qkshots {

inline double normal_cdf(double z) {
    return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

namespace detail {

// Acklam's rational approximation (relative error ~1e-9) for p <= 1/2,
// followed by one Halley step against erfc.
inline double lower_normal_quantile(double p) {
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                   1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                   6.680131188771972e+01,  -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                   -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                   3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    }
    const double e = normal_cdf(x) - p;
    const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    return x - u / (1.0 + 0.5 * x * u);
}

}  // namespace detail

// Inverse standard-normal CDF to near machine precision. The upper half is
// mapped to the lower tail, where 1 - p is exact and the refinement does not
// cancel.
inline double inverse_normal_cdf(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        if (p == 0.0) {
            return -std::numeric_limits<double>::infinity();
        }
        if (p == 1.0) {
            return std::numeric_limits<double>::infinity();
        }
        throw DomainError("inverse_normal_cdf: probability must be in [0, 1]");
    }
    return p > 0.5 ? -detail::lower_normal_quantile(1.0 - p) : detail::lower_normal_quantile(p);
}

namespace detail {

inline double log_binomial_pmf(std::int64_t k, std::int64_t n, double log_p, double log_q) {
    const auto kd = static_cast<double>(k);
    const auto nd = static_cast<double>(n);
    return std::lgamma(nd + 1.0) - std::lgamma(kd + 1.0) - std::lgamma(nd - kd + 1.0) + kd * log_p +
           (nd - kd) * log_q;
}

// Sum of pmf(j) for j = from, from+step, ... while inside [0, n]. Terms must
// be decreasing along the walk (true when starting at the tail end nearest the
// mode). Accumulated relative to the first term in log space.
inline double walk_tail(std::int64_t from, int step, std::int64_t n, double p) {
    const double log_p = std::log(p);
    const double log_q = std::log1p(-p);
    const double log_first = log_binomial_pmf(from, n, log_p, log_q);
    double rel_sum = 0.0;
    for (std::int64_t j = from; j >= 0 && j <= n; j += step) {
        const double rel = std::exp(log_binomial_pmf(j, n, log_p, log_q) - log_first);
        rel_sum += rel;
        if (rel < 1e-17 * rel_sum) {
            break;
        }
    }
    return std::exp(log_first + std::log(rel_sum));
}

}  // namespace detail

// P[K <= k] for K ~ Binomial(n, p).
inline double binomial_cdf(std::int64_t k, std::int64_t n, double p) {
    if (n < 0 || !(p >= 0.0 && p <= 1.0)) {
        throw DomainError("binomial_cdf: need n >= 0 and p in [0, 1]");
    }
    if (k < 0) {
        return 0.0;
    }
    if (k >= n) {
        return 1.0;
    }
    if (p == 0.0) {
        return 1.0;
    }
    if (p == 1.0) {
        return 0.0;
    }
    const double mean = static_cast<double>(n) * p;
    if (static_cast<double>(k) <= mean) {
        return std::min(1.0, detail::walk_tail(k, -1, n, p));
    }
    return std::max(0.0, 1.0 - detail::walk_tail(k + 1, +1, n, p));
}

// P[K > k] for K ~ Binomial(n, p), computed without cancellation in the far tail.
inline double binomial_sf(std::int64_t k, std::int64_t n, double p) {
    if (n < 0 || !(p >= 0.0 && p <= 1.0)) {
        throw DomainError("binomial_sf: need n >= 0 and p in [0, 1]");
    }
    if (k < 0) {
        return 1.0;
    }
    if (k >= n) {
        return 0.0;
    }
    if (p == 0.0) {
        return 0.0;
    }
    if (p == 1.0) {
        return 1.0;
    }
    const double mean = static_cast<double>(n) * p;
    if (static_cast<double>(k + 1) >= mean) {
        return std::min(1.0, detail::walk_tail(k + 1, +1, n, p));
    }
    return std::max(0.0, 1.0 - detail::walk_tail(k, -1, n, p));
}

}  // namespace qkshots
