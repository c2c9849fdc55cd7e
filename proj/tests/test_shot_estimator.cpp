#include <gtest/gtest.h>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "qkshots/errors.hpp"
#include "qkshots/shot_estimator.hpp"

using namespace qkshots;

namespace {

// Six-variable delta-method sum for one qubit: Z = (D, R, I) of x then of y,
// X = 2 sum_a (Z_a - Z_{a+3})^2, covariances bounded by sigma_i sigma_j.
double variance_term_bruteforce(const ReducedDensityMatrix& x, const ReducedDensityMatrix& y) {
    const double z[6] = {x.diag(), x.re() + 0.5, 0.5 - x.im(), y.diag(), y.re() + 0.5, 0.5 - y.im()};
    double grad[6];
    for (int i = 0; i < 6; ++i) {
        const int partner = i < 3 ? i + 3 : i - 3;
        grad[i] = std::abs(4.0 * (z[i] - z[partner]));
    }
    double v = 0.0;
    for (int i = 0; i < 6; ++i) {
        for (int j = 0; j < 6; ++j) {
            v += grad[i] * grad[j] * std::sqrt(z[i] * (1 - z[i]) * z[j] * (1 - z[j]));
        }
    }
    return v;
}

double noisy_variance_term_bruteforce(const ReducedDensityMatrix& x, const ReducedDensityMatrix& y, double shrink) {
    const double z[6] = {x.diag(), x.re() + 0.5, 0.5 - x.im(), y.diag(), y.re() + 0.5, 0.5 - y.im()};
    double v = 0.0;
    for (int i = 0; i < 6; ++i) {
        for (int j = 0; j < 6; ++j) {
            v += 4.0 * shrink * std::abs(z[i] - z[i < 3 ? i + 3 : i - 3]) * 4.0 * shrink *
                 std::abs(z[j] - z[j < 3 ? j + 3 : j - 3]);
        }
    }
    return v;
}

ReducedDensityMatrix random_rho(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double bx;
    double by;
    double bz;
    do {
        bx = u(rng);
        by = u(rng);
        bz = u(rng);
    } while (bx * bx + by * by + bz * bz > 1.0);
    return {0.5 * (1 + bz), 0.5 * bx, -0.5 * by};
}

// Smallest N passing the exact side condition, by linear scan with Boost CDFs.
std::int64_t exact_ca_scan(double m, double mu, double p_ca, std::int64_t limit = 100000) {
    for (std::int64_t n = 1; n <= limit; ++n) {
        const boost::math::binomial_distribution<double> bd(static_cast<double>(n), m);
        double nm = static_cast<double>(n) * mu;
        if (std::abs(nm - std::round(nm)) < 1e-9) {
            nm = std::round(nm);
        }
        double prob;
        if (m > mu) {
            const double k = std::floor(nm);
            prob = k >= static_cast<double>(n) ? 0.0 : boost::math::cdf(boost::math::complement(bd, k));
        } else {
            const double k = std::ceil(nm) - 1;
            prob = k < 0 ? 0.0 : boost::math::cdf(bd, k);
        }
        if (prob >= p_ca) {
            return n;
        }
    }
    return -1;
}

}  // namespace

TEST(SpreadFq, HandArithmetic) {
    EXPECT_EQ(n_spread_fq(0.5, 0.1, 0.5, 0.9).shots, 1000);
    EXPECT_EQ(n_spread_fq(0.5, 0.1, 1.0, 0.9).shots, 250);
    const auto z = n_spread_fq(0.0, 0.1, 0.5, 0.9);
    EXPECT_TRUE(z.degenerate);
    EXPECT_EQ(z.shots, 1);
    EXPECT_TRUE(n_spread_fq(1.0, 0.1, 0.5, 0.9).degenerate);
    EXPECT_THROW(n_spread_fq(0.5, 0.1, 0.0, 0.9), DomainError);
    EXPECT_THROW(n_spread_fq(0.5, 0.0, 0.5, 0.9), DomainError);
    EXPECT_THROW(n_spread_fq(0.5, 0.1, 0.5, 1.0), DomainError);
}

TEST(SpreadFq, ChebyshevCoverage) {
    const double eps = 0.5;
    const double delta = 0.2;
    const double p = 0.9;
    const int reps = 10000;
    for (const double kappa : {0.1, 0.3, 0.5}) {
        const std::int64_t n = n_spread_fq(kappa, eps, delta, p).shots;
        int violations = 0;
        for (int r = 0; r < reps; ++r) {
            const auto s = sample_fidelity(kappa, n, {}, 4, derive_seed(2024, {static_cast<std::uint64_t>(r)}));
            violations += std::abs(s.estimate - kappa) >= eps * delta ? 1 : 0;
        }
        EXPECT_LE(violations / static_cast<double>(reps), (1 - p) + 3 * std::sqrt((1 - p) / reps)) << kappa;
    }
}

TEST(VarianceTerm, MatchesSixBySixBruteForce) {
    std::mt19937_64 rng(31);
    for (int t = 0; t < 200; ++t) {
        const auto x = random_rho(rng);
        const auto y = random_rho(rng);
        EXPECT_NEAR(pq_variance_term(x, y), variance_term_bruteforce(x, y), 1e-12);
        const double shrink = 1.0 - 0.003 * t;
        EXPECT_NEAR(pq_variance_term_noisy(x, y, shrink), noisy_variance_term_bruteforce(x, y, shrink), 1e-11);
    }
}

TEST(SpreadPq, ZeroStateAgainstMixedState) {
    const std::vector<ReducedDensityMatrix> x{{1.0, 0.0, 0.0}};
    const std::vector<ReducedDensityMatrix> y{ReducedDensityMatrix::maximally_mixed()};
    // Gradient (2,0,0,2,0,0), sigma (0,1/2,1/2,1/2,1/2,1/2): V = (2 * 1/2)^2 = 1.
    EXPECT_NEAR(pq_variance_sum(x, y), 1.0, 1e-15);
    EXPECT_NEAR(pq_variance_sum(x, y), variance_term_bruteforce(x[0], y[0]), 1e-15);
    const double kappa = projected_kernel(x, y, 1.0);
    EXPECT_NEAR(kappa, std::exp(-0.5), 1e-15);
    const auto b = n_spread_pq(x, y, kappa, 1.0, 0.1, 0.5, 0.9);
    EXPECT_NEAR(b.value, std::exp(-1.0) / (0.1 * 0.01 * 0.25), 1e-9);
    EXPECT_EQ(b.shots, static_cast<std::int64_t>(std::ceil(std::exp(-1.0) / (0.1 * 0.01 * 0.25))));
}

TEST(SpreadPq, IdenticalStatesAreDegenerate) {
    const std::vector<ReducedDensityMatrix> x{{0.7, 0.1, 0.2}, {0.4, 0.0, -0.1}};
    const auto b = n_spread_pq(x, x, 1.0, 1.0, 0.1, 0.5, 0.9);
    EXPECT_TRUE(b.degenerate);
    EXPECT_EQ(b.shots, 1);
    const auto nb = n_spread_noisy_pq(x, x, 1.0, 1.0, 0.1, 0.5, 0.9, {0.1});
    EXPECT_TRUE(nb.degenerate);
    EXPECT_EQ(nb.shots, 1);
}

TEST(SpreadPq, HomogeneousInGammaSquaredKappaSquared) {
    std::mt19937_64 rng(32);
    const std::vector<ReducedDensityMatrix> x{random_rho(rng), random_rho(rng), random_rho(rng)};
    const std::vector<ReducedDensityMatrix> y{random_rho(rng), random_rho(rng), random_rho(rng)};
    const double k1 = projected_kernel(x, y, 0.5);
    const double k2 = projected_kernel(x, y, 1.5);
    const auto b1 = n_spread_pq(x, y, k1, 0.5, 0.2, 0.3, 0.9);
    const auto b2 = n_spread_pq(x, y, k2, 1.5, 0.2, 0.3, 0.9);
    EXPECT_NEAR(b2.value / b1.value, (1.5 * 1.5 * k2 * k2) / (0.5 * 0.5 * k1 * k1), 1e-12);
}

TEST(CaFq, Examples) {
    EXPECT_EQ(n_ca_fq(0.5, 0.99).shots, 7);
    EXPECT_EQ(n_ca_fq(1.0, 0.99).shots, 1);
    EXPECT_EQ(n_ca_fq(std::ldexp(1.0, -10), 0.99).shots, 4714);
    EXPECT_EQ(n_ca_fq(std::ldexp(1.0, -10), 0.99).shots,
              static_cast<std::int64_t>(std::ceil(std::log(0.01) / std::log(1.0 - std::ldexp(1.0, -10)))));
    const auto zero = n_ca_fq(0.0, 0.99);
    EXPECT_TRUE(zero.unbounded);
    EXPECT_EQ(zero.shots, kUnboundedShots);
}

TEST(CaFq, MinimalAgainstDirectProbability) {
    std::mt19937_64 rng(33);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 200; ++t) {
        const double m = std::pow(10.0, -4.0 * u(rng));
        const double p = 0.5 + 0.499 * u(rng);
        const std::int64_t n = n_ca_fq(m, p).shots;
        auto covered = [&](std::int64_t k) { return 1.0 - std::pow(1.0 - m, static_cast<double>(k)) >= p; };
        EXPECT_TRUE(covered(n)) << m << ' ' << p;
        if (n > 1) {
            EXPECT_FALSE(covered(n - 1)) << m << ' ' << p;
        }
    }
}

TEST(CaFq, EmpiricalCoverage) {
    const int reps = 10000;
    const double p = 0.99;
    for (const double m : {std::ldexp(1.0, -4), std::ldexp(1.0, -8)}) {
        const std::int64_t n = n_ca_fq(m, p).shots;
        int hits = 0;
        for (int r = 0; r < reps; ++r) {
            hits += sample_fidelity(m, n, {}, 8, derive_seed(5, {static_cast<std::uint64_t>(r)})).successes > 0 ? 1 : 0;
        }
        EXPECT_GE(hits / static_cast<double>(reps), p - 3 * std::sqrt(p * (1 - p) / reps)) << m;
    }
}

TEST(CaExact, ReducesToFidelityFormula) {
    EXPECT_EQ(n_ca_binomial_exact(0.5, 0.0, 0.99).shots, 7);
    for (const double m : {0.01, 0.1, 0.3, 0.77}) {
        for (const double p : {0.6, 0.9, 0.999}) {
            EXPECT_EQ(n_ca_binomial_exact(m, 0.0, p).shots, n_ca_fq(m, p).shots) << m << ' ' << p;
        }
    }
}

TEST(CaExact, MatchesLinearScanOracle) {
    std::mt19937_64 rng(34);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int checked = 0;
    while (checked < 50) {
        const double mu = 0.5;
        const double sign = u(rng) < 0.5 ? -1.0 : 1.0;
        const double m = mu + sign * (0.03 + 0.3 * u(rng));
        const double p = 0.55 + 0.44 * u(rng);
        const std::int64_t want = exact_ca_scan(m, mu, p);
        if (want < 0) {
            continue;
        }
        EXPECT_EQ(n_ca_binomial_exact(m, mu, p).shots, want) << m << ' ' << p;
        ++checked;
    }
    // Off-centre concentration values and a snapped N mu boundary.
    EXPECT_EQ(n_ca_binomial_exact(0.3, 0.2, 0.95).shots, exact_ca_scan(0.3, 0.2, 0.95));
    EXPECT_EQ(n_ca_binomial_exact(0.1, 0.2, 0.95).shots, exact_ca_scan(0.1, 0.2, 0.95));
    EXPECT_EQ(n_ca_binomial_exact(0.55, 0.5, 0.9772).shots, exact_ca_scan(0.55, 0.5, 0.9772));
}

TEST(CaExact, FirstPassingNIsMinimal) {
    std::mt19937_64 rng(35);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 50; ++t) {
        const double mu = 0.1 + 0.8 * u(rng);
        const double m = std::clamp(mu + (u(rng) - 0.5) * 0.4, 0.001, 0.999);
        if (std::abs(m - mu) < 0.02) {
            continue;
        }
        const double p = 0.6 + 0.39 * u(rng);
        const auto n = n_ca_binomial_exact(m, mu, p).shots;
        EXPECT_TRUE(detail::ca_condition_holds(n, m, mu, p));
        // The condition is not monotone in N, so minimality means no smaller N passes.
        for (std::int64_t k = 1; k < n; ++k) {
            ASSERT_FALSE(detail::ca_condition_holds(k, m, mu, p)) << m << ' ' << mu << ' ' << p << ' ' << k;
        }
    }
}

TEST(CaExact, WindowedSearchMatchesFullScan) {
    // Candidates far above the 16 / |m - mu| window, checked against a scan from N = 1.
    std::mt19937_64 rng(39);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 60; ++t) {
        const double mu = 0.2 + 0.6 * u(rng);
        const double gap = (u(rng) < 0.5 ? -1.0 : 1.0) * (0.003 + 0.01 * u(rng));
        const double m = mu + gap;
        const double p = 0.9 + 0.099 * u(rng);
        const auto n = n_ca_binomial_exact(m, mu, p).shots;
        EXPECT_EQ(n, detail::first_passing_scan(m, mu, p, 1, n)) << m << ' ' << mu << ' ' << p;
    }
}

TEST(CaExact, TinyGapsStayBoundedAndPass) {
    // Gaps near 1e-4 put N around 1e8, where the tail jitters by about 1e-9.
    for (const double m : {0.50012336970608628, 0.50008806449150611, 0.49991}) {
        const auto b = n_ca_binomial_exact(m, 0.5, 0.99);
        ASSERT_FALSE(b.unbounded) << m;
        EXPECT_TRUE(detail::ca_condition_holds(b.shots, m, 0.5, 0.99)) << m;
        EXPECT_LE(b.shots, detail::block_search(m, 0.5, 0.99)) << m;
        const auto normal = n_ca_pq_normal(m, 0.5, 0.99).shots;
        EXPECT_LT(std::abs(static_cast<double>(b.shots - normal)), 0.01 * static_cast<double>(normal)) << m;
    }
}

TEST(CaExact, Examples) {
    EXPECT_THROW(n_ca_binomial_exact(0.5, 0.5, 0.9), BoundNotImposed);
    EXPECT_LE(n_ca_binomial_exact(0.6, 0.5, 0.5).shots, n_ca_binomial_exact(0.6, 0.5, 0.9).shots);
    const auto exact = n_ca_binomial_exact(0.6, 0.5, 0.9772).shots;
    const auto normal = n_ca_pq_normal(0.6, 0.5, 0.9772).shots;
    EXPECT_EQ(normal, 96);
    EXPECT_GE(exact, 50);
    EXPECT_LE(std::abs(static_cast<double>(exact - normal)), 0.1 * static_cast<double>(normal));
}

TEST(CaNormal, Examples) {
    const boost::math::normal_distribution<double> nd;
    const double z = boost::math::quantile(nd, 0.9772);
    EXPECT_EQ(n_ca_pq_normal(0.6, 0.5, 0.9772).shots, static_cast<std::int64_t>(std::ceil(z * z * 0.24 / 0.01)));
    EXPECT_EQ(n_ca_pq_normal(0.6, 0.5, 0.9772).shots, 96);
    EXPECT_EQ(n_ca_pq_normal(0.55, 0.5, 0.9772).shots, static_cast<std::int64_t>(std::ceil(z * z * 0.2475 / 0.0025)));
    EXPECT_EQ(n_ca_pq_normal(0.6, 0.5, 0.5).shots, 1);
    EXPECT_THROW(n_ca_pq_normal(0.5, 0.5, 0.9), BoundNotImposed);
    const double a = n_ca_pq_normal(0.5 + 0.2, 0.5, 0.95).value / (0.7 * 0.3);
    const double b = n_ca_pq_normal(0.5 + 0.1, 0.5, 0.95).value / (0.6 * 0.4);
    EXPECT_NEAR(b / a, 4.0, 1e-12);
}

TEST(SpreadNoisy, Examples) {
    EXPECT_EQ(n_spread_noisy_fq(0.1, 0.5, 0.9).shots, 16000);
    for (const double kappa : {0.1, 0.5, 0.8}) {
        const double ratio = n_spread_noisy_fq(0.1, 0.5, 0.9).value / n_spread_fq(kappa, 0.1, 0.5, 0.9).value;
        EXPECT_NEAR(ratio, 4.0 / (kappa * (1 - kappa)), 1e-9);
    }
}

TEST(CaNoisy, FidelityExample) {
    const double mf = 0.8 * 0.1 + 0.2 * 0.0625;
    EXPECT_NEAR(mf, 0.0925, 1e-15);
    const auto b = n_ca_noisy(KernelFamily::FidelityQ, 0.1, 0.0, 0.99, {0.2}, 4);
    EXPECT_EQ(b.shots, 48);
    EXPECT_EQ(b.shots, static_cast<std::int64_t>(std::ceil(std::log(0.01) / std::log(1 - mf))));
    const boost::math::binomial_distribution<double> at(48.0, mf);
    const boost::math::binomial_distribution<double> below(47.0, mf);
    EXPECT_GE(boost::math::cdf(boost::math::complement(at, 0.0)), 0.99);
    EXPECT_LT(boost::math::cdf(boost::math::complement(below, 0.0)), 0.99);
}

TEST(CaNoisy, ConcentrationPointIsFixed) {
    for (const double p : {0.0, 0.3, 1.0}) {
        EXPECT_THROW(n_ca_noisy(KernelFamily::ProjectedQ, 0.5, 0.5, 0.9, {p}, 3), BoundNotImposed);
        EXPECT_THROW(n_ca_noisy(KernelFamily::ProjectedQ, 0.5, 0.5, 0.9, {p}, 3, CaMethod::Exact), BoundNotImposed);
    }
}

TEST(CaNoisy, ZeroNoiseIsNoiseless) {
    std::mt19937_64 rng(36);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 50; ++t) {
        const double m = 0.01 + 0.98 * u(rng);
        const double p = 0.5 + 0.49 * u(rng);
        const int n = 1 + t % 8;
        EXPECT_EQ(n_ca_noisy(KernelFamily::FidelityQ, m, 0.0, p, {0.0}, n), n_ca_fq(m, p));
        if (std::abs(m - 0.5) > 1e-3) {
            EXPECT_EQ(n_ca_noisy(KernelFamily::ProjectedQ, m, 0.5, p, {0.0}, n), n_ca_pq_normal(m, 0.5, p));
            EXPECT_EQ(n_ca_noisy(KernelFamily::ProjectedQ, m, 0.5, p, {0.0}, n, CaMethod::Exact),
                      n_ca_binomial_exact(m, 0.5, p));
        }
    }
}

TEST(ErrorBudget, Examples) {
    const auto fq = error_budget(KernelFamily::FidelityQ, 0.1, 0.1, 0.2, 2);
    EXPECT_NEAR(fq.p_max, 0.02 / (2 * 0.15), 1e-15);
    EXPECT_FALSE(fq.unconstrained);
    const auto pq = error_budget(KernelFamily::ProjectedQ, std::exp(-1.0), 0.1, 0.4, 3);
    EXPECT_NEAR(pq.p_max, 0.04 / (4 * std::exp(-1.0)), 1e-15);
    const auto flat = error_budget(KernelFamily::FidelityQ, 0.25, 0.1, 0.2, 2);
    EXPECT_TRUE(flat.unconstrained);
    EXPECT_EQ(flat.p_max, 1.0);
    EXPECT_EQ(error_budget(KernelFamily::FidelityQ, 0.9, 10.0, 0.5, 2).p_max, 1.0);
}

TEST(ErrorBudget, NoiseShiftStaysInsideBudget) {
    // At p = p_max the depolarized kernel moves by exactly eps * Delta / 2.
    for (const int n : {2, 4, 8}) {
        for (const double kappa : {0.05, 0.3, 0.7}) {
            const double eps = 0.2;
            const double delta = 0.1;
            const auto b = error_budget(KernelFamily::FidelityQ, kappa, eps, delta, n);
            const double shift = std::abs(NoiseModel{b.p_max}.depolarize(kappa, std::ldexp(1.0, -n)) - kappa);
            EXPECT_LE(shift, eps * delta / 2 + 1e-15);
        }
    }
}

TEST(Bounds, MonotoneInParameters) {
    std::mt19937_64 rng(37);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 200; ++t) {
        const double kappa = 0.01 + 0.98 * u(rng);
        const double eps = 0.05 + u(rng);
        const double delta = 0.01 + u(rng);
        const double p1 = 0.5 + 0.4 * u(rng);
        const double p2 = p1 + (0.99 - p1) * u(rng);
        EXPECT_LE(n_spread_fq(kappa, eps, delta, p1).shots, n_spread_fq(kappa, eps, delta, p2).shots);
        EXPECT_GE(n_spread_fq(kappa, eps, delta, p1).shots, n_spread_fq(kappa, eps * 1.5, delta, p1).shots);
        EXPECT_GE(n_spread_fq(kappa, eps, delta, p1).shots, n_spread_fq(kappa, eps, delta * 1.5, p1).shots);
        EXPECT_LE(n_ca_fq(kappa, p1).shots, n_ca_fq(kappa, p2).shots);
        const double d = 0.01 + 0.3 * u(rng);
        EXPECT_LE(n_ca_pq_normal(0.5 + d, 0.5, p1).shots, n_ca_pq_normal(0.5 + d, 0.5, p2).shots);
        EXPECT_GE(n_ca_pq_normal(0.5 - d, 0.5, p1).shots, n_ca_pq_normal(0.5 - 1.5 * d, 0.5, p1).shots);
        EXPECT_LE(n_ca_binomial_exact(0.5 + d, 0.5, p1).shots, n_ca_binomial_exact(0.5 + d, 0.5, p2).shots);
    }
}

TEST(EntryBudget, TakesMaximumAndFlagsEffect) {
    BudgetSettings s;
    s.eps = 0.1;
    s.p_spread = 0.9;
    s.p_ca = 0.99;
    const auto spread_wins = entry_budget_fq(0.5, 0.5, 4, s);
    EXPECT_EQ(spread_wins.n_spread, 1000);
    EXPECT_EQ(spread_wins.n_ca, 7);
    EXPECT_EQ(spread_wins.n_required, 1000);
    EXPECT_EQ(spread_wins.effect_dominant, Effect::Spread);
    s.eps = 100.0;
    const auto ca_wins = entry_budget_fq(std::ldexp(1.0, -10), 0.5, 10, s);
    EXPECT_EQ(ca_wins.n_ca, 4714);
    EXPECT_EQ(ca_wins.n_required, 4714);
    EXPECT_EQ(ca_wins.effect_dominant, Effect::ConcentrationAvoidance);
}

TEST(EntryBudget, ProjectedUsesLargestComponentBound) {
    const std::vector<ReducedDensityMatrix> x{{0.9, 0.1, 0.0}, {0.5, 0.0, 0.0}};
    const std::vector<ReducedDensityMatrix> y{{0.55, 0.0, 0.0}, {0.5, 0.0, 0.0}};
    BudgetSettings s;
    const auto b = entry_budget_pq(x, y, 1.0, 0.2, s);
    // Closest non-trivial measured probability is 0.55 (diag of y[0]).
    EXPECT_EQ(b.n_ca, n_ca_pq_normal(0.55, 0.5, s.p_ca).shots);
    EXPECT_EQ(b.n_required, std::max(b.n_ca, b.n_spread));
}

TEST(DatasetBudget, FidelityMedianOneHalf) {
    KernelMatrix k(4, KernelFamily::FidelityQ, 1.0, {3, 1, Entanglement::Linear});
    const double vals[6] = {0.2, 0.4, 0.5, 0.5, 0.6, 0.8};
    int idx = 0;
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = i + 1; j < 4; ++j) {
            k.set_symmetric(i, j, vals[idx++]);
        }
    }
    BudgetSettings s;
    s.p_ca = 0.99;
    const auto b = dataset_budget(k, s);
    EXPECT_EQ(b.n_ca, 7);
    EXPECT_EQ(b.inputs.kappa_repr, 0.5);
    EXPECT_EQ(b.n_spread, n_spread_fq(0.5, s.eps, b.inputs.delta_ensemble, s.p_spread).shots);
}

TEST(DatasetBudget, ProjectedEpsilonR2Inversion) {
    const int n = 3;
    const double gamma = 0.7;
    const double c = 0.05;
    KernelMatrix k(6, KernelFamily::ProjectedQ, gamma, {n, 1, Entanglement::Linear});
    for (std::size_t i = 0; i < 6; ++i) {
        for (std::size_t j = i + 1; j < 6; ++j) {
            k.set_symmetric(i, j, std::exp(-12.0 * gamma * n * c * c));
        }
    }
    EXPECT_NEAR(epsilon_r2(k, n).value, c, 1e-15);
    // Constant entries have zero IQR: the dataset budget refuses them.
    EXPECT_THROW(dataset_budget(k, {}), DomainError);
    double t = 0.02;
    for (std::size_t i = 0; i < 6; ++i) {
        for (std::size_t j = i + 1; j < 6; ++j) {
            k.set_symmetric(i, j, std::exp(-t));
            t += 0.015;
        }
    }
    k.set_symmetric(0, 1, 1.0);
    const auto e = epsilon_r2(k, n);
    EXPECT_EQ(e.excluded_unit_entries, 1U);
    double log_sum = 0.0;
    for (int idx = 1; idx < 15; ++idx) {
        log_sum -= 0.02 + 0.015 * idx;
    }
    EXPECT_NEAR(e.mean_log_kappa, log_sum / 14.0, 1e-14);
    EXPECT_NEAR(e.value, std::sqrt(-log_sum / 14.0 / (12.0 * gamma * n)), 1e-14);
    const auto b = dataset_budget(k, {});
    EXPECT_EQ(b.inputs.excluded_unit_entries, 1U);
    EXPECT_FALSE(b.warnings.empty());
    const boost::math::normal_distribution<double> nd;
    const double z = boost::math::quantile(nd, kDefaultPCa);
    EXPECT_EQ(b.n_ca, static_cast<std::int64_t>(std::ceil(z * z * 0.25 / (e.value * e.value))));
    EXPECT_EQ(b.inputs.spread_path, SpreadPath::RepresentativeStates);
}

TEST(DatasetBudget, EpsilonR1ConstantOffsets) {
    const double c = 0.13;
    const auto rho = from_measured_probabilities({0.5 + c, 0.5 - c, 0.5 + c});
    const std::vector<ReducedStates> table{{rho, rho}, {rho, rho}, {rho, rho}};
    EXPECT_NEAR(epsilon_r1(table), c, 1e-15);
}

TEST(DatasetBudget, ZeroNoiseEqualsNoiseless) {
    std::mt19937_64 rng(38);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::vector<DataPoint> pts(12, DataPoint(3));
    for (auto& p : pts) {
        for (auto& v : p) {
            v = u(rng);
        }
    }
    const FeatureMapConfig cfg{3, 1, Entanglement::Full};
    for (const auto fam : {KernelFamily::FidelityQ, KernelFamily::ProjectedQ}) {
        const auto k = gram_matrix(pts, cfg, fam, 0.5);
        BudgetSettings s;
        s.noise.p_error = 0.0;
        const auto b = dataset_budget(k, s);
        EXPECT_FALSE(b.noisy);
        EXPECT_EQ(b.inputs.kappa_repr, b.inputs.kappa_repr_f);
    }
}
