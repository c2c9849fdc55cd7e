#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "qkshots/errors.hpp"
#include "qkshots/feature_map.hpp"

using namespace qkshots;
using std::numbers::pi;

TEST(EncodingAngles, PiPointHasZeroPairAngle) {
    const std::vector<double> x{pi, pi};
    const auto a = encoding_angles(x, {2, 1, Entanglement::Full});
    ASSERT_EQ(a.singles.size(), 2U);
    EXPECT_EQ(a.singles[0], pi);
    EXPECT_EQ(a.singles[1], pi);
    ASSERT_EQ(a.pairs.size(), 1U);
    EXPECT_EQ(a.pairs[0].angle, 0.0);
}

TEST(EncodingAngles, ZeroPointHasPiSquaredPairAngle) {
    const std::vector<double> x{0.0, 0.0};
    const auto a = encoding_angles(x, {2, 1, Entanglement::Full});
    EXPECT_DOUBLE_EQ(a.pairs[0].angle, pi * pi);
}

TEST(EncodingAngles, PairCounts) {
    const std::vector<double> x(4, 0.3);
    EXPECT_EQ(encoding_angles(x, {4, 1, Entanglement::Full}).pairs.size(), 6U);
    EXPECT_EQ(encoding_angles(x, {4, 1, Entanglement::Linear}).pairs.size(), 3U);
}

TEST(EncodingAngles, TooFewFeatures) {
    const std::vector<double> x{0.1, 0.2};
    EXPECT_THROW(encoding_angles(x, {3, 1, Entanglement::Linear}), ShapeError);
}

TEST(EncodingAngles, UsesLeadingFeaturesOnly) {
    const std::vector<double> x{0.1, 0.2, 0.3, 9.0};
    const auto a = encoding_angles(x, {3, 1, Entanglement::Linear});
    EXPECT_EQ(a.singles, (std::vector<double>{0.1, 0.2, 0.3}));
}

TEST(FeatureMapConfig, Validation) {
    EXPECT_THROW((FeatureMapConfig{0, 1, Entanglement::Full}.validate()), ConfigError);
    EXPECT_THROW((FeatureMapConfig{2, 0, Entanglement::Full}.validate()), ConfigError);
    EXPECT_THROW((FeatureMapConfig{15, 1, Entanglement::Full}.validate()), ConfigError);
    EXPECT_NO_THROW((FeatureMapConfig{15, 1, Entanglement::Full, 15}.validate()));
    EXPECT_THROW(parse_entanglement("circular"), ConfigError);
    EXPECT_EQ(parse_entanglement("linear"), Entanglement::Linear);
    EXPECT_EQ(parse_entanglement("full"), Entanglement::Full);
}

TEST(Embed, SingleQubitHandComputation) {
    const double x0 = 0.81;
    const std::vector<double> x{x0};
    const auto s = embed(x, {1, 1, Entanglement::Linear});
    const double r = 1.0 / std::numbers::sqrt2;
    EXPECT_NEAR(std::abs(s[0] - r * std::polar(1.0, x0)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(s[1] - r * std::polar(1.0, -x0)), 0.0, 1e-15);
}

TEST(Embed, ZeroAnglesTwoRepetitionsReturnToVacuum) {
    const std::vector<double> x{0.0};
    const auto s = embed(x, {1, 2, Entanglement::Linear});
    EXPECT_NEAR(std::abs(s[0] - Complex(1.0, 0.0)), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(s[1]), 0.0, 1e-12);
}

TEST(Embed, UnitNormAndDeterministic) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> x(6);
        for (auto& v : x) {
            v = u(rng);
        }
        const FeatureMapConfig cfg{6, 1 + trial % 3, trial % 2 ? Entanglement::Full : Entanglement::Linear};
        const auto a = embed(x, cfg);
        const auto b = embed(x, cfg);
        EXPECT_NEAR(a.norm_squared(), 1.0, 1e-10);
        for (std::size_t i = 0; i < a.dimension(); ++i) {
            EXPECT_EQ(a[i], b[i]);
        }
    }
}

TEST(Embed, ZeroPointMatchesDenseCircuit) {
    for (int n = 1; n <= 4; ++n) {
        const std::vector<double> x(static_cast<std::size_t>(n), 0.0);
        for (const bool full : {false, true}) {
            const auto got = embed(x, {n, 1, full ? Entanglement::Full : Entanglement::Linear});
            const auto want = oracle::zz_feature_map(x, n, 1, full);
            for (std::size_t i = 0; i < got.dimension(); ++i) {
                EXPECT_NEAR(std::abs(got[i] - want(static_cast<Eigen::Index>(i))), 0.0, 1e-10);
            }
        }
    }
}

TEST(Embed, RandomPointsMatchDenseCircuit) {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int n = 1; n <= 4; ++n) {
        for (int reps = 1; reps <= 3; ++reps) {
            std::vector<double> x(static_cast<std::size_t>(n));
            for (auto& v : x) {
                v = u(rng);
            }
            for (const bool full : {false, true}) {
                const auto got = embed(x, {n, reps, full ? Entanglement::Full : Entanglement::Linear});
                const auto want = oracle::zz_feature_map(x, n, reps, full);
                for (std::size_t i = 0; i < got.dimension(); ++i) {
                    EXPECT_NEAR(std::abs(got[i] - want(static_cast<Eigen::Index>(i))), 0.0, 1e-10);
                }
            }
        }
    }
}

TEST(Embed, SingleQubitFidelityClosedForm) {
    for (int i = 0; i < 100; ++i) {
        const double x0 = -3.0 + 0.06 * i;
        const double y0 = 1.3 - 0.045 * i;
        const std::vector<double> x{x0};
        const std::vector<double> y{y0};
        const FeatureMapConfig cfg{1, 1, Entanglement::Linear};
        const double f = std::norm(inner_product(embed(x, cfg), embed(y, cfg)));
        const double c = std::cos(x0 - y0);
        EXPECT_NEAR(f, c * c, 1e-10);
    }
}
