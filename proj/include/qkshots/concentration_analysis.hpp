// Statistic-versus-qubit-count series, exponential fits C 2^(alpha n) with an
// elbow rule for discarding pre-asymptotic points, extrapolation, and the
// exponential-concentration check.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qkshots/characteristics.hpp"
#include "qkshots/dataset_pipeline.hpp"
#include "qkshots/errors.hpp"
#include "qkshots/feature_map.hpp"
#include "qkshots/kernels.hpp"
#include "qkshots/shot_estimator.hpp"

namespace qkshots {

enum class Statistic {
    Mean,
    Std,
    Median,
    IQR,
    NSpread,
    NCA,
    NRequired,
    MaxDeviation,
    StdDeviation,
    Expressibility,
    RelativeEntropy,
};

inline std::string_view to_string(Statistic s) {
    switch (s) {
        case Statistic::Mean:
            return "mean";
        case Statistic::Std:
            return "std";
        case Statistic::Median:
            return "median";
        case Statistic::IQR:
            return "iqr";
        case Statistic::NSpread:
            return "n_spread";
        case Statistic::NCA:
            return "n_ca";
        case Statistic::NRequired:
            return "n_required";
        case Statistic::MaxDeviation:
            return "max_deviation";
        case Statistic::StdDeviation:
            return "std_deviation";
        case Statistic::Expressibility:
            return "expressibility";
        case Statistic::RelativeEntropy:
            return "relative_entropy";
    }
    return "?";
}

struct SeriesPoint {
    int n = 0;
    double value = 0.0;
};

struct SeriesMetadata {
    KernelFamily family = KernelFamily::FidelityQ;
    int repetitions = 1;
    Entanglement entanglement = Entanglement::Full;
    std::string dataset_id;
};

struct ScalingSeries {
    Statistic statistic = Statistic::Mean;
    std::vector<SeriesPoint> points;
    SeriesMetadata metadata;

    void validate() const {
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (!std::isfinite(points[i].value)) {
                throw DomainError("series '" + std::string(to_string(statistic)) + "': non-finite value at n=" +
                                  std::to_string(points[i].n));
            }
            if (i > 0 && points[i].n <= points[i - 1].n) {
                throw DomainError("series '" + std::string(to_string(statistic)) +
                                  "': n values must be strictly increasing");
            }
        }
    }
};

struct FitOptions {
    double r2_threshold = 0.99;
    // Smallest number of points a candidate fit may use. Three-point fits pass
    // the R^2 gate too often on pure noise.
    std::size_t min_fit_points = 4;
};

// value ~ C 2^(alpha n), fitted on points[dropped_prefix:].
struct ScalingFit {
    double log2_C = 0.0;
    double alpha = 0.0;
    double r_squared = 0.0;
    std::size_t dropped_prefix = 0;
    bool valid = false;
    double r2_threshold = 0.99;
    int n_first = 0;  // first and last n of the fitted points
    int n_last = 0;
    std::vector<double> r_squared_by_drop;
    std::string selection;  // "elbow", "threshold" or "best_r2"

    double C() const { return std::exp2(log2_C); }
};

struct LineFit {
    double intercept = 0.0;
    double slope = 0.0;
    double r_squared = 0.0;
};

// Ordinary least squares of y on x. R^2 is 1 for a perfect fit, including the
// constant case where the total sum of squares vanishes.
inline LineFit least_squares(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw ShapeError("least_squares: need at least two (x, y) pairs of equal length");
    }
    const auto len = static_cast<double>(x.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= len;
    my /= len;
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0) {
        throw DomainError("least_squares: all x values are equal");
    }
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (f.intercept + f.slope * x[i]);
        ss_res += r * r;
    }
    const double scale = std::max(1.0, syy + my * my * len);
    if (syy <= 1e-24 * scale) {
        f.r_squared = ss_res <= 1e-20 * scale ? 1.0 : 0.0;
    } else {
        f.r_squared = 1.0 - ss_res / syy;
    }
    return f;
}

// Elbow rule over prefix drops d = 0..len-min_fit_points, each a line fit on
// (n, log2 value). With R(d) the R^2 of drop d and R(-1) = R(0), R(D+1) = R(D),
// the elbow is the smallest d maximizing [R(d) - R(d-1)] - [R(d+1) - R(d)].
// If that fit misses the threshold, take the smallest d meeting it; failing
// that, the d with the largest R^2.
inline ScalingFit fit_exponential(std::span<const SeriesPoint> points, const FitOptions& opt = {}) {
    const std::size_t min_pts = std::max<std::size_t>(2, opt.min_fit_points);
    if (points.size() < std::max<std::size_t>(4, min_pts)) {
        throw DomainError("fit_exponential: insufficient data, need at least " +
                          std::to_string(std::max<std::size_t>(4, min_pts)) + " points, got " +
                          std::to_string(points.size()));
    }
    std::vector<double> x;
    std::vector<double> y;
    for (const SeriesPoint& p : points) {
        if (!(p.value > 0.0) || !std::isfinite(p.value)) {
            throw DomainError("fit_exponential: values must be finite and > 0 (n=" + std::to_string(p.n) + ")");
        }
        x.push_back(static_cast<double>(p.n));
        y.push_back(std::log2(p.value));
    }
    const std::size_t drops = points.size() - min_pts + 1;
    std::vector<LineFit> fits;
    std::vector<double> r2;
    for (std::size_t d = 0; d < drops; ++d) {
        fits.push_back(least_squares(std::span(x).subspan(d), std::span(y).subspan(d)));
        r2.push_back(fits.back().r_squared);
    }
    constexpr double kTie = 1e-12;
    std::size_t chosen = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t d = 0; d < drops; ++d) {
        const double prev = d == 0 ? r2[0] : r2[d - 1];
        const double next = d + 1 < drops ? r2[d + 1] : r2[d];
        const double score = (r2[d] - prev) - (next - r2[d]);
        if (score > best + kTie) {
            best = score;
            chosen = d;
        }
    }
    std::string how = "elbow";
    if (r2[chosen] < opt.r2_threshold) {
        const auto it = std::find_if(r2.begin(), r2.end(), [&](double v) { return v >= opt.r2_threshold; });
        if (it != r2.end()) {
            chosen = static_cast<std::size_t>(it - r2.begin());
            how = "threshold";
        } else {
            chosen = static_cast<std::size_t>(std::max_element(r2.begin(), r2.end()) - r2.begin());
            how = "best_r2";
        }
    }
    ScalingFit f;
    f.log2_C = fits[chosen].intercept;
    f.alpha = fits[chosen].slope;
    f.r_squared = fits[chosen].r_squared;
    f.dropped_prefix = chosen;
    f.valid = f.r_squared >= opt.r2_threshold;
    f.r2_threshold = opt.r2_threshold;
    f.n_first = points[chosen].n;
    f.n_last = points.back().n;
    f.r_squared_by_drop = std::move(r2);
    f.selection = std::move(how);
    return f;
}

inline ScalingFit fit_exponential(const ScalingSeries& series, const FitOptions& opt = {}) {
    series.validate();
    return fit_exponential(std::span<const SeriesPoint>(series.points), opt);
}

// 2^(log2_C + alpha n_target). Refuses fits that missed the R^2 gate.
inline double extrapolate(const ScalingFit& fit, int n_target) {
    if (!fit.valid) {
        throw DomainError("extrapolate: fit is not valid (R^2 = " + std::to_string(fit.r_squared) + " < " +
                          std::to_string(fit.r2_threshold) + ")");
    }
    return std::exp2(fit.log2_C + fit.alpha * static_cast<double>(n_target));
}

enum class ConcentrationMode { Deterministic, Probabilistic };

// Deterministic: max |kappa - mu| over the off-diagonal entries.
// Probabilistic: standard deviation of the off-diagonal entries.
inline double deviation_statistic(const KernelMatrix& k, double mu, ConcentrationMode mode) {
    const auto values = k.off_diagonal();
    if (values.empty()) {
        throw ShapeError("deviation_statistic: need m >= 2");
    }
    if (mode == ConcentrationMode::Probabilistic) {
        return population_stddev(values);
    }
    double worst = 0.0;
    for (const double v : values) {
        worst = std::max(worst, std::abs(v - mu));
    }
    return worst;
}

struct ConcentrationReport {
    ScalingFit fit;
    bool concentrated = false;
    double b = 1.0;  // 2^-alpha; > 1 means decay like 1/b^n
};

inline ConcentrationReport concentration_check(const ScalingSeries& series, const FitOptions& opt = {}) {
    ConcentrationReport r;
    r.fit = fit_exponential(series, opt);
    r.b = std::exp2(-r.fit.alpha);
    r.concentrated = r.fit.valid && r.fit.alpha < -1e-9;
    return r;
}

struct SweepConfig {
    KernelFamily family = KernelFamily::FidelityQ;
    FeatureMapConfig feature_map{};  // n_qubits is overridden by n_values
    std::vector<int> n_values;
    double gamma = kDefaultGamma;
    BudgetSettings budget{};
    bool characteristics = false;  // also emit expressibility and relative entropy
    unsigned threads = 1;
};

struct SweepResult {
    std::vector<ScalingSeries> series;
    std::vector<std::string> warnings;
};

inline ScalingSeries* find_series(std::vector<ScalingSeries>& all, Statistic s) {
    for (auto& x : all) {
        if (x.statistic == s) {
            return &x;
        }
    }
    return nullptr;
}

inline const ScalingSeries* find_series(const std::vector<ScalingSeries>& all, Statistic s) {
    for (const auto& x : all) {
        if (x.statistic == s) {
            return &x;
        }
    }
    return nullptr;
}

// For each n: keep the n highest-variance features, build the exact Gram
// matrix and record its statistics and dataset-level shot budget.
inline SweepResult sweep(const Dataset& data, const SweepConfig& cfg) {
    if (cfg.n_values.empty()) {
        throw ConfigError("sweep: n_values is empty");
    }
    const int n_max = *std::max_element(cfg.n_values.begin(), cfg.n_values.end());
    if (n_max > static_cast<int>(data.n_features)) {
        throw ConfigError("sweep: n up to " + std::to_string(n_max) + " needs that many features, dataset has " +
                          std::to_string(data.n_features));
    }
    SeriesMetadata meta{cfg.family, cfg.feature_map.repetitions, cfg.feature_map.entanglement, data.id};
    std::vector<Statistic> stats = {Statistic::Mean,    Statistic::Std, Statistic::Median,   Statistic::IQR,
                                    Statistic::NSpread, Statistic::NCA, Statistic::NRequired};
    if (cfg.characteristics) {
        stats.push_back(Statistic::Expressibility);
        stats.push_back(Statistic::RelativeEntropy);
    }
    SweepResult out;
    for (const Statistic s : stats) {
        out.series.push_back({s, {}, meta});
    }
    auto add = [&](Statistic s, int n, double v) { find_series(out.series, s)->points.push_back({n, v}); };

    std::vector<int> ns = cfg.n_values;
    std::sort(ns.begin(), ns.end());
    ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
    for (const int n : ns) {
        FeatureMapConfig fm = cfg.feature_map;
        fm.n_qubits = n;
        fm.validate();
        const Dataset sel = select_features(data, static_cast<std::size_t>(n));
        const auto points = sel.points(static_cast<std::size_t>(n));
        KernelMatrix k = gram_matrix(points, fm, cfg.family, cfg.gamma, cfg.threads);
        k.dataset_id = data.id;
        const KernelStatistics st = kernel_statistics(k);
        add(Statistic::Mean, n, st.mean);
        add(Statistic::Std, n, st.std);
        add(Statistic::Median, n, st.median);
        add(Statistic::IQR, n, st.iqr);
        try {
            const ShotBudget b = dataset_budget(k, cfg.budget);
            if (!b.spread.unbounded) {
                add(Statistic::NSpread, n, static_cast<double>(b.n_spread));
            }
            if (!b.ca.unbounded) {
                add(Statistic::NCA, n, static_cast<double>(b.n_ca));
            }
            if (!b.spread.unbounded && !b.ca.unbounded) {
                add(Statistic::NRequired, n, static_cast<double>(b.n_required));
            }
        } catch (const std::exception& e) {
            out.warnings.push_back("n=" + std::to_string(n) + ": shot budget skipped: " + e.what());
        }
        if (cfg.characteristics) {
            add(Statistic::Expressibility, n, expressibility(points, fm, cfg.threads));
            add(Statistic::RelativeEntropy, n, mean_relative_entropy(points, fm, cfg.threads));
        }
    }
    return out;
}

}  // namespace qkshots
