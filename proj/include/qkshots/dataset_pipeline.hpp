// Binary-classification datasets: CSV ingestion, twonorm synthesis,
// standardization, variance-ordered feature selection and stratified subsets.

#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "qkshots/errors.hpp"
#include "qkshots/kernels.hpp"
#include "qkshots/rng.hpp"

namespace qkshots {

struct Dataset {
    std::string id;
    std::size_t m = 0;
    std::size_t n_features = 0;
    std::vector<double> features;  // row-major, m x n_features
    std::vector<int> labels;       // 0 or 1
    std::array<std::string, 2> class_names{"0", "1"};
    std::vector<std::string> feature_names;
    // Population variance of each column as it was loaded or generated, kept
    // through preprocessing so that feature ranking survives standardization.
    std::vector<double> source_variances;
    std::vector<std::size_t> source_columns;  // column index in the original source
    bool centered = false;
    bool standardized = false;
    std::vector<std::string> warnings;

    double at(std::size_t row, std::size_t col) const { return features[row * n_features + col]; }

    std::span<const double> row(std::size_t i) const {
        return {features.data() + i * n_features, n_features};
    }

    // Row i truncated to its first n features.
    DataPoint point(std::size_t i, std::size_t n) const {
        const auto r = row(i);
        return {r.begin(), r.begin() + static_cast<std::ptrdiff_t>(std::min(n, n_features))};
    }

    std::vector<DataPoint> points(std::size_t n) const {
        std::vector<DataPoint> out;
        out.reserve(m);
        for (std::size_t i = 0; i < m; ++i) {
            out.push_back(point(i, n));
        }
        return out;
    }

    std::array<std::size_t, 2> class_counts() const {
        std::array<std::size_t, 2> c{0, 0};
        for (const int l : labels) {
            ++c[static_cast<std::size_t>(l)];
        }
        return c;
    }
};

namespace detail {

inline std::vector<double> column_variances(const Dataset& d) {
    std::vector<double> out(d.n_features, 0.0);
    if (d.m == 0) {
        return out;
    }
    for (std::size_t c = 0; c < d.n_features; ++c) {
        double mu = 0.0;
        for (std::size_t r = 0; r < d.m; ++r) {
            mu += d.at(r, c);
        }
        mu /= static_cast<double>(d.m);
        double ss = 0.0;
        for (std::size_t r = 0; r < d.m; ++r) {
            const double x = d.at(r, c) - mu;
            ss += x * x;
        }
        out[c] = ss / static_cast<double>(d.m);
    }
    return out;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

// Splits one CSV record. Double-quoted fields may contain commas; "" is an
// escaped quote. Records spanning several lines are not supported.
inline std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur.push_back('"');
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                cur.push_back(ch);
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            fields.emplace_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    fields.emplace_back(trim(cur));
    return fields;
}

inline bool parse_double(std::string_view s, double& out) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') {
        s.remove_prefix(1);
    }
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size() && !s.empty();
}

}  // namespace detail

// Reads a CSV with a header row. `label_column` names the class column; every
// other column must be numeric. The two distinct labels are mapped to 0 and 1
// in ascending order (numeric when both parse as numbers, else lexicographic).
inline Dataset load_csv(const std::string& path, const std::string& label_column) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open dataset file '" + path + "'");
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw DataError(path + ": empty file");
    }
    const auto header = detail::split_csv_line(line);
    const auto label_it = std::find(header.begin(), header.end(), label_column);
    if (label_it == header.end()) {
        throw DataError(path + ": label column '" + label_column + "' not found in header");
    }
    const auto label_idx = static_cast<std::size_t>(label_it - header.begin());

    Dataset d;
    d.id = path;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (c != label_idx) {
            d.feature_names.push_back(header[c]);
            d.source_columns.push_back(d.source_columns.size());
        }
    }
    d.n_features = d.feature_names.size();
    if (d.n_features == 0) {
        throw DataError(path + ": no feature columns");
    }

    std::vector<std::string> raw_labels;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) {
            continue;
        }
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != header.size()) {
            throw DataError(path + ":" + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                            " fields, got " + std::to_string(fields.size()));
        }
        for (std::size_t c = 0; c < fields.size(); ++c) {
            if (c == label_idx) {
                raw_labels.push_back(fields[c]);
                continue;
            }
            double v = 0.0;
            if (!detail::parse_double(fields[c], v)) {
                throw DataError(path + ":" + std::to_string(line_no) + ": column '" + header[c] +
                                "' is not numeric: '" + fields[c] + "'");
            }
            if (!std::isfinite(v)) {
                throw DataError(path + ":" + std::to_string(line_no) + ": column '" + header[c] +
                                "' is not finite");
            }
            d.features.push_back(v);
        }
    }
    d.m = raw_labels.size();
    if (d.m == 0) {
        throw DataError(path + ": no data rows");
    }

    std::vector<std::string> distinct = raw_labels;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() != 2) {
        throw DataError(path + ": label column '" + label_column + "' must hold exactly 2 distinct values, found " +
                        std::to_string(distinct.size()));
    }
    double a = 0.0;
    double b = 0.0;
    if (detail::parse_double(distinct[0], a) && detail::parse_double(distinct[1], b) && b < a) {
        std::swap(distinct[0], distinct[1]);
    }
    d.class_names = {distinct[0], distinct[1]};
    d.labels.reserve(d.m);
    for (const auto& l : raw_labels) {
        d.labels.push_back(l == distinct[0] ? 0 : 1);
    }
    d.source_variances = detail::column_variances(d);
    return d;
}

// Twonorm: class 0 ~ N(+a 1, I), class 1 ~ N(-a 1, I) with a = 2 / sqrt(n_features).
// Rows alternate between the classes.
inline Dataset generate_twonorm(std::size_t m, std::size_t n_features, std::uint64_t seed) {
    if (m == 0 || m % 2 != 0) {
        throw DomainError("generate_twonorm: m must be even and positive, got " + std::to_string(m));
    }
    if (n_features == 0) {
        throw DomainError("generate_twonorm: n_features must be positive");
    }
    const double a = 2.0 / std::sqrt(static_cast<double>(n_features));
    Engine engine = make_engine(derive_seed(seed, {0x7477'6f6e'6f72'6dULL}));
    std::normal_distribution<double> noise(0.0, 1.0);
    Dataset d;
    d.id = "twonorm-m" + std::to_string(m) + "-s" + std::to_string(seed);
    d.m = m;
    d.n_features = n_features;
    d.features.reserve(m * n_features);
    d.labels.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
        const int label = static_cast<int>(i % 2);
        const double centre = label == 0 ? a : -a;
        for (std::size_t c = 0; c < n_features; ++c) {
            d.features.push_back(centre + noise(engine));
        }
        d.labels.push_back(label);
    }
    for (std::size_t c = 0; c < n_features; ++c) {
        d.feature_names.push_back("x" + std::to_string(c));
        d.source_columns.push_back(c);
    }
    d.source_variances = detail::column_variances(d);
    return d;
}

// Centres every feature and scales it to unit population standard deviation.
// Constant columns are dropped with a warning.
inline Dataset preprocess(const Dataset& in) {
    if (in.m < 2) {
        throw DomainError("preprocess: need at least 2 rows");
    }
    const auto var = detail::column_variances(in);
    std::vector<std::size_t> keep;
    Dataset out = in;
    for (std::size_t c = 0; c < in.n_features; ++c) {
        if (var[c] > 1e-24) {
            keep.push_back(c);
        } else {
            out.warnings.push_back("dropped zero-variance feature '" + in.feature_names[c] + "'");
        }
    }
    if (keep.empty()) {
        throw DataError("preprocess: every feature has zero variance");
    }
    out.n_features = keep.size();
    out.features.assign(in.m * keep.size(), 0.0);
    out.feature_names.clear();
    out.source_variances.clear();
    out.source_columns.clear();
    for (std::size_t k = 0; k < keep.size(); ++k) {
        const std::size_t c = keep[k];
        double mu = 0.0;
        for (std::size_t r = 0; r < in.m; ++r) {
            mu += in.at(r, c);
        }
        mu /= static_cast<double>(in.m);
        const double sd = std::sqrt(var[c]);
        for (std::size_t r = 0; r < in.m; ++r) {
            out.features[r * keep.size() + k] = (in.at(r, c) - mu) / sd;
        }
        out.feature_names.push_back(in.feature_names[c]);
        out.source_variances.push_back(in.source_variances[c]);
        out.source_columns.push_back(in.source_columns[c]);
    }
    out.centered = true;
    out.standardized = true;
    return out;
}

// Keeps the n features with the largest source variance, in descending order
// of that variance (ties by original column index).
inline Dataset select_features(const Dataset& in, std::size_t n) {
    if (n == 0 || n > in.n_features) {
        throw ConfigError("select_features: requested " + std::to_string(n) + " features, dataset has " +
                          std::to_string(in.n_features));
    }
    std::vector<std::size_t> order(in.n_features);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (in.source_variances[a] != in.source_variances[b]) {
            return in.source_variances[a] > in.source_variances[b];
        }
        return in.source_columns[a] < in.source_columns[b];
    });
    order.resize(n);
    Dataset out = in;
    out.n_features = n;
    out.features.assign(in.m * n, 0.0);
    out.feature_names.clear();
    out.source_variances.clear();
    out.source_columns.clear();
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t c = order[k];
        for (std::size_t r = 0; r < in.m; ++r) {
            out.features[r * n + k] = in.at(r, c);
        }
        out.feature_names.push_back(in.feature_names[c]);
        out.source_variances.push_back(in.source_variances[c]);
        out.source_columns.push_back(in.source_columns[c]);
    }
    return out;
}

namespace detail {

inline Dataset take_rows(const Dataset& in, std::span<const std::size_t> rows, std::string id) {
    Dataset out;
    out.id = std::move(id);
    out.m = rows.size();
    out.n_features = in.n_features;
    out.class_names = in.class_names;
    out.feature_names = in.feature_names;
    out.source_variances = in.source_variances;
    out.source_columns = in.source_columns;
    out.centered = in.centered;
    out.standardized = in.standardized;
    out.features.reserve(rows.size() * in.n_features);
    for (const std::size_t r : rows) {
        const auto src = in.row(r);
        out.features.insert(out.features.end(), src.begin(), src.end());
        out.labels.push_back(in.labels[r]);
    }
    return out;
}

}  // namespace detail

struct Stratification {
    std::vector<Dataset> subsets;
    std::vector<std::string> warnings;
};

// Disjoint class-balanced subsets of `subset_size` rows. Each class is
// shuffled with the seed and dealt out in consecutive chunks of size/2; rows
// keep their original relative order inside a subset.
inline Stratification stratify(const Dataset& in, std::size_t subset_size, std::uint64_t seed) {
    if (subset_size == 0 || subset_size % 2 != 0) {
        throw DomainError("stratify: subset_size must be even and positive, got " + std::to_string(subset_size));
    }
    const std::size_t half = subset_size / 2;
    std::array<std::vector<std::size_t>, 2> by_class;
    for (std::size_t i = 0; i < in.m; ++i) {
        by_class[static_cast<std::size_t>(in.labels[i])].push_back(i);
    }
    if (by_class[0].size() < half || by_class[1].size() < half) {
        throw DataError("stratify: a class has fewer than " + std::to_string(half) + " rows (counts " +
                        std::to_string(by_class[0].size()) + "/" + std::to_string(by_class[1].size()) + ")");
    }
    for (std::size_t c = 0; c < 2; ++c) {
        Engine engine = make_engine(derive_seed(seed, {c}));
        std::shuffle(by_class[c].begin(), by_class[c].end(), engine);
    }
    const std::size_t count = std::min(by_class[0].size(), by_class[1].size()) / half;
    Stratification out;
    const std::size_t used = count * subset_size;
    if (used < in.m) {
        out.warnings.push_back("stratify: " + std::to_string(in.m - used) + " rows not covered by " +
                               std::to_string(count) + " subsets of " + std::to_string(subset_size));
    }
    for (std::size_t s = 0; s < count; ++s) {
        std::vector<std::size_t> rows;
        rows.reserve(subset_size);
        for (std::size_t c = 0; c < 2; ++c) {
            rows.insert(rows.end(), by_class[c].begin() + static_cast<std::ptrdiff_t>(s * half),
                        by_class[c].begin() + static_cast<std::ptrdiff_t>((s + 1) * half));
        }
        std::sort(rows.begin(), rows.end());
        out.subsets.push_back(detail::take_rows(in, rows, in.id + "#" + std::to_string(s)));
    }
    return out;
}

}  // namespace qkshots
