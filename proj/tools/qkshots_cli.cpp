// qkshots: kernels | estimate-shots | sweep | resources | characterize.
//
// Every command reads one JSON config file (see docs/config.md), applies the
// --seed/--threads overrides, and writes its artifacts under --out together
// with the fully resolved config and the tool version.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "qkshots/io.hpp"
#include "qkshots/qkshots.hpp"

namespace fs = std::filesystem;
using qkshots::io::Json;

namespace {

// Config access with key-path and line-number diagnostics.
class ConfigDoc {
public:
    explicit ConfigDoc(std::string text) : text_(std::move(text)) {}

    const std::string& text() const { return text_; }

    // 1-based line of the last key in `path`, searched in document order.
    std::optional<std::size_t> line_of(const std::vector<std::string>& path) const {
        std::size_t pos = 0;
        for (const auto& key : path) {
            const auto found = text_.find("\"" + key + "\"", pos);
            if (found == std::string::npos) {
                return std::nullopt;
            }
            pos = found + 1;
        }
        if (path.empty()) {
            return std::nullopt;
        }
        return line_at(pos - 1);
    }

    std::size_t line_at(std::size_t byte) const {
        return 1 + static_cast<std::size_t>(
                       std::count(text_.begin(), text_.begin() + static_cast<std::ptrdiff_t>(std::min(byte, text_.size())), '\n'));
    }

private:
    std::string text_;
};

class Section {
public:
    Section(const ConfigDoc& doc, const Json* node, std::vector<std::string> path)
        : doc_(doc), node_(node), path_(std::move(path)) {}

    bool present() const { return node_ != nullptr; }

    [[noreturn]] void fail(const std::string& key, const std::string& message) const {
        auto p = path_;
        if (!key.empty()) {
            p.push_back(key);
        }
        std::string where = "/";
        for (std::size_t i = 0; i < p.size(); ++i) {
            where += (i ? "/" : "") + p[i];
        }
        const auto line = doc_.line_of(p);
        throw qkshots::ConfigError("config " + where + (line ? " (line " + std::to_string(*line) + ")" : "") + ": " +
                                   message);
    }

    void allow_only(std::initializer_list<std::string_view> keys) const {
        if (!node_) {
            return;
        }
        for (const auto& [k, v] : node_->items()) {
            if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
                fail(k, "unknown key");
            }
        }
    }

    Section child(const std::string& key) const {
        if (!node_ || !node_->contains(key)) {
            return {doc_, nullptr, extend(key)};
        }
        const Json& c = (*node_)[key];
        if (!c.is_object()) {
            fail(key, "expected an object");
        }
        return {doc_, &c, extend(key)};
    }

    const Json* raw(const std::string& key) const {
        if (!node_ || !node_->contains(key) || (*node_)[key].is_null()) {
            return nullptr;
        }
        return &(*node_)[key];
    }

    double number(const std::string& key, double fallback) const {
        const Json* v = raw(key);
        if (!v) {
            return fallback;
        }
        if (!v->is_number()) {
            fail(key, "expected a number");
        }
        return v->get<double>();
    }

    std::optional<double> optional_number(const std::string& key) const {
        if (!raw(key)) {
            return std::nullopt;
        }
        return number(key, 0.0);
    }

    std::int64_t integer(const std::string& key, std::int64_t fallback) const {
        const Json* v = raw(key);
        if (!v) {
            return fallback;
        }
        if (!v->is_number_integer()) {
            fail(key, "expected an integer");
        }
        return v->get<std::int64_t>();
    }

    std::optional<std::int64_t> optional_integer(const std::string& key) const {
        if (!raw(key)) {
            return std::nullopt;
        }
        return integer(key, 0);
    }

    bool boolean(const std::string& key, bool fallback) const {
        const Json* v = raw(key);
        if (!v) {
            return fallback;
        }
        if (!v->is_boolean()) {
            fail(key, "expected true or false");
        }
        return v->get<bool>();
    }

    std::string string(const std::string& key, const std::string& fallback) const {
        const Json* v = raw(key);
        if (!v) {
            return fallback;
        }
        if (!v->is_string()) {
            fail(key, "expected a string");
        }
        return v->get<std::string>();
    }

    std::vector<int> int_list(const std::string& key) const {
        const Json* v = raw(key);
        if (!v) {
            return {};
        }
        if (!v->is_array()) {
            fail(key, "expected an array of integers");
        }
        std::vector<int> out;
        for (const auto& e : *v) {
            if (!e.is_number_integer()) {
                fail(key, "expected an array of integers");
            }
            out.push_back(e.get<int>());
        }
        return out;
    }

    // Runs `parse` and re-raises its ConfigError with this key's location.
    template <class F>
    auto checked(const std::string& key, F&& parse) const {
        try {
            return parse();
        } catch (const qkshots::ConfigError& e) {
            fail(key, e.what());
        }
    }

private:
    std::vector<std::string> extend(const std::string& key) const {
        auto p = path_;
        p.push_back(key);
        return p;
    }

    const ConfigDoc& doc_;
    const Json* node_;
    std::vector<std::string> path_;
};

struct DatasetSettings {
    std::string source = "twonorm";
    std::int64_t m = 100;
    std::int64_t n_features = 20;
    std::string path;
    std::string label_column = "label";
    bool preprocess = true;
    std::int64_t subset_size = 0;
    std::int64_t subset_index = 0;
    std::int64_t subset_count = 1;
    std::optional<std::int64_t> seed;
};

struct SweepSettings {
    int n_min = 2;
    int n_max = 6;
    std::vector<int> n_targets;
    double r2_threshold = 0.99;
    std::int64_t min_fit_points = 4;
    bool characteristics = false;
    bool present = false;
};

struct ResourceSettings {
    std::int64_t m = 100;
    std::optional<std::int64_t> shots;
    bool corrected = true;
    std::optional<double> error_budget;
    qkshots::HardwareProfile hardware;
    qkshots::ClassicalProfile classical;
    bool crossover = false;
    int crossover_n_min = 2;
    int crossover_n_max = 60;
    std::optional<double> shots_log2_C;
    std::optional<double> shots_alpha;
};

struct Settings {
    std::uint64_t seed = 12345;
    unsigned threads = 1;
    DatasetSettings dataset;
    qkshots::FeatureMapConfig feature_map{4, 1, qkshots::Entanglement::Linear, qkshots::kDefaultQubitCap};
    qkshots::KernelFamily family = qkshots::KernelFamily::FidelityQ;
    double gamma = qkshots::kDefaultGamma;
    bool sampling = false;
    std::int64_t shots = 1000;
    double sampling_p_error = 0.0;
    qkshots::BudgetSettings budget;
    bool per_entry = true;
    SweepSettings sweep;
    ResourceSettings resources;
};

Settings parse_settings(const ConfigDoc& doc, const Json& root) {
    if (!root.is_object()) {
        throw qkshots::ConfigError("config: top level must be a JSON object");
    }
    Section top(doc, &root, {});
    top.allow_only({"seed", "threads", "dataset", "feature_map", "kernel", "sampling", "budget", "sweep", "resources"});
    Settings s;
    const auto seed = top.integer("seed", static_cast<std::int64_t>(s.seed));
    if (seed < 0) {
        top.fail("seed", "must be >= 0");
    }
    s.seed = static_cast<std::uint64_t>(seed);
    const auto threads = top.integer("threads", 1);
    if (threads < 0) {
        top.fail("threads", "must be >= 0 (0 = all cores)");
    }
    s.threads = static_cast<unsigned>(threads);

    const Section ds = top.child("dataset");
    ds.allow_only({"source", "m", "n_features", "path", "label_column", "preprocess", "subset_size", "subset_index",
                   "subset_count", "seed"});
    s.dataset.source = ds.string("source", s.dataset.source);
    if (s.dataset.source != "twonorm" && s.dataset.source != "csv") {
        ds.fail("source", "expected \"twonorm\" or \"csv\", got \"" + s.dataset.source + "\"");
    }
    s.dataset.m = ds.integer("m", s.dataset.m);
    s.dataset.n_features = ds.integer("n_features", s.dataset.n_features);
    s.dataset.path = ds.string("path", "");
    s.dataset.label_column = ds.string("label_column", s.dataset.label_column);
    s.dataset.preprocess = ds.boolean("preprocess", true);
    s.dataset.subset_size = ds.integer("subset_size", 0);
    s.dataset.subset_index = ds.integer("subset_index", 0);
    s.dataset.subset_count = ds.integer("subset_count", 1);
    s.dataset.seed = ds.optional_integer("seed");
    if (s.dataset.source == "csv" && s.dataset.path.empty()) {
        ds.fail("path", "required when source is \"csv\"");
    }
    if (s.dataset.source == "twonorm" && (s.dataset.m < 2 || s.dataset.m % 2 != 0)) {
        ds.fail("m", "must be even and >= 2");
    }
    if (s.dataset.n_features < 1) {
        ds.fail("n_features", "must be >= 1");
    }
    if (s.dataset.subset_size < 0 || s.dataset.subset_index < 0 || s.dataset.subset_count < 1) {
        ds.fail("subset_size", "subset_size/subset_index must be >= 0 and subset_count >= 1");
    }

    const Section fm = top.child("feature_map");
    fm.allow_only({"n_qubits", "repetitions", "entanglement", "qubit_cap"});
    s.feature_map.n_qubits = static_cast<int>(fm.integer("n_qubits", s.feature_map.n_qubits));
    s.feature_map.repetitions = static_cast<int>(fm.integer("repetitions", s.feature_map.repetitions));
    s.feature_map.qubit_cap = static_cast<int>(fm.integer("qubit_cap", s.feature_map.qubit_cap));
    const std::string ent = fm.string("entanglement", "linear");
    s.feature_map.entanglement = fm.checked("entanglement", [&] { return qkshots::parse_entanglement(ent); });
    fm.checked("n_qubits", [&] {
        s.feature_map.validate();
        return 0;
    });

    const Section kernel = top.child("kernel");
    kernel.allow_only({"family", "gamma"});
    const std::string fam = kernel.string("family", "fidelity");
    s.family = kernel.checked("family", [&] { return qkshots::parse_kernel_family(fam); });
    s.gamma = kernel.number("gamma", s.gamma);
    if (!(s.gamma > 0.0)) {
        kernel.fail("gamma", "must be > 0");
    }

    const Section samp = top.child("sampling");
    samp.allow_only({"enabled", "shots", "p_error"});
    s.sampling = samp.boolean("enabled", false);
    s.shots = samp.integer("shots", s.shots);
    s.sampling_p_error = samp.number("p_error", 0.0);
    if (s.shots < 1) {
        samp.fail("shots", "must be >= 1");
    }
    if (!(s.sampling_p_error >= 0.0 && s.sampling_p_error <= 1.0)) {
        samp.fail("p_error", "must be in [0, 1]");
    }

    const Section bud = top.child("budget");
    bud.allow_only({"eps", "p_spread", "p_ca", "p_error", "ca_method", "per_entry"});
    s.budget.eps = bud.number("eps", qkshots::kDefaultEpsilon);
    s.budget.p_spread = bud.number("p_spread", qkshots::kDefaultPSpread);
    s.budget.p_ca = bud.number("p_ca", qkshots::kDefaultPCa);
    s.budget.noise.p_error = bud.number("p_error", 0.0);
    const std::string method = bud.string("ca_method", "normal");
    s.budget.ca_method = bud.checked("ca_method", [&] { return qkshots::parse_ca_method(method); });
    s.per_entry = bud.boolean("per_entry", true);
    if (!(s.budget.eps > 0.0)) {
        bud.fail("eps", "must be > 0");
    }
    if (!(s.budget.p_spread > 0.0 && s.budget.p_spread < 1.0)) {
        bud.fail("p_spread", "must be in (0, 1)");
    }
    if (!(s.budget.p_ca > 0.0 && s.budget.p_ca < 1.0)) {
        bud.fail("p_ca", "must be in (0, 1)");
    }
    if (!(s.budget.noise.p_error >= 0.0 && s.budget.noise.p_error <= 1.0)) {
        bud.fail("p_error", "must be in [0, 1]");
    }

    const Section sw = top.child("sweep");
    sw.allow_only({"n_min", "n_max", "n_targets", "r2_threshold", "min_fit_points", "characteristics"});
    s.sweep.present = sw.present();
    s.sweep.n_min = static_cast<int>(sw.integer("n_min", s.sweep.n_min));
    s.sweep.n_max = static_cast<int>(sw.integer("n_max", s.sweep.n_max));
    s.sweep.n_targets = sw.int_list("n_targets");
    s.sweep.r2_threshold = sw.number("r2_threshold", 0.99);
    s.sweep.min_fit_points = sw.integer("min_fit_points", 4);
    s.sweep.characteristics = sw.boolean("characteristics", false);
    if (s.sweep.n_min < 1 || s.sweep.n_max < s.sweep.n_min) {
        sw.fail("n_max", "need 1 <= n_min <= n_max");
    }
    if (s.sweep.n_max > s.feature_map.qubit_cap) {
        sw.fail("n_max", "exceeds feature_map.qubit_cap = " + std::to_string(s.feature_map.qubit_cap));
    }
    if (!(s.sweep.r2_threshold > 0.0 && s.sweep.r2_threshold <= 1.0)) {
        sw.fail("r2_threshold", "must be in (0, 1]");
    }
    if (s.sweep.min_fit_points < 2) {
        sw.fail("min_fit_points", "must be >= 2");
    }

    const Section res = top.child("resources");
    res.allow_only({"m", "shots", "corrected", "error_budget", "hardware", "classical", "crossover"});
    s.resources.m = res.integer("m", s.resources.m);
    s.resources.shots = res.optional_integer("shots");
    s.resources.corrected = res.boolean("corrected", true);
    s.resources.error_budget = res.optional_number("error_budget");
    if (s.resources.m < 2) {
        res.fail("m", "must be >= 2");
    }
    if (s.resources.shots && *s.resources.shots < 1) {
        res.fail("shots", "must be >= 1");
    }
    const Section hw = res.child("hardware");
    hw.allow_only({"t_gate", "t_meas", "p_phys", "power_per_physical_qubit", "qubits_per_logical_factor"});
    auto& h = s.resources.hardware;
    h.t_gate = hw.number("t_gate", h.t_gate);
    h.t_meas = hw.number("t_meas", h.t_meas);
    h.p_phys = hw.number("p_phys", h.p_phys);
    h.power_per_physical_qubit = hw.number("power_per_physical_qubit", h.power_per_physical_qubit);
    h.qubits_per_logical_factor = hw.number("qubits_per_logical_factor", h.qubits_per_logical_factor);
    hw.checked("t_gate", [&] {
        h.validate();
        return 0;
    });
    const Section cl = res.child("classical");
    cl.allow_only({"name", "alpha_fq", "alpha_pq", "c0", "flops", "watts"});
    auto& c = s.resources.classical;
    c.name = cl.string("name", c.name);
    c.alpha_fq = cl.number("alpha_fq", c.alpha_fq);
    c.alpha_pq = cl.number("alpha_pq", c.alpha_pq);
    c.c0 = cl.number("c0", c.c0);
    c.flops = cl.number("flops", c.flops);
    c.watts = cl.number("watts", c.watts);
    cl.checked("c0", [&] {
        c.validate();
        return 0;
    });
    const Section cross = res.child("crossover");
    cross.allow_only({"n_min", "n_max", "shots_log2_C", "shots_alpha"});
    s.resources.crossover = cross.present();
    s.resources.crossover_n_min = static_cast<int>(cross.integer("n_min", s.resources.crossover_n_min));
    s.resources.crossover_n_max = static_cast<int>(cross.integer("n_max", s.resources.crossover_n_max));
    s.resources.shots_log2_C = cross.optional_number("shots_log2_C");
    s.resources.shots_alpha = cross.optional_number("shots_alpha");
    if (s.resources.crossover_n_min < 1 || s.resources.crossover_n_max < s.resources.crossover_n_min) {
        cross.fail("n_max", "need 1 <= n_min <= n_max");
    }
    if (s.resources.shots_log2_C.has_value() != s.resources.shots_alpha.has_value()) {
        cross.fail("shots_alpha", "shots_log2_C and shots_alpha must be given together");
    }
    return s;
}

Json resolved_json(const Settings& s) {
    Json ds{{"source", s.dataset.source},
            {"m", s.dataset.m},
            {"n_features", s.dataset.n_features},
            {"path", s.dataset.path},
            {"label_column", s.dataset.label_column},
            {"preprocess", s.dataset.preprocess},
            {"subset_size", s.dataset.subset_size},
            {"subset_index", s.dataset.subset_index},
            {"subset_count", s.dataset.subset_count},
            {"seed", s.dataset.seed ? Json(*s.dataset.seed) : Json(nullptr)}};
    Json res{{"m", s.resources.m},
             {"shots", s.resources.shots ? Json(*s.resources.shots) : Json(nullptr)},
             {"corrected", s.resources.corrected},
             {"error_budget", qkshots::io::optional_json(s.resources.error_budget)},
             {"hardware", qkshots::io::to_json(s.resources.hardware)},
             {"classical", qkshots::io::to_json(s.resources.classical)},
             {"crossover",
              s.resources.crossover
                  ? Json{{"n_min", s.resources.crossover_n_min},
                         {"n_max", s.resources.crossover_n_max},
                         {"shots_log2_C", qkshots::io::optional_json(s.resources.shots_log2_C)},
                         {"shots_alpha", qkshots::io::optional_json(s.resources.shots_alpha)}}
                  : Json(nullptr)}};
    return Json{{"seed", s.seed},
                {"threads", s.threads},
                {"dataset", ds},
                {"feature_map", qkshots::io::to_json(s.feature_map)},
                {"kernel", {{"family", std::string(qkshots::to_string(s.family))}, {"gamma", s.gamma}}},
                {"sampling", {{"enabled", s.sampling}, {"shots", s.shots}, {"p_error", s.sampling_p_error}}},
                {"budget",
                 {{"eps", s.budget.eps},
                  {"p_spread", s.budget.p_spread},
                  {"p_ca", s.budget.p_ca},
                  {"p_error", s.budget.noise.p_error},
                  {"ca_method", std::string(qkshots::to_string(s.budget.ca_method))},
                  {"per_entry", s.per_entry}}},
                {"sweep",
                 {{"n_min", s.sweep.n_min},
                  {"n_max", s.sweep.n_max},
                  {"n_targets", s.sweep.n_targets},
                  {"r2_threshold", s.sweep.r2_threshold},
                  {"min_fit_points", s.sweep.min_fit_points},
                  {"characteristics", s.sweep.characteristics}}},
                {"resources", res}};
}

// Seed derivation from the single top-level seed:
//   dataset generation  derive_seed(seed, {1})  (unless dataset.seed is set)
//   stratification      derive_seed(seed, {2})
//   shot sampling       derive_seed(seed, {3})
enum SeedStream : std::uint64_t { kDatasetStream = 1, kStratifyStream = 2, kSamplingStream = 3 };

std::vector<qkshots::Dataset> load_datasets(const Settings& s, std::vector<std::string>& warnings) {
    qkshots::Dataset base;
    if (s.dataset.source == "csv") {
        base = qkshots::load_csv(s.dataset.path, s.dataset.label_column);
    } else {
        const std::uint64_t seed = s.dataset.seed ? static_cast<std::uint64_t>(*s.dataset.seed)
                                                  : qkshots::derive_seed(s.seed, {kDatasetStream});
        base = qkshots::generate_twonorm(static_cast<std::size_t>(s.dataset.m),
                                         static_cast<std::size_t>(s.dataset.n_features), seed);
    }
    std::vector<qkshots::Dataset> out;
    if (s.dataset.subset_size > 0) {
        auto strat = qkshots::stratify(base, static_cast<std::size_t>(s.dataset.subset_size),
                                       qkshots::derive_seed(s.seed, {kStratifyStream}));
        warnings.insert(warnings.end(), strat.warnings.begin(), strat.warnings.end());
        const auto first = static_cast<std::size_t>(s.dataset.subset_index);
        const auto count = static_cast<std::size_t>(s.dataset.subset_count);
        if (first + count > strat.subsets.size()) {
            throw qkshots::ConfigError("config /dataset/subset_index: subsets " + std::to_string(first) + ".." +
                                       std::to_string(first + count - 1) + " requested, only " +
                                       std::to_string(strat.subsets.size()) + " available");
        }
        for (std::size_t i = first; i < first + count; ++i) {
            out.push_back(std::move(strat.subsets[i]));
        }
    } else {
        out.push_back(std::move(base));
    }
    if (s.dataset.preprocess) {
        for (auto& d : out) {
            d = qkshots::preprocess(d);
        }
    }
    for (const auto& d : out) {
        warnings.insert(warnings.end(), d.warnings.begin(), d.warnings.end());
    }
    return out;
}

std::vector<qkshots::DataPoint> points_for(const qkshots::Dataset& d, int n) {
    if (n > static_cast<int>(d.n_features)) {
        throw qkshots::ConfigError("config /feature_map/n_qubits: " + std::to_string(n) +
                                   " qubits need that many features, dataset has " + std::to_string(d.n_features));
    }
    return qkshots::select_features(d, static_cast<std::size_t>(n)).points(static_cast<std::size_t>(n));
}

struct Context {
    Settings settings;
    Json resolved;
    fs::path out;
    std::vector<std::string> warnings;
};

Json with_provenance(const Context& ctx, Json body) {
    Json j = qkshots::io::provenance(ctx.resolved);
    for (auto& [k, v] : body.items()) {
        j[k] = v;
    }
    j["warnings"] = ctx.warnings;
    return j;
}

int cmd_kernels(Context& ctx) {
    const Settings& s = ctx.settings;
    const auto data = load_datasets(s, ctx.warnings).front();
    const auto points = points_for(data, s.feature_map.n_qubits);
    Json body{{"dataset", qkshots::io::to_json(data)}};
    qkshots::KernelMatrix k;
    if (s.sampling) {
        const std::uint64_t seed = qkshots::derive_seed(s.seed, {kSamplingStream});
        auto sampled = qkshots::sample_gram(points, s.feature_map, s.family, s.gamma, s.shots,
                                            qkshots::NoiseModel{s.sampling_p_error}, seed, s.threads);
        k = std::move(sampled.matrix);
        body["sampling"] = {{"N", sampled.shots_per_estimate},
                            {"p_error", sampled.p_error},
                            {"seed", sampled.seed},
                            {"total_shots", sampled.total_shots}};
    } else {
        k = qkshots::gram_matrix(points, s.feature_map, s.family, s.gamma, s.threads);
        body["sampling"] = nullptr;
    }
    k.dataset_id = data.id;
    body["kernel"] = qkshots::io::kernel_metadata(k);
    body["statistics"] = qkshots::io::to_json(qkshots::kernel_statistics(k));
    body["matrix_file"] = "kernel.csv";
    qkshots::io::write_matrix_csv(ctx.out / "kernel.csv", k);
    qkshots::io::write_json(ctx.out / "kernel.json", with_provenance(ctx, body));
    return 0;
}

int cmd_estimate_shots(Context& ctx) {
    const Settings& s = ctx.settings;
    const auto data = load_datasets(s, ctx.warnings).front();
    const auto points = points_for(data, s.feature_map.n_qubits);
    const auto states = qkshots::embed_all(points, s.feature_map, s.threads);
    qkshots::KernelMatrix k = s.family == qkshots::KernelFamily::FidelityQ
                                  ? qkshots::fidelity_gram(states, s.feature_map, s.threads)
                                  : qkshots::projected_gram(qkshots::reduce_all(states, s.threads), s.gamma,
                                                            s.feature_map, s.threads);
    k.dataset_id = data.id;
    std::vector<qkshots::ReducedStates> rho;
    if (s.family == qkshots::KernelFamily::ProjectedQ) {
        rho = qkshots::reduce_all(states, s.threads);
    }
    const auto stats = qkshots::kernel_statistics(k);
    const qkshots::ShotBudget budget = qkshots::dataset_budget(k, s.budget, rho);
    Json body{{"dataset", qkshots::io::to_json(data)},
              {"kernel", qkshots::io::kernel_metadata(k)},
              {"statistics", qkshots::io::to_json(stats)},
              {"dataset_budget", qkshots::io::to_json(budget)}};
    if (stats.median > 0.0 && stats.median < 1.0 && stats.iqr > 0.0) {
        body["error_budget"] = qkshots::io::to_json(
            qkshots::error_budget(s.family, stats.median, s.budget.eps, stats.iqr, s.feature_map.n_qubits));
    } else {
        body["error_budget"] = nullptr;
    }

    if (s.per_entry) {
        auto out = qkshots::io::open_output(ctx.out / "entries.csv");
        out << "i,j,kappa,n_spread,n_ca,n_required,effect_dominant,degenerate\n";
        std::size_t dominated_by_ca = 0;
        std::size_t total = 0;
        std::vector<qkshots::BoundResult> point_ca(rho.size());
        for (std::size_t i = 0; i < rho.size(); ++i) {
            point_ca[i] = qkshots::projected_point_ca(rho[i], s.budget);
        }
        for (std::size_t i = 0; i < k.m; ++i) {
            for (std::size_t j = i + 1; j < k.m; ++j) {
                const qkshots::ShotBudget b =
                    s.family == qkshots::KernelFamily::FidelityQ
                        ? qkshots::entry_budget_fq(k(i, j), stats.iqr, s.feature_map.n_qubits, s.budget)
                        : qkshots::entry_budget_pq(rho[i], rho[j], s.gamma, stats.iqr, s.budget, point_ca[i],
                                                   point_ca[j]);
                auto shots = [](std::int64_t v) {
                    return v == qkshots::kUnboundedShots ? std::string("unbounded") : std::to_string(v);
                };
                out << i << ',' << j << ',' << qkshots::io::format_double(k(i, j)) << ',' << shots(b.n_spread) << ','
                    << shots(b.n_ca) << ',' << shots(b.n_required) << ',' << qkshots::to_string(b.effect_dominant)
                    << ',' << (b.spread.degenerate ? "true" : "false") << '\n';
                dominated_by_ca += b.effect_dominant == qkshots::Effect::ConcentrationAvoidance ? 1 : 0;
                ++total;
            }
        }
        body["entries_file"] = "entries.csv";
        body["entries"] = {{"count", total}, {"ca_dominant", dominated_by_ca}};
    }
    qkshots::io::write_json(ctx.out / "budget.json", with_provenance(ctx, body));
    return 0;
}

int cmd_sweep(Context& ctx) {
    const Settings& s = ctx.settings;
    const auto datasets = load_datasets(s, ctx.warnings);
    qkshots::SweepConfig sc;
    sc.family = s.family;
    sc.feature_map = s.feature_map;
    sc.gamma = s.gamma;
    sc.budget = s.budget;
    sc.characteristics = s.sweep.characteristics;
    sc.threads = s.threads;
    for (int n = s.sweep.n_min; n <= s.sweep.n_max; ++n) {
        sc.n_values.push_back(n);
    }
    qkshots::FitOptions fo;
    fo.r2_threshold = s.sweep.r2_threshold;
    fo.min_fit_points = static_cast<std::size_t>(s.sweep.min_fit_points);

    std::vector<qkshots::ScalingSeries> all;
    Json fits = Json::array();
    Json alpha_sums = Json::object();
    for (const auto& d : datasets) {
        auto result = qkshots::sweep(d, sc);
        for (const auto& w : result.warnings) {
            ctx.warnings.push_back(d.id + ": " + w);
        }
        for (const auto& series : result.series) {
            Json entry{{"statistic", std::string(qkshots::to_string(series.statistic))},
                       {"dataset_id", series.metadata.dataset_id}};
            try {
                const qkshots::ScalingFit f = qkshots::fit_exponential(series, fo);
                entry["fit"] = qkshots::io::to_json(f);
                Json extrap = Json::array();
                for (const int t : s.sweep.n_targets) {
                    Json e{{"n", t}};
                    if (t <= f.n_last) {
                        e["warning"] = "n_target within the fitted range";
                        ctx.warnings.push_back(d.id + ": " + std::string(qkshots::to_string(series.statistic)) +
                                               ": n_target " + std::to_string(t) + " is not beyond the fitted n = " +
                                               std::to_string(f.n_last));
                    }
                    if (f.valid) {
                        e["value"] = qkshots::extrapolate(f, t);
                    } else {
                        e["value"] = nullptr;
                        e["reason"] = "fit not valid";
                    }
                    extrap.push_back(e);
                }
                entry["extrapolations"] = extrap;
                if (f.valid) {
                    auto& acc = alpha_sums[std::string(qkshots::to_string(series.statistic))];
                    if (acc.is_null()) {
                        acc = {{"sum", 0.0}, {"count", 0}};
                    }
                    acc["sum"] = acc["sum"].get<double>() + f.alpha;
                    acc["count"] = acc["count"].get<int>() + 1;
                }
            } catch (const qkshots::DomainError& e) {
                entry["fit"] = nullptr;
                entry["error"] = e.what();
            }
            fits.push_back(entry);
            all.push_back(series);
        }
    }
    Json mean_alpha = Json::object();
    for (auto& [stat, acc] : alpha_sums.items()) {
        mean_alpha[stat] = {{"mean_alpha", acc["sum"].get<double>() / acc["count"].get<int>()},
                            {"valid_fits", acc["count"]}};
    }
    qkshots::io::write_series_csv(ctx.out / "series.csv", all);
    Json body{{"series_file", "series.csv"},
              {"fit_rule",
               {{"r2_threshold", fo.r2_threshold},
                {"min_fit_points", fo.min_fit_points},
                {"rule", "elbow on the second difference of R^2 over prefix drops, then first drop meeting the "
                         "threshold, then best R^2"}}},
              {"datasets", Json::array()},
              {"fits", fits},
              {"mean_alpha_over_datasets", mean_alpha}};
    for (const auto& d : datasets) {
        body["datasets"].push_back(qkshots::io::to_json(d));
    }
    qkshots::io::write_json(ctx.out / "fits.json", with_provenance(ctx, body));
    return 0;
}

int cmd_resources(Context& ctx) {
    const Settings& s = ctx.settings;
    const auto& r = s.resources;
    std::int64_t shots = 0;
    Json body;
    std::optional<double> error_budget = r.error_budget;
    if (r.shots && (error_budget || !r.corrected)) {
        shots = *r.shots;
    } else {
        const auto data = load_datasets(s, ctx.warnings).front();
        const auto points = points_for(data, s.feature_map.n_qubits);
        qkshots::KernelMatrix k = qkshots::gram_matrix(points, s.feature_map, s.family, s.gamma, s.threads);
        k.dataset_id = data.id;
        const auto stats = qkshots::kernel_statistics(k);
        const auto budget = qkshots::dataset_budget(k, s.budget);
        body["dataset_budget"] = qkshots::io::to_json(budget);
        shots = r.shots ? *r.shots : budget.n_required;
        if (!error_budget) {
            const auto eb =
                qkshots::error_budget(s.family, stats.median, s.budget.eps, stats.iqr, s.feature_map.n_qubits);
            body["error_budget"] = qkshots::io::to_json(eb);
            error_budget = std::min(eb.p_max, 0.5);
        }
    }
    if (shots == qkshots::kUnboundedShots) {
        throw qkshots::DomainError("resources: the shot budget is unbounded");
    }
    const int n = s.feature_map.n_qubits;
    const auto ideal = qkshots::quantum_cost(shots, s.feature_map, s.family, r.m, r.hardware, false);
    std::optional<qkshots::QuantumCost> corrected;
    if (r.corrected) {
        corrected = qkshots::quantum_cost(shots, s.feature_map, s.family, r.m, r.hardware, true, *error_budget);
    }
    const auto classical = qkshots::classical_cost(s.family, n, r.m, r.classical);
    const auto& chosen = corrected ? *corrected : ideal;
    body["family"] = std::string(qkshots::to_string(s.family));
    body["n"] = n;
    body["m"] = r.m;
    body["N"] = shots;
    body["runtime_s"] = chosen.runtime_s;
    body["energy_j"] = chosen.energy_j;
    body["physical_qubits"] = chosen.physical_qubits;
    body["code_distance"] = chosen.code_distance ? Json(*chosen.code_distance) : Json(nullptr);
    body["classical_runtime_s"] = classical.runtime_s;
    body["classical_energy_j"] = classical.energy_j;
    body["error_budget_used"] = qkshots::io::optional_json(error_budget);
    body["ideal"] = qkshots::io::to_json(ideal);
    body["corrected"] = corrected ? qkshots::io::to_json(*corrected) : Json(nullptr);
    body["classical"] = qkshots::io::to_json(classical);
    body["hardware_profile"] = qkshots::io::to_json(r.hardware);
    body["classical_profile"] = qkshots::io::to_json(r.classical);

    if (r.crossover) {
        // The shot model can exceed 64-bit counts at large n, so the curve
        // works in doubles; runtime is linear in the shot count.
        auto shots_at = [&](int nn) -> double {
            if (!r.shots_alpha) {
                return static_cast<double>(shots);
            }
            return std::max(1.0, std::ceil(std::exp2(*r.shots_log2_C + *r.shots_alpha * nn)));
        };
        Json curve = Json::array();
        auto quantum_runtime = [&](int nn) {
            qkshots::FeatureMapConfig fm = s.feature_map;
            fm.n_qubits = nn;
            fm.qubit_cap = std::max(fm.qubit_cap, nn);
            const auto one = qkshots::quantum_cost_raw(1, qkshots::circuit_depth(fm, s.family), nn, r.hardware,
                                                       r.corrected, error_budget.value_or(0.0));
            const double estimates = s.family == qkshots::KernelFamily::FidelityQ
                                         ? qkshots::classical_count(s.family, r.m)
                                         : 3.0 * static_cast<double>(r.m);
            return one.runtime_s * estimates * shots_at(nn);
        };
        for (int nn = r.crossover_n_min; nn <= r.crossover_n_max; ++nn) {
            curve.push_back({{"n", nn},
                             {"shots", shots_at(nn)},
                             {"quantum_runtime_s", quantum_runtime(nn)},
                             {"classical_runtime_s", qkshots::classical_cost(s.family, nn, r.m, r.classical).runtime_s}});
        }
        const auto cross =
            qkshots::crossover_n(r.crossover_n_min, r.crossover_n_max, s.family, r.m, r.classical, quantum_runtime);
        body["crossover_n"] = cross ? Json(*cross) : Json(nullptr);
        body["crossover_curve"] = curve;
    }
    qkshots::io::write_json(ctx.out / "resources.json", with_provenance(ctx, body));
    return 0;
}

int cmd_characterize(Context& ctx) {
    const Settings& s = ctx.settings;
    const auto data = load_datasets(s, ctx.warnings).front();
    int n_lo = s.feature_map.n_qubits;
    int n_hi = s.feature_map.n_qubits;
    if (s.sweep.present) {
        n_lo = s.sweep.n_min;
        n_hi = s.sweep.n_max;
    }
    Json rows = Json::array();
    std::vector<qkshots::ScalingSeries> series(2);
    series[0].statistic = qkshots::Statistic::Expressibility;
    series[1].statistic = qkshots::Statistic::RelativeEntropy;
    for (auto& x : series) {
        x.metadata = {s.family, s.feature_map.repetitions, s.feature_map.entanglement, data.id};
    }
    for (int n = n_lo; n <= n_hi; ++n) {
        qkshots::FeatureMapConfig fm = s.feature_map;
        fm.n_qubits = n;
        const auto points = points_for(data, n);
        const double ex = qkshots::expressibility(points, fm, s.threads);
        const double re = qkshots::mean_relative_entropy(points, fm, s.threads);
        series[0].points.push_back({n, ex});
        series[1].points.push_back({n, re});
        rows.push_back({{"n", n}, {"expressibility", ex}, {"relative_entropy", re}});
    }
    qkshots::io::write_series_csv(ctx.out / "characteristics.csv", series);
    Json body{{"dataset", qkshots::io::to_json(data)},
              {"relative_entropy_units", "nats"},
              {"values", rows},
              {"series_file", "characteristics.csv"}};
    qkshots::io::write_json(ctx.out / "characteristics.json", with_provenance(ctx, body));
    return 0;
}

void emit_error(std::string_view type, const std::string& message) {
    std::cerr << Json{{"error", {{"type", type}, {"message", message}}}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quantum kernel shot-budget toolkit"};
    app.set_version_flag("--version", std::string(qkshots::kVersion));
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::int64_t> seed;
    std::optional<std::int64_t> threads;
    std::string out_dir = "out";

    using Handler = int (*)(Context&);
    std::vector<std::pair<CLI::App*, Handler>> commands;
    auto add = [&](const char* name, const char* help, Handler h) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_path, "JSON config file")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "override the top-level seed");
        sub->add_option("--out", out_dir, "output directory")->capture_default_str();
        sub->add_option("--threads", threads, "worker threads (0 = all cores)");
        commands.emplace_back(sub, h);
    };
    add("kernels", "Gram matrix (exact or shot-sampled) as CSV plus metadata JSON", cmd_kernels);
    add("estimate-shots", "per-entry and dataset-level shot budgets", cmd_estimate_shots);
    add("sweep", "statistic-versus-n series, exponential fits and extrapolations", cmd_sweep);
    add("resources", "runtime and energy for ideal and error-corrected execution", cmd_resources);
    add("characterize", "expressibility and mean relative entropy", cmd_characterize);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        emit_error("usage", e.what());
        return 2;
    }

    Context ctx;
    ctx.out = out_dir;
    try {
        std::ifstream in(config_path);
        std::stringstream buf;
        buf << in.rdbuf();
        const ConfigDoc doc(buf.str());
        Json root;
        try {
            root = Json::parse(doc.text());
        } catch (const nlohmann::json::parse_error& e) {
            throw qkshots::ConfigError("config: JSON syntax error at line " + std::to_string(doc.line_at(e.byte)) +
                                       ": " + e.what());
        }
        ctx.settings = parse_settings(doc, root);
        if (seed) {
            if (*seed < 0) {
                throw qkshots::ConfigError("--seed must be >= 0");
            }
            ctx.settings.seed = static_cast<std::uint64_t>(*seed);
        }
        if (threads) {
            if (*threads < 0) {
                throw qkshots::ConfigError("--threads must be >= 0");
            }
            ctx.settings.threads = static_cast<unsigned>(*threads);
        }
        ctx.resolved = resolved_json(ctx.settings);
        for (const auto& [sub, handler] : commands) {
            if (sub->parsed()) {
                return handler(ctx);
            }
        }
    } catch (const qkshots::ConfigError& e) {
        emit_error("config", e.what());
        return 2;
    } catch (const qkshots::DataError& e) {
        emit_error("data", e.what());
        return 1;
    } catch (const std::exception& e) {
        emit_error("runtime", e.what());
        return 1;
    }
    return 1;
}
