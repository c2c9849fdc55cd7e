// CSV and JSON serialization of kernel matrices, budgets, series, fits and
// resource reports. Requires nlohmann/json on the include path.

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "qkshots/concentration_analysis.hpp"
#include "qkshots/dataset_pipeline.hpp"
#include "qkshots/errors.hpp"
#include "qkshots/kernels.hpp"
#include "qkshots/measurement_sim.hpp"
#include "qkshots/resource_model.hpp"
#include "qkshots/shot_estimator.hpp"
#include "qkshots/version.hpp"

namespace qkshots::io {

using Json = nlohmann::ordered_json;

// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v) {
    std::ostringstream os;
    os << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
    return os.str();
}

inline Json shots_json(std::int64_t shots) {
    if (shots == kUnboundedShots) {
        return "unbounded";
    }
    return shots;
}

inline Json to_json(const FeatureMapConfig& c) {
    return Json{{"n_qubits", c.n_qubits},
                {"repetitions", c.repetitions},
                {"entanglement", std::string(to_string(c.entanglement))},
                {"qubit_cap", c.qubit_cap}};
}

inline Json to_json(const KernelStatistics& s) {
    Json j{{"count", s.count}, {"mean", s.mean},     {"std", s.std}, {"median", s.median},
           {"q1", s.q1},       {"q3", s.q3},         {"iqr", s.iqr}};
    if (s.log_mean) {
        j["log_mean"] = std::isfinite(*s.log_mean) ? Json(*s.log_mean) : Json("-inf");
        j["log_mean_warning"] = s.log_mean_warning;
    }
    return j;
}

inline Json to_json(const BoundResult& b) {
    return Json{{"value", std::isfinite(b.value) ? Json(b.value) : Json("inf")},
                {"shots", shots_json(b.shots)},
                {"degenerate", b.degenerate},
                {"unbounded", b.unbounded}};
}

inline Json optional_json(const std::optional<double>& v) {
    return v ? Json(*v) : Json(nullptr);
}

inline Json to_json(const BudgetInputs& in) {
    return Json{{"family", std::string(to_string(in.family))},
                {"n_qubits", in.n_qubits},
                {"m", in.m},
                {"gamma", in.gamma},
                {"eps", in.eps},
                {"p_spread", in.p_spread},
                {"p_ca", in.p_ca},
                {"p_error", in.p_error},
                {"kappa_repr", in.kappa_repr},
                {"kappa_repr_f", in.kappa_repr_f},
                {"delta_ensemble", in.delta_ensemble},
                {"mu", in.mu},
                {"measured_value", in.measured_value},
                {"eps_r1", optional_json(in.eps_r1)},
                {"eps_r2", optional_json(in.eps_r2)},
                {"eps_r_used", optional_json(in.eps_r_used)},
                {"mean_log_kappa", optional_json(in.mean_log_kappa)},
                {"variance_sum", optional_json(in.variance_sum)},
                {"spread_path", std::string(to_string(in.spread_path))},
                {"excluded_unit_entries", in.excluded_unit_entries}};
}

inline Json to_json(const ShotBudget& b) {
    return Json{{"family", std::string(to_string(b.inputs.family))},
                {"noisy", b.noisy},
                {"n_spread", shots_json(b.n_spread)},
                {"n_ca", shots_json(b.n_ca)},
                {"n_required", shots_json(b.n_required)},
                {"effect_dominant", std::string(to_string(b.effect_dominant))},
                {"spread", to_json(b.spread)},
                {"ca", to_json(b.ca)},
                {"inputs", to_json(b.inputs)},
                {"warnings", b.warnings}};
}

inline Json to_json(const ErrorBudget& e) {
    return Json{{"p_max", e.p_max}, {"denominator", e.denominator}, {"unconstrained", e.unconstrained}};
}

inline Json to_json(const ScalingFit& f) {
    return Json{{"log2_C", f.log2_C},
                {"alpha", f.alpha},
                {"r_squared", f.r_squared},
                {"dropped_prefix", f.dropped_prefix},
                {"valid", f.valid},
                {"r2_threshold", f.r2_threshold},
                {"n_first", f.n_first},
                {"n_last", f.n_last},
                {"selection", f.selection},
                {"r_squared_by_drop", f.r_squared_by_drop}};
}

inline Json to_json(const QuantumCost& c) {
    Json j{{"total_shots", c.total_shots},   {"layers", c.layers},         {"n_qubits", c.n_qubits},
           {"t_gate_eff", c.t_gate_eff},     {"t_meas_eff", c.t_meas_eff}, {"runtime_s", c.runtime_s},
           {"energy_j", c.energy_j},         {"physical_qubits", c.physical_qubits}};
    j["code_distance"] = c.code_distance ? Json(*c.code_distance) : Json(nullptr);
    j["logical_error_rate"] = optional_json(c.logical_error_rate);
    return j;
}

inline Json to_json(const ClassicalCost& c) {
    return Json{{"flops_needed", c.flops_needed}, {"runtime_s", c.runtime_s}, {"energy_j", c.energy_j}};
}

inline Json to_json(const HardwareProfile& h) {
    return Json{{"t_gate", h.t_gate},
                {"t_meas", h.t_meas},
                {"p_phys", h.p_phys},
                {"power_per_physical_qubit", h.power_per_physical_qubit},
                {"qubits_per_logical_factor", h.qubits_per_logical_factor}};
}

inline Json to_json(const ClassicalProfile& p) {
    return Json{{"name", p.name},   {"alpha_fq", p.alpha_fq}, {"alpha_pq", p.alpha_pq},
                {"c0", p.c0},       {"flops", p.flops},       {"watts", p.watts}};
}

// Canonical dataset summary.
inline Json to_json(const Dataset& d) {
    const auto counts = d.class_counts();
    return Json{{"id", d.id},
                {"m", d.m},
                {"n_features", d.n_features},
                {"class_counts", {counts[0], counts[1]}},
                {"class_names", {d.class_names[0], d.class_names[1]}},
                {"feature_names", d.feature_names},
                {"preprocessing", {{"centered", d.centered}, {"standardized", d.standardized}}},
                {"warnings", d.warnings}};
}

inline Json kernel_metadata(const KernelMatrix& k) {
    return Json{{"m", k.m},
                {"family", std::string(to_string(k.family))},
                {"gamma", k.gamma},
                {"feature_map", to_json(k.config)},
                {"dataset_id", k.dataset_id}};
}

inline Json to_json(const ScalingSeries& s) {
    Json pts = Json::array();
    for (const auto& p : s.points) {
        pts.push_back({{"n", p.n}, {"value", p.value}});
    }
    return Json{{"statistic", std::string(to_string(s.statistic))},
                {"family", std::string(to_string(s.metadata.family))},
                {"repetitions", s.metadata.repetitions},
                {"entanglement", std::string(to_string(s.metadata.entanglement))},
                {"dataset_id", s.metadata.dataset_id},
                {"points", pts}};
}

inline std::ofstream open_output(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot open '" + path.string() + "' for writing");
    }
    return out;
}

inline void write_json(const std::filesystem::path& path, const Json& j) {
    auto out = open_output(path);
    out << j.dump(2) << '\n';
    if (!out) {
        throw DataError("failed writing '" + path.string() + "'");
    }
}

// m x m matrix with a header row k0..k{m-1}.
inline void write_matrix_csv(const std::filesystem::path& path, const KernelMatrix& k) {
    auto out = open_output(path);
    for (std::size_t j = 0; j < k.m; ++j) {
        out << (j ? "," : "") << 'k' << j;
    }
    out << '\n';
    for (std::size_t i = 0; i < k.m; ++i) {
        for (std::size_t j = 0; j < k.m; ++j) {
            out << (j ? "," : "") << format_double(k(i, j));
        }
        out << '\n';
    }
    if (!out) {
        throw DataError("failed writing '" + path.string() + "'");
    }
}

inline std::vector<std::vector<double>> read_matrix_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open '" + path.string() + "'");
    }
    std::string line;
    std::getline(in, line);  // header
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::vector<double> row;
        for (const auto& field : detail::split_csv_line(line)) {
            double v = 0.0;
            if (!detail::parse_double(field, v)) {
                throw DataError(path.string() + ": bad number '" + field + "'");
            }
            row.push_back(v);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

// Long format: statistic,n,value,family,repetitions,entanglement,dataset_id.
inline void write_series_csv(const std::filesystem::path& path, const std::vector<ScalingSeries>& all) {
    auto out = open_output(path);
    out << "statistic,n,value,family,repetitions,entanglement,dataset_id\n";
    for (const auto& s : all) {
        for (const auto& p : s.points) {
            out << to_string(s.statistic) << ',' << p.n << ',' << format_double(p.value) << ','
                << to_string(s.metadata.family) << ',' << s.metadata.repetitions << ','
                << to_string(s.metadata.entanglement) << ",\"" << s.metadata.dataset_id << "\"\n";
        }
    }
    if (!out) {
        throw DataError("failed writing '" + path.string() + "'");
    }
}

inline Json provenance(const Json& resolved_config) {
    return Json{{"tool", "qkshots"}, {"version", std::string(kVersion)}, {"config", resolved_config}};
}

}  // namespace qkshots::io
