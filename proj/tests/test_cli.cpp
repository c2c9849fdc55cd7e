#include <gtest/gtest.h>

#include "json.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "qkshots_cli_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

struct Run {
    int code = -1;
    std::string err;
};

Run run(const std::string& args, const fs::path& dir) {
    const auto err_file = dir / "stderr.txt";
    const std::string cmd = std::string(QKSHOTS_CLI_PATH) + " " + args + " 2>" + err_file.string();
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(err_file);
    std::stringstream buf;
    buf << in.rdbuf();
    r.err = buf.str();
    return r;
}

std::string config(const std::string& name) {
    return std::string(QKSHOTS_CONFIG_DIR) + "/" + name;
}

fs::path write_config(const fs::path& dir, const json& j) {
    const auto p = dir / "config.json";
    std::ofstream(p) << j.dump(2);
    return p;
}

json read_json(const fs::path& p) {
    std::ifstream in(p);
    return json::parse(in);
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) {
            cells.push_back(c);
        }
        rows.push_back(cells);
    }
    return rows;
}

}  // namespace

TEST(Cli, ToyKernelsWritesSymmetricMatrixWithUnitDiagonal) {
    const auto dir = scratch("toy");
    const auto r = run("kernels --config " + config("kernels_toy.json") + " --out " + dir.string(), dir);
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = read_csv(dir / "kernel.csv");
    ASSERT_EQ(rows.size(), 21U);
    for (std::size_t i = 0; i < 20; ++i) {
        ASSERT_EQ(rows[i + 1].size(), 20U);
        EXPECT_EQ(std::stod(rows[i + 1][i]), 1.0);
        for (std::size_t j = 0; j < 20; ++j) {
            EXPECT_EQ(rows[i + 1][j], rows[j + 1][i]);
            EXPECT_GE(std::stod(rows[i + 1][j]), 0.0);
        }
    }
    const json meta = read_json(dir / "kernel.json");
    EXPECT_EQ(meta["tool"], "qkshots");
    EXPECT_EQ(meta["config"]["seed"], 7);
    EXPECT_EQ(meta["kernel"]["family"], "fidelity");
    EXPECT_EQ(meta["statistics"]["count"], 190);
}

TEST(Cli, SampledKernelsRecordSeedAndShotCount) {
    const auto dir = scratch("sampled");
    const auto r = run("kernels --config " + config("kernels_sampled.json") + " --out " + dir.string(), dir);
    ASSERT_EQ(r.code, 0) << r.err;
    const json meta = read_json(dir / "kernel.json");
    EXPECT_EQ(meta["sampling"]["N"], 2000);
    EXPECT_EQ(meta["sampling"]["p_error"], 0.01);
    // Projected: three bases per point, 20 points.
    EXPECT_EQ(meta["sampling"]["total_shots"], 3 * 20 * 2000);
    EXPECT_TRUE(meta["sampling"]["seed"].is_number_unsigned());

    // Same seed, same bytes; a different --seed changes the sample.
    const auto again = scratch("sampled_again");
    ASSERT_EQ(run("kernels --config " + config("kernels_sampled.json") + " --out " + again.string(), again).code, 0);
    EXPECT_EQ(read_csv(dir / "kernel.csv"), read_csv(again / "kernel.csv"));
    const auto other = scratch("sampled_other");
    ASSERT_EQ(
        run("kernels --config " + config("kernels_sampled.json") + " --seed 8 --out " + other.string(), other).code, 0);
    EXPECT_NE(read_csv(dir / "kernel.csv"), read_csv(other / "kernel.csv"));
}

TEST(Cli, ConfigErrorsExitTwoWithJsonOnStderr) {
    const auto dir = scratch("bad");
    json cfg = json::parse(std::ifstream(config("kernels_toy.json")));
    cfg["feature_map"]["entanglement"] = "ring";
    const auto r = run("kernels --config " + write_config(dir, cfg).string() + " --out " + dir.string(), dir);
    EXPECT_EQ(r.code, 2);
    const json err = json::parse(r.err);
    EXPECT_EQ(err["error"]["type"], "config");
    EXPECT_NE(err["error"]["message"].get<std::string>().find("entanglement"), std::string::npos) << r.err;

    cfg = json::parse(std::ifstream(config("kernels_toy.json")));
    cfg["feature_map"]["n_qubits"] = 15;
    EXPECT_EQ(run("kernels --config " + write_config(dir, cfg).string() + " --out " + dir.string(), dir).code, 2);

    cfg = json::parse(std::ifstream(config("kernels_toy.json")));
    cfg["kernel"]["colour"] = "blue";
    EXPECT_EQ(run("kernels --config " + write_config(dir, cfg).string() + " --out " + dir.string(), dir).code, 2);

    EXPECT_EQ(run("kernels --out " + dir.string(), dir).code, 2);
    EXPECT_EQ(run("frobnicate --config " + config("kernels_toy.json"), dir).code, 2);
}

TEST(Cli, MissingDataFileExitsOne) {
    const auto dir = scratch("nodata");
    const json cfg{{"dataset", {{"source", "csv"}, {"path", "/nonexistent/data.csv"}}},
                   {"feature_map", {{"n_qubits", 2}}}};
    const auto r = run("kernels --config " + write_config(dir, cfg).string() + " --out " + dir.string(), dir);
    EXPECT_EQ(r.code, 1);
    EXPECT_EQ(json::parse(r.err)["error"]["type"], "data");
}

TEST(Cli, EstimateShotsWritesBudgetAndEntries) {
    const auto dir = scratch("budget");
    json cfg = json::parse(std::ifstream(config("estimate_shots.json")));
    cfg["dataset"]["m"] = 12;
    const auto r = run("estimate-shots --config " + write_config(dir, cfg).string() + " --out " + dir.string(), dir);
    ASSERT_EQ(r.code, 0) << r.err;
    const json b = read_json(dir / "budget.json");
    const json& db = b["dataset_budget"];
    EXPECT_EQ(db["family"], "projected");
    EXPECT_EQ(db["n_required"], std::max(db["n_spread"].get<std::int64_t>(), db["n_ca"].get<std::int64_t>()));
    const auto rows = read_csv(dir / "entries.csv");
    ASSERT_EQ(rows.size(), 1U + 12 * 11 / 2);
    EXPECT_EQ(rows[0][0], "i");
    EXPECT_EQ(b["entries"]["count"], 66);
    for (std::size_t k = 1; k < rows.size(); ++k) {
        EXPECT_EQ(std::stoll(rows[k][5]), std::max(std::stoll(rows[k][3]), std::stoll(rows[k][4])));
    }
}

TEST(Cli, SweepWritesSeriesFitsAndWarnsOnInRangeTargets) {
    const auto dir = scratch("sweep");
    json cfg = json::parse(std::ifstream(config("sweep_twonorm.json")));
    cfg["dataset"]["m"] = 200;
    cfg["dataset"]["subset_size"] = 40;
    cfg["dataset"]["subset_count"] = 1;
    cfg["sweep"]["n_min"] = 2;
    cfg["sweep"]["n_max"] = 6;
    cfg["sweep"]["n_targets"] = json::array({5, 20});
    const auto r = run("sweep --config " + write_config(dir, cfg).string() + " --out " + dir.string(), dir);
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = read_csv(dir / "series.csv");
    ASSERT_GE(rows.size(), 1U + 4 * 5);
    EXPECT_EQ(rows[0][0], "statistic");
    std::vector<std::string> stats;
    for (std::size_t k = 1; k < rows.size(); ++k) {
        stats.push_back(rows[k][0]);
    }
    for (const char* want : {"mean", "std", "median", "iqr"}) {
        EXPECT_EQ(std::count(stats.begin(), stats.end(), want), 5) << want;
    }
    const json f = read_json(dir / "fits.json");
    ASSERT_FALSE(f["fits"].empty());
    for (const auto& e : f["fits"]) {
        ASSERT_TRUE(e["fit"].is_object()) << e.dump();
        EXPECT_TRUE(e["fit"].contains("dropped_prefix"));
        EXPECT_TRUE(e["fit"].contains("valid"));
        EXPECT_EQ(e["extrapolations"].size(), 2U);
        EXPECT_TRUE(e["extrapolations"][0].contains("warning"));
        EXPECT_FALSE(e["extrapolations"][1].contains("warning"));
    }
    bool warned = false;
    for (const auto& w : f["warnings"]) {
        warned = warned || w.get<std::string>().find("n_target 5") != std::string::npos;
    }
    EXPECT_TRUE(warned);
}

TEST(Cli, ResourcesAndCharacterizeRun) {
    const auto dir = scratch("resources");
    const auto r = run("resources --config " + config("resources.json") + " --out " + dir.string(), dir);
    ASSERT_EQ(r.code, 0) << r.err;
    const json j = read_json(dir / "resources.json");
    EXPECT_GT(j["runtime_s"].get<double>(), 0.0);
    EXPECT_TRUE(j["code_distance"].is_number_integer());
    EXPECT_EQ(j["crossover_curve"].size(), 59U);

    const auto cdir = scratch("characterize");
    const auto c = run("characterize --config " + config("characterize.json") + " --out " + cdir.string(), cdir);
    ASSERT_EQ(c.code, 0) << c.err;
    EXPECT_TRUE(fs::exists(cdir / "characteristics.csv"));
    EXPECT_TRUE(fs::exists(cdir / "characteristics.json"));
}

TEST(Cli, Version) {
    const auto dir = scratch("version");
    EXPECT_EQ(run("--version > " + (dir / "v.txt").string(), dir).code, 0);
}
