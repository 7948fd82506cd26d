#include "vibench/bench.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace vibench;
using namespace vibench::bench;
namespace fs = std::filesystem;

namespace {

const char* kMinimal = R"({
  "problem": {"family": "diagonal_game", "delta": 3},
  "iterations": 50,
  "seeds": 3,
  "solver": "speg", "sampler": "uniform", "schedule": "constant"
})";

std::string config_error_path(const std::string& text) {
    try {
        (void)parse_config_text(text);
    } catch (const ConfigError& e) {
        return e.path();
    }
    return "<no error>";
}

fs::path scratch_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("vibench_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

}  // namespace

TEST(Config, MinimalSingleArm) {
    const auto plan = parse_config_text(kMinimal);
    ASSERT_EQ(plan.arms.size(), 1u);
    EXPECT_EQ(plan.arms[0].label, "speg");
    EXPECT_EQ(plan.seeds, (std::vector<std::uint64_t>{0, 1, 2}));
    EXPECT_EQ(plan.iterations, 50u);
    EXPECT_EQ(plan.problem.family, ProblemFamily::diagonal_game);
}

TEST(Config, ErrorsCarryFieldPaths) {
    EXPECT_EQ(config_error_path(R"({"problem": {"family": "diagonal_game"}, "iterations": 5,
        "arms": [{"solver": "speg", "sampler": {"kind": "minibatch", "tau": 5}, "schedule": "constant"}]})"),
              "arms[0].sampler.tau");
    EXPECT_EQ(config_error_path(R"({"problem": {"family": "diagonal_game"}, "iterations": 5, "bogus": 1,
        "solver": "speg", "sampler": "uniform", "schedule": "constant"})"),
              "bogus");
    EXPECT_EQ(config_error_path(R"({"problem": {"family": "diagonal_game"}, "iterations": 5,
        "arms": [{"solver": "sog", "sampler": "uniform", "schedule": "switching"}]})"),
              "arms[0].schedule");
    EXPECT_EQ(config_error_path(R"({"problem": {"family": "diagonal_game"}, "iterations": 5,
        "arms": [{"label": "a", "solver": "speg", "sampler": "uniform", "schedule": "constant"},
                 {"label": "a", "solver": "speg", "sampler": "uniform", "schedule": "constant"}]})"),
              "arms[1].label");
    EXPECT_EQ(config_error_path("{not json"), "");
}

TEST(Config, PresetsParse) {
    for (const auto& entry : fs::directory_iterator(VIBENCH_PRESET_DIR)) {
        if (entry.path().extension() != ".json") continue;
        EXPECT_NO_THROW((void)parse_config(entry.path().string())) << entry.path();
    }
    const auto plan = parse_config(std::string(VIBENCH_PRESET_DIR) + "/fig2a.json");
    EXPECT_TRUE(plan.problem.quadratic.interpolated);
    EXPECT_EQ(plan.arms.size(), 2u);
}

TEST(Csv, RoundTripIsBitExact) {
    const auto plan = parse_config_text(kMinimal);
    const auto problem = build_problem(plan.problem);
    const auto arm = resolve_arm(problem, plan.arms[0], plan);
    SolverConfig cfg;
    cfg.iterations = 40;
    cfg.seed = 5;
    const auto tr = run_arm(problem, arm, make_x0(plan, problem), cfg);
    const auto rows = parse_trace_csv(trace_csv(tr));
    const auto ref = to_rows(tr);
    ASSERT_EQ(rows.size(), ref.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        EXPECT_EQ(rows[i].k, ref[i].k);
        EXPECT_EQ(rows[i].sq_dist, ref[i].sq_dist);
        EXPECT_EQ(rows[i].rel_opnorm, ref[i].rel_opnorm);
        EXPECT_EQ(rows[i].oracle_calls, ref[i].oracle_calls);
    }
    EXPECT_THROW(parse_trace_csv("k,gamma\n"), Error);
    EXPECT_TRUE(std::isnan(parse_double("nan")));
    EXPECT_THROW(parse_double("1.0x"), Error);
}

TEST(Aggregate, IndependentOfSeedOrder) {
    std::vector<std::vector<CsvRow>> per_seed;
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int s = 0; s < 17; ++s) {
        std::vector<CsvRow> rows;
        for (std::uint64_t k = 0; k < 5; ++k) {
            CsvRow r;
            r.k = k;
            r.rel_err = u(gen) * std::pow(10.0, -static_cast<double>(k));
            r.rel_opnorm = u(gen);
            rows.push_back(r);
        }
        per_seed.push_back(rows);
    }
    const auto a = aggregate_csv(aggregate(per_seed));
    std::shuffle(per_seed.begin(), per_seed.end(), gen);
    EXPECT_EQ(aggregate_csv(aggregate(per_seed)), a);
    const auto s = summarize({3.0, kNaN, 1.0, 2.0, 10.0});
    EXPECT_EQ(s.count, 4u);
    EXPECT_EQ(s.median, 2.5);
    EXPECT_EQ(s.min, 1.0);
    EXPECT_EQ(s.mean, 4.0);
}

TEST(Execute, WritesOutputs) {
    const fs::path out = scratch_dir("exec");
    const auto plan = parse_config_text(kMinimal);
    ExecOptions opt;
    opt.out_dir = out.string();
    opt.jobs = 2;
    const auto res = execute(plan, opt);
    EXPECT_EQ(res.exit_code, kExitOk);
    for (const char* f : {"summary.json", "rel_err.svg", "rel_opnorm.svg", "speg/aggregate.csv", "speg/seed_0.csv",
                          "speg/seed_2.csv"}) {
        EXPECT_TRUE(fs::exists(out / f)) << f;
    }
    const auto j = nlohmann::json::parse(slurp(out / "summary.json"));
    const auto& arm = j["arms"][0];
    EXPECT_EQ(arm["expected_oracle_calls"].get<std::uint64_t>(), 50u);
    for (const auto& s : arm["seeds"]) EXPECT_EQ(s["oracle_calls"].get<std::uint64_t>(), 50u);
    EXPECT_EQ(arm["diverged_seeds"].get<int>(), 0);

    // per-seed CSVs match a serial in-memory run exactly
    ExecOptions mem;
    mem.write_files = false;
    const auto serial = execute(plan, mem);
    EXPECT_EQ(slurp(out / "speg/seed_1.csv"), trace_csv(serial.arms[0].seeds[1].trace));
    fs::remove_all(out);
}

TEST(Execute, OutputDirFromEnvironment) {
    const fs::path out = scratch_dir("env");
    ::setenv("VIBENCH_OUT", out.string().c_str(), 1);
    const auto res = execute(parse_config_text(kMinimal));
    ::unsetenv("VIBENCH_OUT");
    EXPECT_EQ(res.output_dir, out.string());
    EXPECT_TRUE(fs::exists(out / "summary.json"));
    fs::remove_all(out);
}

TEST(Execute, AllDivergedExitCode) {
    const auto plan = parse_config_text(R"({
      "problem": {"family": "diagonal_game", "delta": 3},
      "iterations": 500, "seeds": 2,
      "solver": "speg", "sampler": "uniform", "schedule": {"kind": "fixed", "omega": 5}
    })");
    ExecOptions opt;
    opt.write_files = false;
    const auto res = execute(plan, opt);
    EXPECT_EQ(res.exit_code, kExitAllDiverged);
}

TEST(Constants, ReportContents) {
    const auto j = nlohmann::json::parse(constants_report(parse_config_text(kMinimal)));
    const auto& arm = j["arms"][0];
    // uniform single-element on the diagonal game: delta = (2/3) * 3 * 9
    EXPECT_NEAR(arm["delta"].get<double>(), 18.0, 1e-12);
    EXPECT_GT(arm["omega_bar"].get<double>(), 0.0);
}

TEST(Verify, DiagonalGamePasses) {
    for (const auto& line : verify_problem(generate_diagonal_game(3.0))) {
        EXPECT_TRUE(line.pass) << line.name << ": " << line.detail;
    }
}

namespace {

const ArmResult& arm_named(const ExecResult& r, const std::string& label) {
    for (const auto& a : r.arms)
        if (a.arm.label == label) return a;
    throw std::runtime_error("no arm " + label);
}

ExecResult run_preset(const std::string& name) {
    ExecOptions opt;
    opt.write_files = false;
    return execute(parse_config(std::string(VIBENCH_PRESET_DIR) + "/" + name), opt);
}

}  // namespace

TEST(Presets, InterpolatedConstantArmReachesTolerance) {
    const auto res = run_preset("fig2a.json");
    const auto& agg = arm_named(res, "constant").aggregate;
    EXPECT_LE(agg.back().rel_err.mean, 1e-8);
    EXPECT_LE(agg.back().rel_err.max, 1e-8);
}

TEST(Presets, SwitchingEndsBelowConstantPlateau) {
    const auto res = run_preset("fig1.json");
    const auto& constant = arm_named(res, "constant").aggregate;
    const auto& switching = arm_named(res, "switching").aggregate;
    const std::size_t from = constant.size() * 4 / 5;
    double plateau = 0.0;
    for (std::size_t i = from; i < constant.size(); ++i) plateau += constant[i].rel_err.median;
    plateau /= static_cast<double>(constant.size() - from);
    EXPECT_LT(switching.back().rel_err.median, plateau);
}
