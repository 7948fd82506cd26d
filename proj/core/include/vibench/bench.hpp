#pragma once

#include "vibench/core.hpp"
#include "vibench/metrics.hpp"
#include "vibench/oracle.hpp"
#include "vibench/problems.hpp"
#include "vibench/sampling.hpp"
#include "vibench/schedules.hpp"
#include "vibench/solvers.hpp"

#include <optional>
#include <string>
#include <vector>

namespace vibench::bench {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitAllDiverged = 3;

// Schema violation; `path` points at the offending field (e.g. "arms[1].sampler.tau").
class ConfigError : public Error {
public:
    ConfigError(std::string path, const std::string& message);
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

enum class ProblemFamily { quadratic_game, weak_mvi, diagonal_game, regression, file };

struct ProblemConfig {
    ProblemFamily family = ProblemFamily::diagonal_game;
    QuadraticGameSpec quadratic;
    WeakMviSpec weak_mvi;
    double delta = 3.0;
    double a1 = 2.0, b1 = 0.0, a2 = 1.0, b2 = 0.0;
    std::string path;
};

enum class SolverKind { speg, sog, peg, weak_mvi_speg };
enum class SamplerChoice { minibatch, uniform, importance, single_element, full_batch };

struct SamplerConfig {
    SamplerChoice kind = SamplerChoice::uniform;
    std::size_t tau = 1;
    std::vector<double> probs;
};

struct ScheduleConfig {
    ScheduleKind kind = ScheduleKind::constant;
    std::optional<double> eps;
    std::optional<std::uint64_t> horizon;
    std::optional<double> gamma0;
    std::optional<double> b;
    std::optional<double> gamma;
    std::optional<double> omega;
    std::uint64_t switch_at = 0;
};

struct ArmConfig {
    std::string label;
    SolverKind solver = SolverKind::speg;
    SamplerConfig sampler;
    ScheduleConfig schedule;
    std::size_t batch = 1;  // weak_mvi_speg only
    bool force = false;
};

enum class X0Kind { normal, zeros, explicit_values };

struct X0Config {
    X0Kind kind = X0Kind::normal;
    double scale = 1.0;
    std::uint64_t seed = 20240601;
    std::vector<double> values;
};

struct RunPlan {
    std::string name = "run";
    ProblemConfig problem;
    std::vector<ArmConfig> arms;
    std::uint64_t iterations = 1000;
    std::vector<std::uint64_t> seeds{0};
    std::string output_dir = "vibench_out";
    std::uint64_t record_every = 0;
    InitMode init_mode = InitMode::zero_cache;
    X0Config x0;
    std::string source;  // config path, for messages
};

RunPlan parse_config(const std::string& path);
RunPlan parse_config_text(const std::string& text, const std::string& source = "<string>");

FiniteSumProblem build_problem(const ProblemConfig& config);
Vector make_x0(const RunPlan& plan, const FiniteSumProblem& problem);

struct ResolvedArm {
    std::string label;
    SolverKind solver = SolverKind::speg;
    SamplerSpec sampler = SamplerSpec::full_batch(1);
    StepSizePlan plan = StepSizePlan::fixed(1.0);
    NoiseConstants noise;  // per estimator call (batched for weak_mvi_speg)
    WeakMviOptions weak;
};

ResolvedArm resolve_arm(const FiniteSumProblem& problem, const ArmConfig& arm, const RunPlan& plan);

Trace run_arm(const FiniteSumProblem& problem, const ResolvedArm& arm, const Vector& x0,
              const SolverConfig& config);

struct ExecOptions {
    unsigned jobs = 1;
    std::optional<std::string> out_dir;
    std::uint64_t seed_offset = 0;
    bool write_files = true;
};

struct SeedResult {
    std::uint64_t seed = 0;
    Trace trace;
};

struct ArmResult {
    ResolvedArm arm;
    std::vector<SeedResult> seeds;
    std::vector<AggregateRow> aggregate;
};

struct ExecResult {
    int exit_code = kExitOk;
    std::string output_dir;
    std::vector<ArmResult> arms;
};

// Output directory precedence: options.out_dir, then $VIBENCH_OUT, then plan.output_dir.
ExecResult execute(const RunPlan& plan, const ExecOptions& options = {});

// JSON text with delta, sigma*^2, omega_bar, k*, and step/batch prescriptions per arm.
std::string constants_report(const RunPlan& plan);

struct VerifyLine {
    std::string name;
    bool pass = true;
    std::string detail;
};

std::vector<VerifyLine> verify_problem(const FiniteSumProblem& problem, std::uint64_t seed = 0);

const char* to_string(SolverKind k);
const char* to_string(SamplerChoice k);

}  // namespace vibench::bench
