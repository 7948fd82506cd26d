#pragma once

#include "vibench/core.hpp"
#include "vibench/sampling.hpp"
#include "vibench/schedules.hpp"

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace vibench {

// How the cached past operator value is initialised before k = 0.
//   zero_cache: cached = 0, so x_hat_0 = x_0 (no extra oracle call).
//   warm_up:    cached = F_{v_-1}(x_0) from one extra draw, x_hat_-1 = x_0.
enum class InitMode { zero_cache, warm_up };
const char* to_string(InitMode m);

struct SolverConfig {
    std::uint64_t iterations = 1000;  // K
    std::uint64_t seed = 0;
    std::uint64_t record_every = 0;   // 0 = automatic stride
    InitMode init_mode = InitMode::zero_cache;
    double divergence_threshold = 1e12;
    bool capture_iterates = false;
};

std::uint64_t default_record_stride(std::uint64_t K);

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct TraceRecord {
    std::uint64_t k = 0;
    double gamma = kNaN;
    double omega = kNaN;
    double sq_dist = kNaN;     // ||x_k - x*||^2
    double r_metric = kNaN;    // ||x_k - x*||^2 + ||x_k - x_hat_{k-1}||^2
    double op_norm_sq = kNaN;  // ||F(x_hat_k)||^2
    std::uint64_t oracle_calls = 0;
};

struct TraceSummary {
    std::uint64_t iterations_completed = 0;
    bool diverged = false;
    double initial_sq_dist = kNaN;
    double initial_op_norm_sq = kNaN;  // ||F(x_0)||^2
    double final_sq_dist = kNaN;
    double final_r_metric = kNaN;
    double final_op_norm_sq = kNaN;
    double min_op_norm_sq = kNaN;      // over x_hat_k, k < K
    std::uint64_t oracle_calls = 0;    // component evaluations
    std::uint64_t estimator_calls = 0;
    double wall_seconds = 0.0;
};

struct TraceEcho {
    std::string solver;
    std::uint64_t seed = 0;
    std::string sampler;
    std::string plan;
    std::string problem_id;
    std::string init_mode;
    std::string note;
};

struct Trace {
    std::vector<TraceRecord> records;
    std::vector<Vector> x;      // filled when capture_iterates
    std::vector<Vector> x_hat;  // filled when capture_iterates
    TraceSummary summary;
    TraceEcho echo;
};

Trace speg_run(const FiniteSumProblem& problem, const SamplerSpec& spec, const StepSizePlan& plan,
               const Point& x0, const SolverConfig& config);

// Optimistic form; iterates are the extrapolated points. Constant plans only.
Trace sog_run(const FiniteSumProblem& problem, const SamplerSpec& spec, const StepSizePlan& plan,
              const Point& x0, const SolverConfig& config);

Trace peg_run(const FiniteSumProblem& problem, const StepSizePlan& plan, const Point& x0,
              const SolverConfig& config);

struct WeakMviOptions {
    std::size_t batch = 1;   // independent draws averaged per iteration
    double gamma = 0.0;
    double omega = 0.0;
    bool force = false;      // skip step-size validation
    std::optional<SamplerSpec> base;  // per-draw distribution; uniform single when empty
};

Trace weak_mvi_speg_run(const FiniteSumProblem& problem, const WeakMviOptions& options,
                        const Point& x0, const SolverConfig& config);

}  // namespace vibench
