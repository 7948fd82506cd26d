#include "vibench/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <sstream>

namespace vibench {

const char* to_string(InitMode m) {
    return m == InitMode::zero_cache ? "zero_cache" : "warm_up";
}

std::uint64_t default_record_stride(std::uint64_t K) {
    if (K <= 10000) return 1;
    return (K + 9999) / 10000;
}

namespace {

constexpr const char* kInitNote =
    "k=0 extrapolation: zero_cache sets x_hat_0 = x_0; warm_up draws one extra sample at x_hat_-1 = x_0";

using DrawFn = std::function<void(Rng&, SamplingVector&)>;

struct LoopSpec {
    std::string solver;
    DrawFn draw;
    std::uint64_t calls_per_draw = 1;  // component evaluations charged per estimator call
    std::string sampler;
    bool sog = false;
};

void validate_common(const FiniteSumProblem& problem, const Point& x0, const SolverConfig& cfg) {
    check_dimension(problem, x0);
    if (cfg.iterations < 1) {
        throw Error("solver: iterations K must be at least 1");
    }
    if (!(cfg.divergence_threshold > 0.0)) {
        throw Error("solver: divergence threshold must be positive");
    }
}

bool diverged(const Vector& v, double threshold) {
    if (!v.allFinite()) return true;
    return v.norm() > threshold;
}

// Shared SPEG / SOG driver. The two recursions are written out separately so
// that SOG is an independent code path rather than a relabelled SPEG.
Trace run_loop(const FiniteSumProblem& problem, const StepSizePlan& plan, const Point& x0_pt,
               const SolverConfig& cfg, const LoopSpec& ls) {
    validate_common(problem, x0_pt, cfg);
    const auto start = std::chrono::steady_clock::now();
    const auto d = static_cast<Eigen::Index>(problem.dim());
    const Vector& x0 = x0_pt.coords();
    const bool has_sol = problem.has_solution();
    const Vector xs = has_sol ? problem.solution() : Vector();
    const bool fast_mean = problem.mean_map() != nullptr;
    const std::uint64_t K = cfg.iterations;
    const std::uint64_t stride = cfg.record_every == 0 ? default_record_stride(K) : cfg.record_every;

    Trace tr;
    tr.echo.solver = ls.solver;
    tr.echo.seed = cfg.seed;
    tr.echo.sampler = ls.sampler;
    tr.echo.plan = plan.describe();
    tr.echo.problem_id = problem.id();
    tr.echo.init_mode = to_string(cfg.init_mode);
    tr.echo.note = kInitNote;

    Rng rng(cfg.seed, 0);
    SamplingVector v;
    Vector scratch(d), u(d);
    std::uint64_t calls = 0;
    std::uint64_t est_calls = 0;

    // SPEG state: x, cached (F_{v_{k-1}}(x_hat_{k-1})), x_hat_prev.
    // SOG state: y (= x_hat), g_prev. x_k is reconstructed as y_k + gamma_k g_{k-1}.
    Vector x = x0;
    Vector cached = Vector::Zero(d);
    Vector x_hat_prev = x0;
    Vector x_hat(d);

    if (cfg.init_mode == InitMode::warm_up) {
        ls.draw(rng, v);
        apply_estimator_into(problem, v, x0, cached, scratch);
        calls += ls.calls_per_draw;
        ++est_calls;
    }

    tr.summary.initial_op_norm_sq = mean_operator(problem, x0).squaredNorm();
    if (has_sol) {
        tr.summary.initial_sq_dist = (x0 - xs).squaredNorm();
    }
    double running_min = std::numeric_limits<double>::infinity();

    // SOG keeps y and g_prev; initialise so that y_0 = x_hat_0.
    Vector y;
    Vector g_prev = cached;
    if (ls.sog) {
        const StepPair s0 = plan.at(0);
        y = x0 - s0.gamma * cached;
    }

    auto make_record = [&](std::uint64_t k, const StepPair& s, const Vector& xk, const Vector& xh_prev,
                           const Vector& xh) {
        TraceRecord r;
        r.k = k;
        r.gamma = s.gamma;
        r.omega = s.omega;
        if (has_sol) {
            r.sq_dist = (xk - xs).squaredNorm();
            r.r_metric = r.sq_dist + (xk - xh_prev).squaredNorm();
        }
        r.op_norm_sq = mean_operator(problem, xh).squaredNorm();
        r.oracle_calls = calls;
        return r;
    };

    std::uint64_t k = 0;
    bool blew_up = false;
    for (; k < K; ++k) {
        const StepPair s = plan.at(k);
        if (ls.sog) {
            // x_hat_k is y; x_k = y + gamma_k * g_{k-1}
            x_hat = y;
            x = y + s.gamma * g_prev;
        } else {
            x_hat = x - s.gamma * cached;
        }

        const bool record = (k % stride) == 0;
        if (record || fast_mean) {
            TraceRecord r = make_record(k, s, x, x_hat_prev, x_hat);
            running_min = std::min(running_min, r.op_norm_sq);
            if (record) {
                tr.records.push_back(r);
                if (cfg.capture_iterates) {
                    tr.x.push_back(x);
                    tr.x_hat.push_back(x_hat);
                }
            }
        }

        ls.draw(rng, v);
        apply_estimator_into(problem, v, x_hat, u, scratch);
        calls += ls.calls_per_draw;
        ++est_calls;

        if (ls.sog) {
            y = y - s.omega * u - s.gamma * (u - g_prev);
            g_prev = u;
            if (diverged(y, cfg.divergence_threshold)) {
                blew_up = true;
                ++k;
                break;
            }
        } else {
            x = x - s.omega * u;
            cached = u;
            if (diverged(x, cfg.divergence_threshold)) {
                blew_up = true;
                ++k;
                break;
            }
        }
        x_hat_prev = x_hat;
    }

    tr.summary.iterations_completed = k;
    tr.summary.diverged = blew_up;
    tr.summary.oracle_calls = calls;
    tr.summary.estimator_calls = est_calls;
    if (!blew_up) {
        // Final point k = K: x_hat_K = x_K - gamma_K * cached.
        const StepPair s = plan.at(K);
        Vector xK, xhK;
        if (ls.sog) {
            xhK = y;
            xK = y + s.gamma * g_prev;
        } else {
            xK = x;
            xhK = x - s.gamma * cached;
        }
        TraceRecord r = make_record(K, s, xK, x_hat_prev, xhK);
        if (tr.records.empty() || tr.records.back().k != K) {
            tr.records.push_back(r);
            if (cfg.capture_iterates) {
                tr.x.push_back(xK);
                tr.x_hat.push_back(xhK);
            }
        }
        tr.summary.final_sq_dist = r.sq_dist;
        tr.summary.final_r_metric = r.r_metric;
        tr.summary.final_op_norm_sq = r.op_norm_sq;
    }
    if (!fast_mean) {
        for (const auto& r : tr.records) {
            if (r.k < K) running_min = std::min(running_min, r.op_norm_sq);
        }
    }
    tr.summary.min_op_norm_sq = std::isfinite(running_min) ? running_min : kNaN;
    tr.summary.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return tr;
}

LoopSpec sampler_loop(const std::string& solver, const FiniteSumProblem& problem, const SamplerSpec& spec) {
    if (spec.n() != problem.n()) {
        std::ostringstream os;
        os << "solver: sampler n=" << spec.n() << " does not match problem n=" << problem.n();
        throw Error(os.str());
    }
    auto sampler = std::make_shared<Sampler>(spec);
    LoopSpec ls;
    ls.solver = solver;
    ls.draw = [sampler](Rng& rng, SamplingVector& out) { sampler->draw(rng, out); };
    ls.calls_per_draw = spec.tau();
    ls.sampler = spec.describe();
    return ls;
}

}  // namespace

Trace speg_run(const FiniteSumProblem& problem, const SamplerSpec& spec, const StepSizePlan& plan,
               const Point& x0, const SolverConfig& config) {
    return run_loop(problem, plan, x0, config, sampler_loop("speg", problem, spec));
}

Trace sog_run(const FiniteSumProblem& problem, const SamplerSpec& spec, const StepSizePlan& plan,
              const Point& x0, const SolverConfig& config) {
    if (!plan.is_constant()) {
        throw Error("equivalence requires constant steps");
    }
    LoopSpec ls = sampler_loop("sog", problem, spec);
    ls.sog = true;
    return run_loop(problem, plan, x0, config, ls);
}

Trace peg_run(const FiniteSumProblem& problem, const StepSizePlan& plan, const Point& x0,
              const SolverConfig& config) {
    LoopSpec ls = sampler_loop("peg", problem, SamplerSpec::full_batch(problem.n()));
    return run_loop(problem, plan, x0, config, ls);
}

Trace weak_mvi_speg_run(const FiniteSumProblem& problem, const WeakMviOptions& opt, const Point& x0,
                        const SolverConfig& config) {
    if (config.iterations < 2) {
        throw Error("weak-MVI solver: K must be at least 2");
    }
    if (opt.batch < 1) {
        throw Error("weak-MVI solver: batch must be at least 1");
    }
    if (!opt.force) {
        if (!problem.constants() || !problem.constants()->rho) {
            throw Error("weak-MVI solver: problem needs L and rho to validate steps (or set force)");
        }
        const double L = problem.constants()->L;
        const double rho = *problem.constants()->rho;
        if (!weak_mvi_admissible(L, rho, opt.gamma, opt.omega)) {
            std::ostringstream os;
            os << "weak-MVI solver: (gamma=" << opt.gamma << ", omega=" << opt.omega
               << ") violates the step-size constraints for L=" << L << ", rho=" << rho;
            throw Error(os.str());
        }
    }
    const SamplerSpec base = opt.base ? *opt.base : SamplerSpec::uniform_single(problem.n());
    if (base.n() != problem.n()) {
        throw Error("weak-MVI solver: base sampler n does not match problem n");
    }
    auto sampler = std::make_shared<Sampler>(base);
    auto single = std::make_shared<SamplingVector>();
    const std::size_t tau = opt.batch;
    const std::size_t n = problem.n();
    auto acc = std::make_shared<std::vector<double>>(n, 0.0);

    LoopSpec ls;
    ls.solver = "weak_mvi_speg";
    ls.calls_per_draw = tau * base.tau();
    {
        std::ostringstream os;
        os << "mean_of(" << tau << " x " << base.describe() << ")";
        ls.sampler = os.str();
    }
    // Average of tau independent draws; repeated indices are merged so the
    // support stays unique.
    ls.draw = [sampler, single, acc, tau, n](Rng& rng, SamplingVector& out) {
        std::fill(acc->begin(), acc->end(), 0.0);
        for (std::size_t t = 0; t < tau; ++t) {
            sampler->draw(rng, *single);
            for (std::size_t j = 0; j < single->support.size(); ++j) {
                (*acc)[single->support[j]] += single->weights[j];
            }
        }
        out.support.clear();
        out.weights.clear();
        const double inv = 1.0 / static_cast<double>(tau);
        for (std::size_t i = 0; i < n; ++i) {
            if ((*acc)[i] > 0.0) {
                out.support.push_back(i);
                out.weights.push_back((*acc)[i] * inv);
            }
        }
    };
    return run_loop(problem, StepSizePlan::weak_mvi(opt.gamma, opt.omega), x0, config, ls);
}

}  // namespace vibench
