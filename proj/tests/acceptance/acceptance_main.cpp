// Acceptance suite: one PASS/FAIL line per criterion.
//
// Exit status is the number of failing criteria (capped at 125), so running the
// binary directly is a strict gate. `--expect-fail N` (repeatable) keeps the FAIL
// line for criterion N but leaves it out of the exit status. Every reference value is recomputed here
// from first principles (see tests/support/brute.hpp); library oracles are not
// used as the source of truth.

#include "vibench/bench.hpp"
#include "vibench/oracle.hpp"
#include "vibench/problems.hpp"
#include "vibench/rng.hpp"
#include "vibench/sampling.hpp"
#include "vibench/schedules.hpp"
#include "vibench/solvers.hpp"

#include "brute.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

using namespace vibench;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size();
    return m % 2 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

double mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

Matrix random_orthogonal(std::size_t d, Rng& rng) {
    Matrix g(static_cast<long>(d), static_cast<long>(d));
    for (long i = 0; i < g.rows(); ++i)
        for (long j = 0; j < g.cols(); ++j) g(i, j) = rng.normal();
    Eigen::HouseholderQR<Matrix> qr(g);
    return qr.householderQ() * Matrix::Identity(g.rows(), g.cols());
}

// F_i(x) = L_i Q_i (x - x*) + s_i with sum_i s_i = 0, so ||F_i||_Lip = L_i and F(x*) = 0.
struct RandomAffine {
    FiniteSumProblem problem;
    std::vector<double> L_i;
    std::vector<Vector> shifts;
    Vector x_star;
};

RandomAffine random_affine(std::size_t n, std::size_t d, std::uint64_t seed, bool interpolated = false) {
    Rng rng(seed, 99);
    RandomAffine r{FiniteSumProblem({ComponentOperator::affine(Matrix::Identity(1, 1), Vector::Zero(1))}), {}, {}, {}};
    r.x_star = Vector(static_cast<long>(d));
    for (long j = 0; j < r.x_star.size(); ++j) r.x_star(j) = rng.normal();
    Vector total = Vector::Zero(static_cast<long>(d));
    for (std::size_t i = 0; i < n; ++i) {
        Vector s(static_cast<long>(d));
        for (long j = 0; j < s.size(); ++j) s(j) = interpolated ? 0.0 : rng.normal();
        total += s;
        r.shifts.push_back(s);
    }
    for (auto& s : r.shifts) s -= total / static_cast<double>(n);
    std::vector<ComponentOperator> comps;
    for (std::size_t i = 0; i < n; ++i) {
        const double L = rng.uniform(0.2, 5.0);
        r.L_i.push_back(L);
        const Matrix M = L * random_orthogonal(d, rng);
        comps.push_back(ComponentOperator::affine(M, r.shifts[i] - M * r.x_star));
    }
    r.problem = FiniteSumProblem(std::move(comps), Point(r.x_star));
    CertifyOptions co;
    co.want_mu = false;
    r.problem = r.problem.with_constants(certify_constants(r.problem, co));
    return r;
}

brute::Field field_of(const FiniteSumProblem& p) {
    return [&p](std::size_t i, const brute::Vec& x) { return p.component(i)(x); };
}

double rel_gap(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

bool close_rel(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(std::abs(b), 1e-300) || std::abs(a - b) <= 1e-15; }

std::vector<double> random_probs(std::size_t n, Rng& rng) {
    std::vector<double> p(n);
    double s = 0.0;
    for (auto& v : p) s += (v = rng.uniform(0.1, 1.0));
    for (auto& v : p) v /= s;
    return p;
}

// ---------------------------------------------------------------------------

Verdict closed_form_vs_enumeration() {
    double worst = 0.0;
    std::size_t cases = 0;
    for (std::size_t n = 1; n <= 8; ++n) {
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const RandomAffine ra = random_affine(n, 3, 1000 * n + seed);
            const auto f = field_of(ra.problem);
            std::vector<double> stars;
            for (const auto& s : ra.shifts) stars.push_back(s.squaredNorm());
            for (std::size_t tau = 1; tau <= n; ++tau) {
                const NoiseConstants nc = minibatch_noise_constants(ra.L_i, stars, n, tau);
                const double d_ref = brute::minibatch_delta(ra.L_i, tau);
                const double s_ref = brute::sigma_star(f, n, brute::minibatch_draws(n, tau), ra.x_star);
                if (!close_rel(nc.delta, d_ref, 1e-10) || !close_rel(nc.sigma_star_sq, s_ref, 1e-10)) {
                    return {false, "minibatch n=" + std::to_string(n) + " tau=" + std::to_string(tau) +
                                       " delta " + fmt(nc.delta) + " vs " + fmt(d_ref) + ", sigma " +
                                       fmt(nc.sigma_star_sq) + " vs " + fmt(s_ref)};
                }
                if (d_ref > 0) worst = std::max(worst, rel_gap(nc.delta, d_ref));
                if (s_ref > 1e-12) worst = std::max(worst, rel_gap(nc.sigma_star_sq, s_ref));
                ++cases;
            }
            Rng rng(seed, n);
            for (const auto& p : {std::vector<double>(n, 1.0 / static_cast<double>(n)), random_probs(n, rng)}) {
                const NoiseConstants nc = single_element_noise_constants(ra.L_i, stars, p);
                const auto [d_ref, off] = brute::single_delta(ra.L_i, p);
                const double s_ref = brute::sigma_star(f, n, brute::single_draws(p), ra.x_star);
                if (off != 0.0 || !close_rel(nc.delta, d_ref, 1e-10) || !close_rel(nc.sigma_star_sq, s_ref, 1e-10)) {
                    return {false, "single-element n=" + std::to_string(n) + " delta " + fmt(nc.delta) + " vs " +
                                       fmt(d_ref) + ", sigma " + fmt(nc.sigma_star_sq) + " vs " + fmt(s_ref)};
                }
                worst = std::max(worst, rel_gap(nc.delta, d_ref));
                if (s_ref > 1e-12) worst = std::max(worst, rel_gap(nc.sigma_star_sq, s_ref));
                ++cases;
            }
        }
    }
    return {worst <= 1e-10, std::to_string(cases) + " cases, worst relative gap " + fmt(worst)};
}

Verdict er_and_variance_bound() {
    struct Case {
        std::string name;
        FiniteSumProblem problem;
    };
    std::vector<Case> cases;
    cases.push_back({"diagonal(3)", generate_diagonal_game(3.0)});
    {
        QuadraticGameSpec q;
        q.n = 6;
        q.d = 2;
        q.seed = 11;
        cases.push_back({"quadratic(n=6)", generate_quadratic_game(q)});
    }
    cases.push_back({"random_affine(n=5)", random_affine(5, 3, 77).problem});

    double worst = INFINITY;
    std::size_t checks = 0;
    for (const auto& c : cases) {
        const std::size_t n = c.problem.n();
        const auto f = field_of(c.problem);
        const Vector xs = c.problem.solution();
        std::vector<std::pair<SamplerSpec, std::vector<brute::Draw>>> samplers;
        samplers.emplace_back(SamplerSpec::uniform_single(n), brute::single_draws(std::vector<double>(n, 1.0 / n)));
        samplers.emplace_back(SamplerSpec::minibatch(n, 2), brute::minibatch_draws(n, 2));
        const auto ip = importance_probabilities(c.problem.constants()->L_i);
        samplers.emplace_back(SamplerSpec::single_element(ip), brute::single_draws(ip));

        Rng rng(2024, n);
        for (const auto& [spec, draws] : samplers) {
            const NoiseConstants nc = noise_constants_for(c.problem, spec);
            for (int t = 0; t < 1000; ++t) {
                Vector x = xs;
                const double scale = std::pow(10.0, rng.uniform(-2.0, 2.0));
                for (long j = 0; j < x.size(); ++j) x(j) += scale * rng.normal();
                const double r2 = (x - xs).squaredNorm();
                const double er = brute::residual(f, n, draws, x, xs);
                const double m2 = brute::second_moment_at(f, n, draws, x);
                const double fx = brute::mean_field(f, n, x).squaredNorm();
                const double tol_scale = std::max(1.0, nc.delta * r2);
                worst = std::min(worst, (0.5 * nc.delta * r2 - er) / tol_scale);
                worst = std::min(worst, (nc.delta * r2 + fx + 2.0 * nc.sigma_star_sq - m2) / tol_scale);
                checks += 2;
            }
        }
    }
    return {worst >= -1e-9, std::to_string(checks) + " inequality checks, worst scaled margin " + fmt(worst)};
}

Verdict deterministic_contraction() {
    const FiniteSumProblem p = generate_diagonal_game(3.0);
    const double L = p.constants()->L, mu = *p.constants()->mu;
    if (std::abs(L - 5.0 / 3.0) > 1e-12 || std::abs(mu - 1.0) > 1e-12) {
        return {false, "unexpected constants L=" + fmt(L) + " mu=" + fmt(mu)};
    }
    const double w = 1.0 / (4.0 * L);
    SolverConfig cfg;
    cfg.iterations = 2000;
    cfg.record_every = 1;
    cfg.init_mode = InitMode::warm_up;
    const Point x0{1.0, -2.0, 0.5, 3.0};
    const Trace t = peg_run(p, StepSizePlan::fixed(w), x0, cfg);
    double worst = -INFINITY;
    for (std::size_t k = 0; k + 1 < t.records.size(); ++k) {
        const double lhs = t.records[k + 1].r_metric;
        const double rhs = (1.0 - w * mu / 2.0) * t.records[k].r_metric + 1e-12;
        worst = std::max(worst, lhs - rhs);
    }
    const double rel = t.summary.final_sq_dist / t.summary.initial_sq_dist;
    const bool ok = worst <= 0.0 && rel < 1e-10 && t.records.size() == 2001;
    return {ok, "max step excess " + fmt(worst) + ", final relative error " + fmt(rel)};
}

Verdict stochastic_recurrence() {
    const FiniteSumProblem p = generate_diagonal_game(3.0);
    const double L = p.constants()->L, mu = *p.constants()->mu;
    const SamplerSpec spec = SamplerSpec::uniform_single(3);
    const NoiseConstants nc = noise_constants_for(p, spec);
    const StepSizePlan plan = StepSizePlan::constant(L, mu, nc.delta);
    const double w = plan.at(0).omega;
    const double factor = 1.0 - w * mu + 9.0 * w * w * nc.delta;
    const double additive = 12.0 * w * w * nc.sigma_star_sq;

    const std::size_t seeds = 200, K = 200;
    std::vector<std::vector<double>> R(seeds);
    const Point x0{4.0, -3.0, 2.0, 5.0};
    for (std::size_t s = 0; s < seeds; ++s) {
        SolverConfig cfg;
        cfg.iterations = K;
        cfg.seed = s;
        cfg.record_every = 1;
        cfg.init_mode = InitMode::warm_up;
        const Trace t = speg_run(p, spec, plan, x0, cfg);
        for (const auto& r : t.records) R[s].push_back(r.r_metric);
    }
    double worst = -INFINITY;
    std::size_t at = 0;
    for (std::size_t k = 0; k < K; ++k) {
        std::vector<double> next, cur, diff;
        for (std::size_t s = 0; s < seeds; ++s) {
            next.push_back(R[s][k + 1]);
            cur.push_back(R[s][k]);
            diff.push_back(R[s][k + 1] - factor * R[s][k]);
        }
        const double md = mean(diff);
        double var = 0.0;
        for (double d : diff) var += (d - md) * (d - md);
        const double se = std::sqrt(var / static_cast<double>(seeds - 1) / static_cast<double>(seeds));
        const double excess = mean(next) - (factor * mean(cur) + additive + 4.0 * se);
        if (excess > worst) {
            worst = excess;
            at = k;
        }
    }
    return {worst <= 0.0, "omega " + fmt(w) + ", worst excess " + fmt(worst) + " at k=" + std::to_string(at)};
}

Verdict neighborhood_size() {
    QuadraticGameSpec q;
    q.n = 10;
    q.d = 2;
    q.eig_A = {0.8, 1.0};
    q.sv_B = {0.0, 0.3};
    q.eig_C = {0.8, 1.0};
    q.seed = 5;
    const FiniteSumProblem p = generate_quadratic_game(q);
    const double L = p.constants()->L, mu = *p.constants()->mu;
    const SamplerSpec spec = SamplerSpec::uniform_single(p.n());
    const NoiseConstants nc = noise_constants_for(p, spec);
    const StepSizePlan plan = StepSizePlan::constant(L, mu, nc.delta);
    const double w = plan.at(0).omega;
    const double radius = 24.0 * w * nc.sigma_star_sq / mu;

    Rng xr(3, 0);
    Vector x0v(static_cast<long>(p.dim()));
    for (long j = 0; j < x0v.size(); ++j) x0v(j) = xr.normal();
    const Point x0(x0v);
    const double r0 = (x0v - p.solution()).squaredNorm();
    // Transient (1 - w mu / 2)^k R_0^2 is below 1e-3 of the radius before the tail starts.
    const auto transient = static_cast<std::uint64_t>(std::ceil(std::log(1e3 * r0 / radius) / (w * mu / 2.0)));
    const std::uint64_t K = std::max<std::uint64_t>(5000, (transient * 5 + 3) / 4);
    const std::uint64_t tail_from = K - K / 5;

    const std::size_t seeds = 100;
    std::vector<double> sum(K + 1, 0.0);
    for (std::size_t s = 0; s < seeds; ++s) {
        SolverConfig cfg;
        cfg.iterations = K;
        cfg.seed = s;
        cfg.record_every = 1;
        const Trace t = speg_run(p, spec, plan, x0, cfg);
        for (const auto& r : t.records) sum[r.k] += r.r_metric;
    }
    double tail = 0.0;
    for (std::uint64_t k = tail_from; k <= K; ++k) tail += sum[k] / static_cast<double>(seeds);
    tail /= static_cast<double>(K - tail_from + 1);
    return {tail <= 1.5 * radius, "K=" + std::to_string(K) + ", tail mean R^2 " + fmt(tail) + " vs 24 w sigma^2/mu " +
                                      fmt(radius)};
}

bench::RunPlan preset(const std::string& name) {
    return bench::parse_config(std::string(VIBENCH_PRESET_DIR) + "/" + name);
}

const bench::ArmResult& arm_named(const bench::ExecResult& r, const std::string& label) {
    for (const auto& a : r.arms)
        if (a.arm.label == label) return a;
    throw Error("no arm '" + label + "'");
}

std::vector<double> final_rel_err(const bench::ArmResult& a) {
    std::vector<double> out;
    for (const auto& s : a.seeds) out.push_back(s.trace.summary.final_sq_dist / s.trace.summary.initial_sq_dist);
    return out;
}

bench::ExecResult run_in_memory(const bench::RunPlan& plan) {
    bench::ExecOptions opt;
    opt.write_files = false;
    return bench::execute(plan, opt);
}

Verdict interpolated_linear() {
    bench::RunPlan plan = preset("fig2a.json");
    const FiniteSumProblem p = bench::build_problem(plan.problem);
    const double mu = *p.constants()->mu;
    const bench::ResolvedArm constant = bench::resolve_arm(p, plan.arms[0], plan);
    const double w = constant.plan.at(0).omega;
    // E R_K^2 <= (1 - w mu / 2)^K R_0^2 with sigma* = 0; R_0^2 = ||x_0 - x*||^2 under warm-up.
    plan.iterations = static_cast<std::uint64_t>(std::ceil(std::log(1e8) / -std::log1p(-w * mu / 2.0)));
    const bench::ExecResult r = run_in_memory(plan);
    const double mo = median(final_rel_err(arm_named(r, "constant")));
    const double mt = median(final_rel_err(arm_named(r, "hsieh")));
    return {mo <= 1e-8 && mt >= 1e3 * mo, "K=" + std::to_string(plan.iterations) + ", constant " + fmt(mo) +
                                              ", hsieh " + fmt(mt) + " (ratio " + fmt(mt / mo) + ")"};
}

Verdict switching_beats_constant() {
    bench::RunPlan plan = preset("fig1.json");
    const FiniteSumProblem p = bench::build_problem(plan.problem);
    const bench::ResolvedArm sw = bench::resolve_arm(p, plan.arms[1], plan);
    const std::uint64_t K = 3 * sw.plan.kstar();
    plan.iterations = K;
    plan.record_every = 1;
    const bench::ExecResult r = run_in_memory(plan);
    // Plateau: per-seed mean relative error over the last 20% of the constant run.
    std::vector<double> plateau;
    for (const auto& s : arm_named(r, "constant").seeds) {
        double tail = 0.0;
        std::size_t cnt = 0;
        for (const auto& rec : s.trace.records) {
            if (rec.k >= K - K / 5) {
                tail += rec.sq_dist;
                ++cnt;
            }
        }
        plateau.push_back(tail / static_cast<double>(cnt) / s.trace.summary.initial_sq_dist);
    }
    const double mp = median(plateau), mf = median(final_rel_err(arm_named(r, "switching")));
    return {mf * 10.0 <= mp, "k*=" + std::to_string(sw.plan.kstar()) + ", constant plateau " + fmt(mp) +
                                 ", switching final at 3k* " + fmt(mf) + " (ratio " + fmt(mp / mf) + ", need 10)"};
}

Verdict importance_vs_uniform() {
    std::vector<double> us, is;
    bool delta_order = true;
    std::string detail;
    for (const char* lam : {"2", "5", "10", "20"}) {
        const bench::RunPlan plan = preset(std::string("fig3_lambda") + lam + ".json");
        const FiniteSumProblem p = bench::build_problem(plan.problem);
        const auto& Li = p.constants()->L_i;
        delta_order = delta_order && delta_importance(Li) <= delta_uniform(Li) * (1.0 + 1e-12);
        const bench::ExecResult r = run_in_memory(plan);
        us.push_back(median(final_rel_err(arm_named(r, "uniform"))));
        is.push_back(median(final_rel_err(arm_named(r, "importance"))));
        detail += std::string(" ") + lam + ":" + fmt(us.back()) + "/" + fmt(is.back());
    }
    bool monotone = true;
    for (std::size_t i = 1; i < us.size(); ++i) monotone = monotone && us[i] > us[i - 1];
    const double spread = *std::max_element(is.begin(), is.end()) / *std::min_element(is.begin(), is.end());
    return {delta_order && monotone && spread < 10.0,
            "Lambda uniform/importance" + detail + "; importance spread " + fmt(spread)};
}

Verdict weak_mvi() {
    const FiniteSumProblem p = generate_weak_mvi_problem(WeakMviSpec{});
    const double L = p.constants()->L, rho = *p.constants()->rho;
    if (std::abs(L - 8.0) > 1e-9 || std::abs(rho - 1.0 / 32.0) > 1e-9) {
        return {false, "unexpected constants L=" + fmt(L) + " rho=" + fmt(rho)};
    }
    const double g = 0.08, w = 0.01;
    const std::uint64_t K = 1000;
    const Point x0{1.0, 1.0};
    const double r0 = (Vector(x0) - p.solution()).squaredNorm();
    const double bound = 48.0 * r0 / (w * g * (1.0 - L * (g + 4.0 * w)) * static_cast<double>(K - 1));

    WeakMviOptions det;
    det.gamma = g;
    det.omega = w;
    det.base = SamplerSpec::full_batch(p.n());
    SolverConfig cfg;
    cfg.iterations = K;
    const Trace t = weak_mvi_speg_run(p, det, x0, cfg);
    const bool det_ok = t.summary.min_op_norm_sq <= bound;

    WeakMviOptions sto;
    sto.gamma = g;
    sto.omega = w;
    sto.batch = 6;
    std::vector<double> rel, mins;
    for (std::uint64_t s = 0; s < 20; ++s) {
        SolverConfig c = cfg;
        c.seed = s;
        const Trace ts = weak_mvi_speg_run(p, sto, x0, c);
        rel.push_back(ts.summary.final_op_norm_sq / ts.summary.initial_op_norm_sq);
        mins.push_back(ts.summary.min_op_norm_sq);
    }
    const double mr = median(rel);
    const double mm = mean(mins);
    return {det_ok && mr < 1e-3 && mm <= 1.5 * bound,
            "deterministic min " + fmt(t.summary.min_op_norm_sq) + " <= " + fmt(bound) + "; batch-6 median rel " +
                fmt(mr) + ", seed-mean min " + fmt(mm)};
}

Verdict speg_sog_equivalence() {
    struct Case {
        FiniteSumProblem problem;
        SamplerSpec spec;
        StepSizePlan plan;
    };
    std::vector<Case> cases;
    {
        const auto p = generate_diagonal_game(3.0);
        const auto spec = SamplerSpec::uniform_single(3);
        cases.push_back({p, spec, StepSizePlan::constant(p.constants()->L, 1.0, noise_constants_for(p, spec).delta)});
    }
    {
        const auto p = generate_diagonal_game(10.0);
        const auto spec = SamplerSpec::minibatch(3, 2);
        cases.push_back({p, spec, StepSizePlan::fixed(0.02)});
    }
    {
        QuadraticGameSpec q;
        q.n = 20;
        q.d = 5;
        q.seed = 8;
        const auto p = generate_quadratic_game(q);
        const auto spec = SamplerSpec::minibatch(20, 4);
        cases.push_back({p, spec, StepSizePlan::constant(p.constants()->L, *p.constants()->mu,
                                                         noise_constants_for(p, spec).delta)});
    }
    {
        WeakMviSpec ws;
        ws.n = 10;
        const auto p = generate_weak_mvi_problem(ws);
        cases.push_back({p, SamplerSpec::uniform_single(10), StepSizePlan::weak_mvi(0.08, 0.01)});
    }
    {
        const auto rc = regression_counterexample(2.0, 1.0, 1.0, 3.0);
        cases.push_back({rc.problem, SamplerSpec::uniform_single(2), StepSizePlan::fixed(0.01)});
    }
    double worst = 0.0;
    for (std::size_t c = 0; c < cases.size(); ++c) {
        const auto& cs = cases[c];
        Vector x0 = Vector::Constant(static_cast<long>(cs.problem.dim()), 0.7);
        x0(0) = -1.3;
        SolverConfig cfg;
        cfg.iterations = 1000;
        cfg.seed = 42 + c;
        cfg.capture_iterates = true;
        const Trace a = speg_run(cs.problem, cs.spec, cs.plan, Point(x0), cfg);
        const Trace b = sog_run(cs.problem, cs.spec, cs.plan, Point(x0), cfg);
        if (a.x_hat.size() != b.x_hat.size() || a.x_hat.size() < 1000) {
            return {false, "case " + std::to_string(c) + ": iterate counts differ"};
        }
        for (std::size_t k = 0; k < a.x_hat.size(); ++k) worst = std::max(worst, (a.x_hat[k] - b.x_hat[k]).lpNorm<Eigen::Infinity>());
    }
    return {worst <= 1e-10, std::to_string(cases.size()) + " problems, max |x_hat difference| " + fmt(worst)};
}

Verdict counterexample() {
    const double a1 = 2.0, b1 = 1.0, a2 = 1.0, b2 = 3.0;
    const auto rc = regression_counterexample(a1, b1, a2, b2);
    const auto closed = [&](double x) {
        const double t = (a1 * a1 - a2 * a2) * x - (a1 * b1 - a2 * b2);
        return t * t;
    };
    const SamplerSpec spec = SamplerSpec::uniform_single(2);
    Sampler sampler(spec);
    Rng rng(17, 0);
    std::vector<double> xs = {1.0, 10.0, 100.0}, emp;
    std::string detail;
    bool ok = true;
    for (double x : xs) {
        Vector xv(1);
        xv(0) = x;
        const Vector F = evaluate_full(rc.problem, xv);
        const std::size_t N = 100000;
        double m = 0.0, m2 = 0.0;
        for (std::size_t t = 0; t < N; ++t) {
            const double v = (apply_estimator(rc.problem, sampler.draw(rng), xv) - F).squaredNorm();
            const double d = v - m;
            m += d / static_cast<double>(t + 1);
            m2 += d * (v - m);
        }
        const double se = std::sqrt(m2 / static_cast<double>(N - 1) / static_cast<double>(N));
        const double ref = closed(x);
        ok = ok && std::abs(m - ref) <= 3.0 * se + 1e-12 * std::abs(ref);
        ok = ok && std::abs(rc.variance(x) - ref) <= 1e-12 * std::max(1.0, ref);
        emp.push_back(m);
        detail += " x=" + fmt(x) + ":" + fmt(m) + "/" + fmt(ref);
    }
    // Leading coefficient of the quadratic through the three empirical points.
    const double x0 = xs[0], x1 = xs[1], x2 = xs[2];
    const double c = emp[0] / ((x0 - x1) * (x0 - x2)) + emp[1] / ((x1 - x0) * (x1 - x2)) + emp[2] / ((x2 - x0) * (x2 - x1));
    const double c_ref = (a1 * a1 - a2 * a2) * (a1 * a1 - a2 * a2);
    ok = ok && std::abs(c - c_ref) <= 0.05 * c_ref;
    return {ok, "variance (empirical/closed)" + detail + "; growth " + fmt(c) + " vs " + fmt(c_ref)};
}

Verdict schedule_conditions() {
    Rng rng(123, 0);
    double worst = -INFINITY;
    for (int t = 0; t < 1000; ++t) {
        const double L = std::pow(10.0, rng.uniform(-2.0, 3.0));
        const double mu = L * rng.uniform(1e-4, 1.0);
        const double delta = std::pow(10.0, rng.uniform(-3.0, 6.0));
        const double w = constant_step(L, mu, delta);
        const ConditionMargins m = step_conditions(w, L, mu, delta);
        // Independent evaluation of both inequalities.
        const double c1 = 2 * w * (mu - w * delta) + 8 * w * w * L * L - 1;
        const double c2 = 8 * w * w * (delta + L * L) - (1 - w * mu + 9 * w * w * delta);
        if (std::abs(c1 - m.first) > 1e-12 || std::abs(c2 - m.second) > 1e-12) {
            return {false, "margin mismatch at L=" + fmt(L) + " mu=" + fmt(mu) + " delta=" + fmt(delta)};
        }
        worst = std::max({worst, c1, c2});
    }
    return {worst <= 0.0, "1000 triples, largest margin " + fmt(worst)};
}

struct Criterion {
    int id;
    const char* name;
    double budget_seconds;
    std::function<Verdict()> run;
};

}  // namespace

int main(int argc, char** argv) {
    std::vector<int> expected_failures;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--expect-fail" && i + 1 < argc) {
            expected_failures.push_back(std::atoi(argv[++i]));
        } else {
            std::fprintf(stderr, "usage: %s [--expect-fail N]...\n", argv[0]);
            return 2;
        }
    }
    set_warning_sink([](const std::string&) {});
    const std::vector<Criterion> criteria = {
        {1, "closed-form noise constants match enumeration", 10, closed_form_vs_enumeration},
        {2, "expected residual and variance bound hold", 10, er_and_variance_bound},
        {3, "deterministic per-step contraction", 1, deterministic_contraction},
        {4, "stochastic one-step recurrence", 30, stochastic_recurrence},
        {5, "neighborhood size", 60, neighborhood_size},
        {6, "interpolated linear convergence vs decreasing baseline", 60, interpolated_linear},
        {7, "switching beats constant plateau", 60, switching_beats_constant},
        {8, "importance vs uniform sampling across Lambda", 180, importance_vs_uniform},
        {9, "weak Minty convergence", 120, weak_mvi},
        {10, "SPEG and SOG traces agree", 5, speg_sog_equivalence},
        {11, "regression counterexample variance", 10, counterexample},
        {12, "constant step satisfies both step-size conditions", 1, schedule_conditions},
    };
    int failed = 0, unexpected = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Verdict o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = secs < c.budget_seconds;
        const bool pass = o.pass && in_time;
        const bool expected = std::find(expected_failures.begin(), expected_failures.end(), c.id) !=
                              expected_failures.end();
        failed += pass ? 0 : 1;
        unexpected += (pass || expected) ? 0 : 1;
        std::printf("%s [%2d] %s: %s (%.2f s%s)%s\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs,
                    in_time ? "" : ", over budget", !pass && expected ? " [known failure]" : "");
        std::fflush(stdout);
    }
    std::printf("acceptance: %zu criteria, %d failed (%d unexpected)\n", criteria.size(), failed, unexpected);
    return std::min(unexpected, 125);
}
