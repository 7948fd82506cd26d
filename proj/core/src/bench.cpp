#include "vibench/bench.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

namespace vibench::bench {

using json = nlohmann::json;
namespace fs = std::filesystem;

ConfigError::ConfigError(std::string path, const std::string& message)
    : Error(path.empty() ? message : path + ": " + message), path_(std::move(path)) {}

const char* to_string(SolverKind k) {
    switch (k) {
        case SolverKind::speg: return "speg";
        case SolverKind::sog: return "sog";
        case SolverKind::peg: return "peg";
        case SolverKind::weak_mvi_speg: return "weak_mvi_speg";
    }
    return "unknown";
}

const char* to_string(SamplerChoice k) {
    switch (k) {
        case SamplerChoice::minibatch: return "minibatch";
        case SamplerChoice::uniform: return "uniform";
        case SamplerChoice::importance: return "importance";
        case SamplerChoice::single_element: return "single_element";
        case SamplerChoice::full_batch: return "full_batch";
    }
    return "unknown";
}

namespace {

// ---------------------------------------------------------------------------
// Strict JSON object reader: every key must be consumed or it is rejected.

class Obj {
public:
    Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_, "expected an object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }
    std::string at_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const json& raw(const std::string& key) {
        used_.insert(key);
        if (!j_.contains(key)) throw ConfigError(at_path(key), "required field missing");
        return j_.at(key);
    }

    std::string str(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_string()) throw ConfigError(at_path(key), "expected a string");
        return v.get<std::string>();
    }

    std::string str(const std::string& key, const std::string& dflt) { return has(key) ? str(key) : dflt; }

    double num(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_number()) throw ConfigError(at_path(key), "expected a number");
        const double d = v.get<double>();
        if (!std::isfinite(d)) throw ConfigError(at_path(key), "must be finite");
        return d;
    }

    double num(const std::string& key, double dflt) { return has(key) ? num(key) : dflt; }

    std::optional<double> opt_num(const std::string& key) {
        if (!has(key)) return std::nullopt;
        return num(key);
    }

    double positive(const std::string& key) {
        const double v = num(key);
        if (!(v > 0.0)) throw ConfigError(at_path(key), "must be positive");
        return v;
    }

    std::uint64_t uint(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_number_integer() || v.get<long long>() < 0) {
            throw ConfigError(at_path(key), "expected a nonnegative integer");
        }
        return v.get<std::uint64_t>();
    }

    std::uint64_t uint(const std::string& key, std::uint64_t dflt) { return has(key) ? uint(key) : dflt; }

    bool boolean(const std::string& key, bool dflt) {
        if (!has(key)) return dflt;
        const json& v = raw(key);
        if (!v.is_boolean()) throw ConfigError(at_path(key), "expected true or false");
        return v.get<bool>();
    }

    Interval interval(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
            throw ConfigError(at_path(key), "expected [lo, hi]");
        }
        Interval iv{v[0].get<double>(), v[1].get<double>()};
        if (!(iv.lo >= 0.0 && iv.hi >= iv.lo && std::isfinite(iv.hi))) {
            throw ConfigError(at_path(key), "interval must satisfy 0 <= lo <= hi");
        }
        return iv;
    }

    std::vector<double> numbers(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_array()) throw ConfigError(at_path(key), "expected an array of numbers");
        std::vector<double> out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number()) {
                throw ConfigError(at_path(key) + "[" + std::to_string(i) + "]", "expected a number");
            }
            out.push_back(v[i].get<double>());
        }
        return out;
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!used_.count(it.key())) throw ConfigError(at_path(it.key()), "unknown key");
        }
    }

    const std::string& path() const { return path_; }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

template <class E>
E pick(const std::string& value, const std::vector<std::pair<const char*, E>>& table, const std::string& path) {
    for (const auto& [name, e] : table) {
        if (value == name) return e;
    }
    std::string allowed;
    for (const auto& [name, e] : table) {
        if (!allowed.empty()) allowed += ", ";
        allowed += name;
    }
    throw ConfigError(path, "unknown value '" + value + "' (expected one of: " + allowed + ")");
}

ProblemConfig parse_problem(Obj o, const fs::path& base_dir) {
    ProblemConfig pc;
    const std::string fam = o.str("family");
    pc.family = pick<ProblemFamily>(fam,
                                    {{"quadratic_game", ProblemFamily::quadratic_game},
                                     {"weak_mvi", ProblemFamily::weak_mvi},
                                     {"diagonal_game", ProblemFamily::diagonal_game},
                                     {"regression", ProblemFamily::regression},
                                     {"file", ProblemFamily::file}},
                                    o.at_path("family"));
    switch (pc.family) {
        case ProblemFamily::quadratic_game: {
            auto& q = pc.quadratic;
            q.n = o.uint("n", q.n);
            q.d = o.uint("d", q.d);
            if (o.has("eig_A")) q.eig_A = o.interval("eig_A");
            if (o.has("sv_B")) q.sv_B = o.interval("sv_B");
            if (o.has("eig_C")) q.eig_C = o.interval("eig_C");
            if (o.has("first_eig_A")) q.first_eig_A = o.interval("first_eig_A");
            if (o.has("first_sv_B")) q.first_sv_B = o.interval("first_sv_B");
            if (o.has("first_eig_C")) q.first_eig_C = o.interval("first_eig_C");
            q.interpolated = o.boolean("interpolated", q.interpolated);
            q.printed_formula_compat = o.boolean("printed_formula_compat", q.printed_formula_compat);
            q.seed = o.uint("seed", q.seed);
            q.max_ambient_dim = o.uint("max_ambient_dim", q.max_ambient_dim);
            try {
                q.validate();
            } catch (const ConfigError&) {
                throw;
            } catch (const Error& e) {
                throw ConfigError(o.path(), e.what());
            }
            break;
        }
        case ProblemFamily::weak_mvi: {
            auto& w = pc.weak_mvi;
            w.n = o.uint("n", w.n);
            w.mean_xi = o.num("mean_xi", w.mean_xi);
            w.mean_zeta = o.num("mean_zeta", w.mean_zeta);
            w.spread = o.num("spread", w.spread);
            w.seed = o.uint("seed", w.seed);
            try {
                w.validate();
            } catch (const Error& e) {
                throw ConfigError(o.path(), e.what());
            }
            break;
        }
        case ProblemFamily::diagonal_game:
            pc.delta = o.num("delta", pc.delta);
            if (!(pc.delta >= 1.0)) throw ConfigError(o.at_path("delta"), "must be >= 1");
            break;
        case ProblemFamily::regression:
            pc.a1 = o.num("a1", pc.a1);
            pc.b1 = o.num("b1", pc.b1);
            pc.a2 = o.num("a2", pc.a2);
            pc.b2 = o.num("b2", pc.b2);
            if (pc.a1 == 0.0 && pc.a2 == 0.0) throw ConfigError(o.path(), "a1 and a2 cannot both be zero");
            break;
        case ProblemFamily::file: {
            fs::path p = o.str("path");
            if (p.is_relative()) p = base_dir / p;
            pc.path = p.string();
            break;
        }
    }
    o.finish();
    return pc;
}

std::optional<std::size_t> known_n(const ProblemConfig& pc) {
    switch (pc.family) {
        case ProblemFamily::quadratic_game: return pc.quadratic.n;
        case ProblemFamily::weak_mvi: return pc.weak_mvi.n;
        case ProblemFamily::diagonal_game: return 3;
        case ProblemFamily::regression: return 2;
        case ProblemFamily::file: return std::nullopt;
    }
    return std::nullopt;
}

SamplerConfig parse_sampler(const json& j, const std::string& path, std::optional<std::size_t> n) {
    SamplerConfig sc;
    const std::vector<std::pair<const char*, SamplerChoice>> table = {
        {"minibatch", SamplerChoice::minibatch},   {"uniform", SamplerChoice::uniform},
        {"importance", SamplerChoice::importance}, {"single_element", SamplerChoice::single_element},
        {"full_batch", SamplerChoice::full_batch}};
    if (j.is_string()) {
        sc.kind = pick<SamplerChoice>(j.get<std::string>(), table, path);
        if (sc.kind == SamplerChoice::minibatch || sc.kind == SamplerChoice::single_element) {
            throw ConfigError(path, "this sampler needs parameters; use an object");
        }
        return sc;
    }
    Obj o(j, path);
    sc.kind = pick<SamplerChoice>(o.str("kind"), table, o.at_path("kind"));
    if (sc.kind == SamplerChoice::minibatch) {
        sc.tau = o.uint("tau");
        if (sc.tau < 1) throw ConfigError(o.at_path("tau"), "tau must be at least 1");
        if (n && sc.tau > *n) {
            throw ConfigError(o.at_path("tau"),
                              "tau=" + std::to_string(sc.tau) + " exceeds n=" + std::to_string(*n));
        }
    }
    if (sc.kind == SamplerChoice::single_element) {
        sc.probs = o.numbers("probs");
        if (n && sc.probs.size() != *n) {
            throw ConfigError(o.at_path("probs"), "expected " + std::to_string(*n) + " probabilities");
        }
        try {
            (void)SamplerSpec::single_element(sc.probs);
        } catch (const Error& e) {
            throw ConfigError(o.at_path("probs"), e.what());
        }
    }
    o.finish();
    return sc;
}

ScheduleConfig parse_schedule(const json& j, const std::string& path) {
    ScheduleConfig sc;
    const std::vector<std::pair<const char*, ScheduleKind>> table = {
        {"constant", ScheduleKind::constant},
        {"constant_targeted", ScheduleKind::constant_targeted},
        {"switching", ScheduleKind::switching},
        {"horizon_aware", ScheduleKind::horizon_aware},
        {"hsieh", ScheduleKind::hsieh},
        {"weak_mvi", ScheduleKind::weak_mvi},
        {"custom", ScheduleKind::custom},
        {"fixed", ScheduleKind::fixed}};
    if (j.is_string()) {
        sc.kind = pick<ScheduleKind>(j.get<std::string>(), table, path);
    } else {
        Obj o(j, path);
        sc.kind = pick<ScheduleKind>(o.str("kind"), table, o.at_path("kind"));
        switch (sc.kind) {
            case ScheduleKind::constant_targeted: sc.eps = o.positive("eps"); break;
            case ScheduleKind::horizon_aware:
                if (o.has("horizon")) sc.horizon = o.uint("horizon");
                break;
            case ScheduleKind::hsieh:
                if (o.has("gamma0")) sc.gamma0 = o.positive("gamma0");
                if (o.has("b")) sc.b = o.positive("b");
                break;
            case ScheduleKind::weak_mvi:
                if (o.has("gamma")) sc.gamma = o.positive("gamma");
                if (o.has("omega")) sc.omega = o.positive("omega");
                if (sc.gamma.has_value() != sc.omega.has_value()) {
                    throw ConfigError(path, "give both gamma and omega, or neither");
                }
                break;
            case ScheduleKind::custom: sc.switch_at = o.uint("switch_at"); break;
            case ScheduleKind::fixed: sc.omega = o.positive("omega"); break;
            default: break;
        }
        o.finish();
    }
    if (sc.kind == ScheduleKind::constant_targeted && !sc.eps) {
        throw ConfigError(path, "constant_targeted needs eps");
    }
    if (sc.kind == ScheduleKind::custom && j.is_string()) {
        throw ConfigError(path, "custom needs switch_at");
    }
    if (sc.kind == ScheduleKind::fixed && !sc.omega) {
        throw ConfigError(path, "fixed needs omega");
    }
    return sc;
}

ArmConfig parse_arm(Obj o, std::optional<std::size_t> n, std::size_t index) {
    ArmConfig arm;
    const std::string solver_path = o.at_path("solver");
    arm.solver = pick<SolverKind>(o.str("solver"),
                                  {{"speg", SolverKind::speg},
                                   {"sog", SolverKind::sog},
                                   {"peg", SolverKind::peg},
                                   {"weak_mvi_speg", SolverKind::weak_mvi_speg}},
                                  solver_path);
    arm.label = o.str("label", std::string(to_string(arm.solver)) + (index ? "_" + std::to_string(index) : ""));
    if (o.has("sampler")) {
        arm.sampler = parse_sampler(o.raw("sampler"), o.at_path("sampler"), n);
    } else if (arm.solver == SolverKind::peg) {
        arm.sampler.kind = SamplerChoice::full_batch;
    }
    if (o.has("schedule")) {
        arm.schedule = parse_schedule(o.raw("schedule"), o.at_path("schedule"));
    } else if (arm.solver == SolverKind::weak_mvi_speg) {
        arm.schedule.kind = ScheduleKind::weak_mvi;
    } else {
        throw ConfigError(o.at_path("schedule"), "required field missing");
    }
    arm.batch = o.uint("batch", 1);
    arm.force = o.boolean("force", false);

    if (arm.batch < 1) throw ConfigError(o.at_path("batch"), "must be at least 1");
    if (arm.batch != 1 && arm.solver != SolverKind::weak_mvi_speg) {
        throw ConfigError(o.at_path("batch"), "only weak_mvi_speg averages independent draws; use a minibatch sampler");
    }
    if (arm.solver == SolverKind::peg && arm.sampler.kind != SamplerChoice::full_batch) {
        throw ConfigError(o.at_path("sampler"), "peg is deterministic and uses the full batch");
    }
    if (arm.solver == SolverKind::sog) {
        const auto k = arm.schedule.kind;
        if (k != ScheduleKind::constant && k != ScheduleKind::constant_targeted && k != ScheduleKind::fixed &&
            k != ScheduleKind::weak_mvi) {
            throw ConfigError(o.at_path("schedule"), "sog requires a constant schedule");
        }
    }
    if (arm.solver == SolverKind::weak_mvi_speg && arm.schedule.kind != ScheduleKind::weak_mvi) {
        throw ConfigError(o.at_path("schedule"), "weak_mvi_speg requires the weak_mvi schedule");
    }
    o.finish();
    return arm;
}

}  // namespace

RunPlan parse_config_text(const std::string& text, const std::string& source) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("", source + ": invalid JSON: " + e.what());
    }
    RunPlan plan;
    plan.source = source;
    const fs::path base_dir = source == "<string>" ? fs::current_path() : fs::path(source).parent_path();

    Obj o(root, "");
    plan.name = o.str("name", plan.name);
    plan.problem = parse_problem(Obj(o.raw("problem"), "problem"), base_dir);
    const auto n = known_n(plan.problem);

    plan.iterations = o.uint("iterations");
    if (plan.iterations < 1) throw ConfigError("iterations", "must be at least 1");

    if (o.has("seeds")) {
        const json& s = o.raw("seeds");
        plan.seeds.clear();
        if (s.is_number_integer()) {
            const long long c = s.get<long long>();
            if (c < 1) throw ConfigError("seeds", "seed count must be positive");
            for (long long i = 0; i < c; ++i) plan.seeds.push_back(static_cast<std::uint64_t>(i));
        } else if (s.is_array() && !s.empty()) {
            for (std::size_t i = 0; i < s.size(); ++i) {
                if (!s[i].is_number_integer() || s[i].get<long long>() < 0) {
                    throw ConfigError("seeds[" + std::to_string(i) + "]", "expected a nonnegative integer");
                }
                plan.seeds.push_back(s[i].get<std::uint64_t>());
            }
        } else {
            throw ConfigError("seeds", "expected a positive count or a non-empty array of integers");
        }
    }
    plan.output_dir = o.str("output_dir", plan.output_dir);
    plan.record_every = o.uint("record_every", plan.record_every);
    if (o.has("init_mode")) {
        plan.init_mode = pick<InitMode>(o.str("init_mode"),
                                        {{"zero_cache", InitMode::zero_cache}, {"warm_up", InitMode::warm_up}},
                                        "init_mode");
    }
    if (o.has("x0")) {
        Obj x(o.raw("x0"), "x0");
        const std::string kind = x.str("kind");
        plan.x0.kind = pick<X0Kind>(kind,
                                    {{"normal", X0Kind::normal},
                                     {"zeros", X0Kind::zeros},
                                     {"explicit", X0Kind::explicit_values}},
                                    "x0.kind");
        if (plan.x0.kind == X0Kind::normal) {
            plan.x0.scale = x.num("scale", plan.x0.scale);
            plan.x0.seed = x.uint("seed", plan.x0.seed);
        } else if (plan.x0.kind == X0Kind::explicit_values) {
            plan.x0.values = x.numbers("values");
        }
        x.finish();
    }

    const bool single = o.has("solver") || o.has("sampler") || o.has("schedule");
    if (single && o.has("arms")) {
        throw ConfigError("arms", "give either 'arms' or top-level solver/sampler/schedule, not both");
    }
    if (single) {
        json arm = json::object();
        for (const char* key : {"solver", "sampler", "schedule", "batch", "force", "label"}) {
            if (o.has(key)) arm[key] = o.raw(key);
        }
        plan.arms.push_back(parse_arm(Obj(arm, ""), n, 0));
    } else {
        const json& arms = o.raw("arms");
        if (!arms.is_array() || arms.empty()) throw ConfigError("arms", "expected a non-empty array");
        for (std::size_t i = 0; i < arms.size(); ++i) {
            plan.arms.push_back(parse_arm(Obj(arms[i], "arms[" + std::to_string(i) + "]"), n, i));
        }
    }
    std::set<std::string> labels;
    for (std::size_t i = 0; i < plan.arms.size(); ++i) {
        const auto& label = plan.arms[i].label;
        if (label.empty() || label.find_first_of("/\\") != std::string::npos || label == "." || label == "..") {
            throw ConfigError("arms[" + std::to_string(i) + "].label", "must be a non-empty plain name");
        }
        if (!labels.insert(label).second) {
            throw ConfigError("arms[" + std::to_string(i) + "].label", "duplicate label '" + label + "'");
        }
    }
    o.finish();
    return plan;
}

RunPlan parse_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("", "cannot open config '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str(), path);
}

FiniteSumProblem build_problem(const ProblemConfig& pc) {
    switch (pc.family) {
        case ProblemFamily::quadratic_game: return generate_quadratic_game(pc.quadratic);
        case ProblemFamily::weak_mvi: return generate_weak_mvi_problem(pc.weak_mvi);
        case ProblemFamily::diagonal_game: return generate_diagonal_game(pc.delta);
        case ProblemFamily::regression: return regression_counterexample(pc.a1, pc.b1, pc.a2, pc.b2).problem;
        case ProblemFamily::file: {
            FiniteSumProblem p = load_problem(pc.path);
            if (!p.constants()) {
                CertifyOptions co;
                co.want_mu = p.has_solution();
                p = p.with_constants(certify_constants(p, co));
            }
            return p;
        }
    }
    throw Error("unknown problem family");
}

Vector make_x0(const RunPlan& plan, const FiniteSumProblem& problem) {
    const auto d = static_cast<Eigen::Index>(problem.dim());
    switch (plan.x0.kind) {
        case X0Kind::zeros: return Vector::Zero(d);
        case X0Kind::explicit_values: {
            if (plan.x0.values.size() != problem.dim()) {
                throw ConfigError("x0.values", "expected " + std::to_string(problem.dim()) + " values, got " +
                                                   std::to_string(plan.x0.values.size()));
            }
            return Eigen::Map<const Vector>(plan.x0.values.data(), d);
        }
        case X0Kind::normal: {
            Rng rng(plan.x0.seed, 0);
            Vector x(d);
            for (Eigen::Index j = 0; j < d; ++j) x(j) = plan.x0.scale * rng.normal();
            return x;
        }
    }
    return Vector::Zero(d);
}

namespace {

double require_mu(const FiniteSumProblem& problem, const std::string& path) {
    const auto& c = problem.constants();
    if (!c || !c->mu || !(*c->mu > 0.0)) {
        throw ConfigError(path, "schedule needs a positive mu; problem '" + problem.id() +
                                    "' is not certified quasi-strongly monotone");
    }
    return *c->mu;
}

SamplerSpec make_sampler(const FiniteSumProblem& problem, const SamplerConfig& sc, const std::string& path) {
    const std::size_t n = problem.n();
    try {
        switch (sc.kind) {
            case SamplerChoice::minibatch: return SamplerSpec::minibatch(n, sc.tau);
            case SamplerChoice::uniform: return SamplerSpec::uniform_single(n);
            case SamplerChoice::importance: {
                if (!problem.constants()) throw Error("importance sampling needs L_i");
                return SamplerSpec::single_element(importance_probabilities(problem.constants()->L_i));
            }
            case SamplerChoice::single_element:
                if (sc.probs.size() != n) throw Error("expected " + std::to_string(n) + " probabilities");
                return SamplerSpec::single_element(sc.probs);
            case SamplerChoice::full_batch: return SamplerSpec::full_batch(n);
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(path, e.what());
    }
    return SamplerSpec::full_batch(n);
}

}  // namespace

ResolvedArm resolve_arm(const FiniteSumProblem& problem, const ArmConfig& arm, const RunPlan& plan) {
    std::size_t index = 0;
    for (std::size_t i = 0; i < plan.arms.size(); ++i) {
        if (plan.arms[i].label == arm.label) index = i;
    }
    const std::string base = "arms[" + std::to_string(index) + "]";
    ResolvedArm r;
    r.label = arm.label;
    r.solver = arm.solver;
    r.sampler = make_sampler(problem, arm.sampler, base + ".sampler");

    const auto& c = problem.constants();
    if (problem.has_solution() && c) {
        r.noise = noise_constants_for(problem, r.sampler);
        if (arm.solver == SolverKind::weak_mvi_speg) {
            r.noise.delta /= static_cast<double>(arm.batch);
            r.noise.sigma_star_sq /= static_cast<double>(arm.batch);
        }
    }
    const std::string spath = base + ".schedule";
    const ScheduleConfig& s = arm.schedule;
    auto need_L = [&]() {
        if (!c) throw ConfigError(spath, "schedule needs problem constants");
        return c->L;
    };
    try {
        switch (s.kind) {
            case ScheduleKind::constant:
                r.plan = StepSizePlan::constant(need_L(), require_mu(problem, spath), r.noise.delta);
                break;
            case ScheduleKind::constant_targeted:
                r.plan = StepSizePlan::constant_targeted(need_L(), require_mu(problem, spath), r.noise.delta, *s.eps,
                                                         r.noise.sigma_star_sq);
                break;
            case ScheduleKind::switching:
                r.plan = StepSizePlan::switching(need_L(), require_mu(problem, spath), r.noise.delta);
                break;
            case ScheduleKind::horizon_aware:
                r.plan = StepSizePlan::horizon_aware(s.horizon.value_or(plan.iterations), need_L(),
                                                     require_mu(problem, spath), r.noise.delta);
                break;
            case ScheduleKind::custom:
                r.plan = StepSizePlan::custom(need_L(), require_mu(problem, spath), r.noise.delta, s.switch_at);
                break;
            case ScheduleKind::hsieh: {
                const double L = need_L();
                const double mu = require_mu(problem, spath);
                const double g0 = s.gamma0.value_or(1.01 / mu);
                const double b = s.b.value_or(4.0 * L * g0);
                r.plan = StepSizePlan::hsieh(g0, b, L, mu);
                break;
            }
            case ScheduleKind::weak_mvi: {
                double g = 0.0, w = 0.0;
                if (s.gamma) {
                    g = *s.gamma;
                    w = *s.omega;
                } else {
                    if (!c || !c->rho) throw ConfigError(spath, "weak_mvi schedule needs rho or explicit steps");
                    const StepPair p = weak_mvi_steps(c->L, *c->rho);
                    g = p.gamma;
                    w = p.omega;
                }
                r.plan = StepSizePlan::weak_mvi(g, w);
                r.weak.batch = arm.batch;
                r.weak.gamma = g;
                r.weak.omega = w;
                r.weak.force = arm.force;
                r.weak.base = r.sampler;
                break;
            }
            case ScheduleKind::fixed: r.plan = StepSizePlan::fixed(*s.omega); break;
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(spath, e.what());
    }
    return r;
}

Trace run_arm(const FiniteSumProblem& problem, const ResolvedArm& arm, const Vector& x0, const SolverConfig& cfg) {
    const Point p(x0);
    switch (arm.solver) {
        case SolverKind::speg: return speg_run(problem, arm.sampler, arm.plan, p, cfg);
        case SolverKind::sog: return sog_run(problem, arm.sampler, arm.plan, p, cfg);
        case SolverKind::peg: return peg_run(problem, arm.plan, p, cfg);
        case SolverKind::weak_mvi_speg: return weak_mvi_speg_run(problem, arm.weak, p, cfg);
    }
    throw Error("unknown solver");
}

namespace {

json summary_json(const Trace& t, std::uint64_t seed) {
    json j;
    j["seed"] = seed;
    j["diverged"] = t.summary.diverged;
    j["iterations_completed"] = t.summary.iterations_completed;
    auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    j["initial_sq_dist"] = num(t.summary.initial_sq_dist);
    j["initial_op_norm_sq"] = num(t.summary.initial_op_norm_sq);
    j["final_sq_dist"] = num(t.summary.final_sq_dist);
    j["final_r_metric"] = num(t.summary.final_r_metric);
    j["final_op_norm_sq"] = num(t.summary.final_op_norm_sq);
    j["min_op_norm_sq"] = num(t.summary.min_op_norm_sq);
    const double re = t.summary.final_sq_dist / t.summary.initial_sq_dist;
    const double ro = t.summary.final_op_norm_sq / t.summary.initial_op_norm_sq;
    j["final_rel_err"] = num(re);
    j["final_rel_opnorm"] = num(ro);
    j["oracle_calls"] = t.summary.oracle_calls;
    j["estimator_calls"] = t.summary.estimator_calls;
    j["wall_seconds"] = t.summary.wall_seconds;
    return j;
}

json constants_json(const FiniteSumProblem& problem) {
    json j;
    j["id"] = problem.id();
    j["n"] = problem.n();
    j["d"] = problem.dim();
    if (const auto& c = problem.constants()) {
        j["L"] = c->L;
        j["L_i_min"] = *std::min_element(c->L_i.begin(), c->L_i.end());
        j["L_i_max"] = *std::max_element(c->L_i.begin(), c->L_i.end());
        j["mu"] = c->mu ? json(*c->mu) : json(nullptr);
        j["rho"] = c->rho ? json(*c->rho) : json(nullptr);
        j["quasi_strongly_monotone"] = c->quasi_strongly_monotone;
        j["provenance"] = {{"L", to_string(c->L_provenance)},
                           {"L_i", to_string(c->L_i_provenance)},
                           {"mu", to_string(c->mu_provenance)},
                           {"rho", to_string(c->rho_provenance)}};
    }
    return j;
}

std::string output_dir_for(const RunPlan& plan, const ExecOptions& opt) {
    if (opt.out_dir) return *opt.out_dir;
    if (const char* env = std::getenv("VIBENCH_OUT"); env && *env) return env;
    fs::path p = plan.output_dir;
    return p.string();
}

}  // namespace

ExecResult execute(const RunPlan& plan, const ExecOptions& opt) {
    const FiniteSumProblem problem = build_problem(plan.problem);
    const Vector x0 = make_x0(plan, problem);

    ExecResult result;
    result.output_dir = output_dir_for(plan, opt);
    for (const auto& arm : plan.arms) {
        ArmResult ar;
        ar.arm = resolve_arm(problem, arm, plan);
        ar.seeds.resize(plan.seeds.size());
        result.arms.push_back(std::move(ar));
    }
    if (opt.write_files) {
        for (const auto& ar : result.arms) fs::create_directories(fs::path(result.output_dir) / ar.arm.label);
    }

    struct Task {
        std::size_t arm;
        std::size_t seed;
    };
    std::vector<Task> tasks;
    for (std::size_t a = 0; a < result.arms.size(); ++a)
        for (std::size_t s = 0; s < plan.seeds.size(); ++s) tasks.push_back({a, s});

    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(tasks.size());
    auto worker = [&]() {
        for (;;) {
            const std::size_t t = next.fetch_add(1);
            if (t >= tasks.size()) return;
            try {
                auto& ar = result.arms[tasks[t].arm];
                const std::uint64_t seed = plan.seeds[tasks[t].seed] + opt.seed_offset;
                SolverConfig cfg;
                cfg.iterations = plan.iterations;
                cfg.seed = seed;
                cfg.record_every = plan.record_every;
                cfg.init_mode = plan.init_mode;
                SeedResult sr;
                sr.seed = seed;
                sr.trace = run_arm(problem, ar.arm, x0, cfg);
                if (opt.write_files) {
                    write_trace_csv((fs::path(result.output_dir) / ar.arm.label / ("seed_" + std::to_string(seed) + ".csv")).string(),
                                    sr.trace);
                }
                ar.seeds[tasks[t].seed] = std::move(sr);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        }
    };
    const unsigned jobs = std::max(1u, opt.jobs);
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    bool any_completed = false;
    json summary;
    summary["name"] = plan.name;
    summary["config"] = plan.source;
    summary["problem"] = constants_json(problem);
    summary["iterations"] = plan.iterations;
    summary["init_mode"] = to_string(plan.init_mode);
    summary["seed_offset"] = opt.seed_offset;
    summary["arms"] = json::array();

    std::vector<Series> rel_err_series, rel_op_series;
    for (auto& ar : result.arms) {
        std::vector<std::vector<CsvRow>> rows;
        for (const auto& sr : ar.seeds) {
            rows.push_back(to_rows(sr.trace));
            any_completed = any_completed || !sr.trace.summary.diverged;
        }
        ar.aggregate = aggregate(rows);

        json ja;
        ja["label"] = ar.arm.label;
        ja["solver"] = to_string(ar.arm.solver);
        ja["sampler"] = ar.arm.sampler.describe();
        ja["schedule"] = ar.arm.plan.describe();
        ja["delta"] = ar.arm.noise.delta;
        ja["sigma_star_sq"] = ar.arm.noise.sigma_star_sq;
        const std::uint64_t per_iter =
            ar.arm.solver == SolverKind::weak_mvi_speg ? ar.arm.weak.batch * ar.arm.sampler.tau() : ar.arm.sampler.tau();
        ja["expected_oracle_calls"] =
            plan.iterations * per_iter + (plan.init_mode == InitMode::warm_up ? per_iter : 0);
        ja["seeds"] = json::array();
        std::size_t diverged = 0;
        for (const auto& sr : ar.seeds) {
            ja["seeds"].push_back(summary_json(sr.trace, sr.seed));
            diverged += sr.trace.summary.diverged ? 1 : 0;
        }
        ja["diverged_seeds"] = diverged;
        if (!ar.seeds.empty()) ja["note"] = ar.seeds.front().trace.echo.note;
        summary["arms"].push_back(ja);

        Series se{ar.arm.label, {}, {}}, so{ar.arm.label, {}, {}};
        for (const auto& row : ar.aggregate) {
            se.x.push_back(static_cast<double>(row.k));
            se.y.push_back(row.rel_err.median);
            so.x.push_back(static_cast<double>(row.k));
            so.y.push_back(row.rel_opnorm.median);
        }
        rel_err_series.push_back(std::move(se));
        rel_op_series.push_back(std::move(so));

        if (opt.write_files) {
            write_text_file((fs::path(result.output_dir) / ar.arm.label / "aggregate.csv").string(),
                            aggregate_csv(ar.aggregate));
        }
    }
    result.exit_code = any_completed ? kExitOk : kExitAllDiverged;
    summary["exit_code"] = result.exit_code;

    if (opt.write_files) {
        const fs::path out = result.output_dir;
        write_text_file((out / "summary.json").string(), summary.dump(2) + "\n");
        if (problem.has_solution()) {
            write_text_file((out / "rel_err.svg").string(),
                            render_svg(plan.name + ": relative error (seed median)", "||x_k - x*||^2 / ||x_0 - x*||^2",
                                       rel_err_series));
        }
        write_text_file((out / "rel_opnorm.svg").string(),
                        render_svg(plan.name + ": relative operator norm (seed median)",
                                   "||F(x_hat_k)||^2 / ||F(x_0)||^2", rel_op_series));
    }
    return result;
}

std::string constants_report(const RunPlan& plan) {
    const FiniteSumProblem problem = build_problem(plan.problem);
    const Vector x0 = make_x0(plan, problem);
    json j;
    j["name"] = plan.name;
    j["problem"] = constants_json(problem);
    j["iterations"] = plan.iterations;
    if (problem.has_solution()) j["r0_sq"] = (x0 - problem.solution()).squaredNorm();
    j["arms"] = json::array();
    const auto& c = problem.constants();
    for (const auto& arm : plan.arms) {
        const ResolvedArm r = resolve_arm(problem, arm, plan);
        json a;
        a["label"] = r.label;
        a["solver"] = to_string(r.solver);
        a["sampler"] = r.sampler.describe();
        a["schedule"] = r.plan.describe();
        a["delta"] = r.noise.delta;
        a["sigma_star_sq"] = r.noise.sigma_star_sq;
        a["noise_provenance"] = to_string(r.noise.provenance);
        if (c && c->mu && *c->mu > 0.0) {
            const double mu = *c->mu;
            a["omega_bar"] = switching_omega_bar(c->L, mu, r.noise.delta);
            a["k_star"] = switching_kstar(c->L, mu, r.noise.delta);
            a["horizon_k0"] = (plan.iterations + 1) / 2;
            a["neighborhood_24_omega_sigma_over_mu"] =
                24.0 * switching_omega_bar(c->L, mu, r.noise.delta) * r.noise.sigma_star_sq / mu;
        }
        if (c && c->rho) {
            json w;
            const double rho = *c->rho;
            if (rho < 1.0 / (2.0 * c->L)) {
                const StepPair sp = weak_mvi_steps(c->L, rho);
                w["suggested_gamma"] = sp.gamma;
                w["suggested_omega"] = sp.omega;
            } else {
                w["suggested"] = "rho >= 1/(2L): weak-MVI regime out of range";
            }
            const StepPair used = r.plan.at(0);
            w["gamma"] = used.gamma;
            w["omega"] = used.omega;
            w["admissible"] = weak_mvi_admissible(c->L, rho, used.gamma, used.omega);
            if (problem.has_solution() && plan.iterations >= 2 && c->L * used.gamma < 1.0) {
                const NoiseConstants single = noise_constants_for(problem, r.sampler);
                const double r0 = (x0 - problem.solution()).squaredNorm();
                if (r0 > 0.0) {
                    w["prescribed_batch"] = weak_mvi_batchsize(plan.iterations, single.delta, single.sigma_star_sq,
                                                               c->L, used.gamma, used.omega, r0);
                }
            }
            a["weak_mvi"] = w;
        }
        j["arms"].push_back(a);
    }
    return j.dump(2);
}

std::vector<VerifyLine> verify_problem(const FiniteSumProblem& problem, std::uint64_t seed) {
    std::vector<VerifyLine> out;
    auto add = [&](std::string name, bool pass, const std::string& detail) {
        out.push_back({std::move(name), pass, detail});
    };
    auto fmt = [](double v) { return format_double(v); };

    Rng rng(seed, 7);
    const Vector center = problem.has_solution() ? problem.solution() : Vector::Zero(static_cast<Eigen::Index>(problem.dim()));
    const auto points = sample_points(center, 1000, rng, 1.0);

    if (problem.has_solution()) {
        const double res = evaluate_full(problem, problem.solution()).norm();
        add("solution_residual", res <= 1e-9, "||F(x*)|| = " + fmt(res));
    } else {
        add("solution_residual", true, "no known solution; skipped");
    }

    const auto& stored = problem.constants();
    if (!stored) {
        add("constants_present", false, "problem carries no constants");
        return out;
    }
    add("constants_present", true, "");

    CertifyOptions co;
    co.seed = seed;
    co.want_mu = problem.has_solution();
    co.want_rho = problem.has_solution() && stored->rho.has_value();
    const ProblemConstants cert = certify_constants(problem, co);

    auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); };
    if (problem.is_affine()) {
        double worst = 0.0;
        for (std::size_t i = 0; i < problem.n(); ++i) worst = std::max(worst, rel(stored->L_i[i], cert.L_i[i]));
        add("L_i_recertified", worst <= 1e-8, "max relative gap " + fmt(worst));
        const double gl = rel(stored->L, cert.L);
        add("L_recertified", gl <= 1e-8, "stored " + fmt(stored->L) + ", certified " + fmt(cert.L));
    }
    {
        double mean_li = 0.0;
        for (double l : stored->L_i) mean_li += l;
        mean_li /= static_cast<double>(stored->L_i.size());
        add("L_le_mean_L_i", stored->L <= mean_li + 1e-9, "L " + fmt(stored->L) + ", mean L_i " + fmt(mean_li));
    }
    if (stored->mu) {
        add("mu_le_L", *stored->mu <= stored->L + 1e-9, "mu " + fmt(*stored->mu));
        if (problem.has_solution()) {
            const auto r = check_quasi_strong(problem, *stored->mu, points);
            add("quasi_strong_monotonicity", r.pass, "worst margin " + fmt(r.worst_margin));
            if (cert.mu) {
                add("mu_recertified", *stored->mu <= *cert.mu + 1e-8 * std::max(1.0, *cert.mu),
                    "stored " + fmt(*stored->mu) + ", certified " + fmt(*cert.mu));
            }
        }
    }
    if (stored->rho && problem.has_solution()) {
        const auto r = check_weak_mvi(problem, *stored->rho, points);
        add("weak_minty", r.pass, "worst margin " + fmt(r.worst_margin));
        if (cert.rho) {
            add("rho_recertified", *cert.rho <= *stored->rho + 1e-9,
                "sampled " + fmt(*cert.rho) + " <= stored " + fmt(*stored->rho));
        }
    }
    {
        // Lipschitz spot check on sampled pairs.
        double worst = -INFINITY;
        Vector fx, fy;
        for (std::size_t k = 0; k + 1 < points.size(); k += 2) {
            const double dxy = (points[k] - points[k + 1]).norm();
            for (std::size_t i = 0; i < problem.n(); ++i) {
                problem.component(i).apply(points[k], fx);
                problem.component(i).apply(points[k + 1], fy);
                worst = std::max(worst, (fx - fy).norm() - (stored->L_i[i] + 1e-9) * dxy);
            }
        }
        add("component_lipschitz", worst <= 1e-9, "worst excess " + fmt(worst));
    }
    if (problem.has_solution() && problem.n() <= kMaxEnumerationSize) {
        const std::vector<SamplerSpec> specs = {SamplerSpec::uniform_single(problem.n()),
                                                SamplerSpec::minibatch(problem.n(), std::max<std::size_t>(1, problem.n() / 2))};
        for (const auto& spec : specs) {
            const NoiseConstants nc = noise_constants_for(problem, spec);
            const double en = enumerate_sigma_star(problem, spec);
            const double gap = std::abs(nc.sigma_star_sq - en) / std::max(1e-300, std::max(std::abs(en), 1e-12));
            add("sigma_star[" + spec.describe() + "]", gap <= 1e-10 || std::abs(nc.sigma_star_sq - en) <= 1e-14,
                "closed form " + fmt(nc.sigma_star_sq) + ", enumerated " + fmt(en));
            std::vector<Vector> few(points.begin(), points.begin() + 100);
            const auto reports = check_hierarchy(problem, spec, few);
            for (const auto& r : reports) {
                if (r.name == "expected_residual" || r.name == "variance_bound") {
                    add(r.name + "[" + spec.describe() + "]", r.pass, "worst margin " + fmt(r.worst_margin));
                }
            }
        }
    }
    return out;
}

}  // namespace vibench::bench
