#include "vibench/core.hpp"
#include "vibench/rng.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

namespace vibench {

namespace {

std::string dimension_message(std::size_t expected, std::size_t actual) {
    std::ostringstream os;
    os << "dimension mismatch: expected d=" << expected << ", got d=" << actual;
    return os.str();
}

std::mutex& sink_mutex() {
    static std::mutex m;
    return m;
}

WarningSink& sink() {
    static WarningSink s = [](const std::string& msg) { std::cerr << "warning: " << msg << '\n'; };
    return s;
}

bool all_finite(const Vector& v) {
    return v.allFinite();
}

}  // namespace

DimensionError::DimensionError(std::size_t expected, std::size_t actual)
    : Error(dimension_message(expected, actual)), expected_(expected), actual_(actual) {}

void set_warning_sink(WarningSink s) {
    std::lock_guard lock(sink_mutex());
    sink() = std::move(s);
}

void warn(const std::string& message) {
    std::lock_guard lock(sink_mutex());
    if (sink()) {
        sink()(message);
    }
}

Point::Point(Vector coords) : coords_(std::move(coords)) {
    if (!all_finite(coords_)) {
        throw Error("point has non-finite coordinates");
    }
}

Point::Point(std::initializer_list<double> coords)
    : Point(Vector(Eigen::Map<const Vector>(coords.begin(), static_cast<Eigen::Index>(coords.size())))) {}

const char* to_string(Provenance p) {
    switch (p) {
        case Provenance::closed_form: return "closed_form";
        case Provenance::numerically_certified: return "numerically_certified";
        case Provenance::user_supplied: return "user_supplied";
    }
    return "unknown";
}

const char* to_string(NoiseProvenance p) {
    switch (p) {
        case NoiseProvenance::closed_form: return "closed_form";
        case NoiseProvenance::enumerated: return "enumerated";
        case NoiseProvenance::monte_carlo: return "monte_carlo";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------
// ComponentOperator

ComponentOperator ComponentOperator::affine(Matrix m, Vector b) {
    if (m.rows() != m.cols()) {
        throw Error("affine component matrix must be square");
    }
    if (b.size() != m.rows()) {
        throw DimensionError(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(b.size()));
    }
    if (!m.allFinite() || !b.allFinite()) {
        throw Error("affine component has non-finite entries");
    }
    ComponentOperator op;
    op.dim_ = static_cast<std::size_t>(m.rows());
    op.lipschitz_ = Eigen::JacobiSVD<Matrix>(m).singularValues()(0);
    op.affine_ = AffineMap{std::move(m), std::move(b)};
    return op;
}

ComponentOperator ComponentOperator::general(std::size_t dim, Fn fn, std::optional<double> lipschitz) {
    if (dim == 0) {
        throw Error("component dimension must be positive");
    }
    if (!fn) {
        throw Error("component evaluator is empty");
    }
    if (lipschitz && !(*lipschitz >= 0.0)) {
        throw Error("lipschitz bound must be nonnegative");
    }
    ComponentOperator op;
    op.dim_ = dim;
    op.fn_ = std::move(fn);
    op.lipschitz_ = lipschitz;
    return op;
}

void ComponentOperator::apply(const Vector& x, Vector& out) const {
    if (static_cast<std::size_t>(x.size()) != dim_) {
        throw DimensionError(dim_, static_cast<std::size_t>(x.size()));
    }
    if (affine_) {
        out.noalias() = affine_->matrix * x;
        out += affine_->offset;
        return;
    }
    out.resize(static_cast<Eigen::Index>(dim_));
    fn_(x, out);
    if (static_cast<std::size_t>(out.size()) != dim_) {
        throw DimensionError(dim_, static_cast<std::size_t>(out.size()));
    }
}

Vector ComponentOperator::operator()(const Vector& x) const {
    Vector out(static_cast<Eigen::Index>(dim_));
    apply(x, out);
    return out;
}

// ---------------------------------------------------------------------------
// FiniteSumProblem

struct FiniteSumProblem::Impl {
    std::vector<ComponentOperator> components;
    std::size_t dim = 0;
    std::optional<Vector> solution;
    std::optional<ProblemConstants> constants;
    Options options;
    std::optional<AffineMap> mean;
};

FiniteSumProblem::FiniteSumProblem(std::vector<ComponentOperator> components,
                                   std::optional<Point> solution,
                                   std::optional<ProblemConstants> constants,
                                   Options options) {
    if (components.empty()) {
        throw Error("problem needs at least one component");
    }
    auto impl = std::make_shared<Impl>();
    impl->dim = components.front().dim();
    for (const auto& c : components) {
        if (c.dim() != impl->dim) {
            throw DimensionError(impl->dim, c.dim());
        }
    }
    impl->components = std::move(components);
    impl->options = std::move(options);

    bool affine = std::all_of(impl->components.begin(), impl->components.end(),
                              [](const ComponentOperator& c) { return c.as_affine() != nullptr; });
    if (affine) {
        const auto d = static_cast<Eigen::Index>(impl->dim);
        AffineMap mean{Matrix::Zero(d, d), Vector::Zero(d)};
        for (const auto& c : impl->components) {
            mean.matrix += c.as_affine()->matrix;
            mean.offset += c.as_affine()->offset;
        }
        const double n = static_cast<double>(impl->components.size());
        mean.matrix /= n;
        mean.offset /= n;
        impl->mean = std::move(mean);
    }

    if (constants) {
        if (constants->L_i.size() != impl->components.size()) {
            throw Error("constants: L_i list length does not match number of components");
        }
        impl->constants = std::move(constants);
    }
    impl_ = impl;

    if (solution) {
        if (static_cast<std::size_t>(solution->size()) != impl->dim) {
            throw DimensionError(impl->dim, static_cast<std::size_t>(solution->size()));
        }
        impl->solution = solution->coords();
        const double residual = evaluate_full(*this, *impl->solution).norm();
        if (!(residual <= impl->options.solution_tolerance)) {
            std::ostringstream os;
            os << "known solution has ||F(x*)|| = " << residual << " > tolerance "
               << impl->options.solution_tolerance;
            throw Error(os.str());
        }
    }
}

std::size_t FiniteSumProblem::n() const { return impl_->components.size(); }
std::size_t FiniteSumProblem::dim() const { return impl_->dim; }

const ComponentOperator& FiniteSumProblem::component(std::size_t i) const {
    return impl_->components.at(i);
}

const std::vector<ComponentOperator>& FiniteSumProblem::components() const {
    return impl_->components;
}

bool FiniteSumProblem::has_solution() const { return impl_->solution.has_value(); }

const Vector& FiniteSumProblem::solution() const {
    if (!impl_->solution) {
        throw Error("problem '" + impl_->options.id + "' has no known solution");
    }
    return *impl_->solution;
}

const std::optional<ProblemConstants>& FiniteSumProblem::constants() const { return impl_->constants; }
const std::string& FiniteSumProblem::id() const { return impl_->options.id; }
const std::string& FiniteSumProblem::metadata() const { return impl_->options.metadata; }
bool FiniteSumProblem::is_affine() const { return impl_->mean.has_value(); }
const AffineMap* FiniteSumProblem::mean_map() const { return impl_->mean ? &*impl_->mean : nullptr; }

FiniteSumProblem FiniteSumProblem::with_constants(ProblemConstants c) const {
    if (c.L_i.size() != n()) {
        throw Error("constants: L_i list length does not match number of components");
    }
    FiniteSumProblem copy = *this;
    auto impl = std::make_shared<Impl>(*impl_);
    impl->constants = std::move(c);
    copy.impl_ = impl;
    return copy;
}

void check_dimension(const FiniteSumProblem& problem, const Vector& x) {
    if (static_cast<std::size_t>(x.size()) != problem.dim()) {
        throw DimensionError(problem.dim(), static_cast<std::size_t>(x.size()));
    }
}

Vector evaluate_full(const FiniteSumProblem& problem, const Vector& x) {
    check_dimension(problem, x);
    const auto d = static_cast<Eigen::Index>(problem.dim());
    Vector acc = Vector::Zero(d);
    Vector tmp(d);
    for (const auto& c : problem.components()) {
        c.apply(x, tmp);
        acc += tmp;
    }
    acc /= static_cast<double>(problem.n());
    return acc;
}

Vector mean_operator(const FiniteSumProblem& problem, const Vector& x) {
    if (const AffineMap* m = problem.mean_map()) {
        check_dimension(problem, x);
        Vector out = m->matrix * x;
        out += m->offset;
        return out;
    }
    return evaluate_full(problem, x);
}

// ---------------------------------------------------------------------------
// certify_constants

namespace {

struct ShardResult {
    double L_lower = 0.0;
    std::vector<double> L_i_lower;
    double mu = std::numeric_limits<double>::infinity();
    double rho = 0.0;
};

ShardResult certify_shard(const FiniteSumProblem& problem, const CertifyOptions& opt,
                          std::size_t count, std::uint64_t shard, bool spectral) {
    Rng rng(opt.seed, shard);
    const auto d = static_cast<Eigen::Index>(problem.dim());
    const std::size_t n = problem.n();
    Vector center = problem.has_solution() ? problem.solution() : Vector::Zero(d);
    ShardResult r;
    r.L_i_lower.assign(n, 0.0);
    Vector x(d), y(d), fx(d), fy(d);
    for (std::size_t s = 0; s < count; ++s) {
        for (Eigen::Index j = 0; j < d; ++j) {
            x(j) = center(j) + opt.sample_scale * rng.normal();
            y(j) = center(j) + opt.sample_scale * rng.normal();
        }
        if (!spectral) {
            const double dxy = (x - y).norm();
            if (dxy > 0.0) {
                for (std::size_t i = 0; i < n; ++i) {
                    problem.component(i).apply(x, fx);
                    problem.component(i).apply(y, fy);
                    if (!fx.allFinite() || !fy.allFinite()) {
                        throw Error("non-finite operator evaluation during certification");
                    }
                    r.L_i_lower[i] = std::max(r.L_i_lower[i], (fx - fy).norm() / dxy);
                }
                Vector Fx = evaluate_full(problem, x);
                Vector Fy = evaluate_full(problem, y);
                r.L_lower = std::max(r.L_lower, (Fx - Fy).norm() / dxy);
            }
        }
        if (problem.has_solution() && (opt.want_rho || (opt.want_mu && !spectral))) {
            Vector F = mean_operator(problem, x);
            if (!F.allFinite()) {
                throw Error("non-finite operator evaluation during certification");
            }
            const Vector diff = x - center;
            const double inner = F.dot(diff);
            const double dist2 = diff.squaredNorm();
            const double f2 = F.squaredNorm();
            if (dist2 > 0.0) {
                r.mu = std::min(r.mu, inner / dist2);
            }
            if (f2 > 0.0 && inner < 0.0) {
                r.rho = std::max(r.rho, -inner / f2);
            }
        }
    }
    return r;
}

}  // namespace

ProblemConstants certify_constants(const FiniteSumProblem& problem, const CertifyOptions& opt) {
    if ((opt.want_mu || opt.want_rho) && !problem.has_solution()) {
        throw Error("certifying mu or rho requires a known solution");
    }
    if (opt.sample_count == 0) {
        throw Error("sample_count must be positive");
    }
    ProblemConstants out;
    const bool spectral = problem.is_affine();
    const std::size_t n = problem.n();

    if (spectral) {
        out.L_i.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            out.L_i[i] = Eigen::JacobiSVD<Matrix>(problem.component(i).as_affine()->matrix).singularValues()(0);
        }
        const Matrix& M = problem.mean_map()->matrix;
        out.L = Eigen::JacobiSVD<Matrix>(M).singularValues()(0);
        out.L_provenance = Provenance::closed_form;
        out.L_i_provenance = Provenance::closed_form;
        if (opt.want_mu) {
            Matrix sym = 0.5 * (M + M.transpose());
            double lam = Eigen::SelfAdjointEigenSolver<Matrix>(sym, Eigen::EigenvaluesOnly).eigenvalues()(0);
            out.quasi_strongly_monotone = lam > opt.tol;
            out.mu = std::max(lam, 0.0);
            out.mu_provenance = Provenance::closed_form;
        }
    }

    const bool need_samples = !spectral || opt.want_rho;
    if (need_samples) {
        const unsigned threads = std::max(1u, opt.threads);
        const std::size_t per = (opt.sample_count + threads - 1) / threads;
        std::vector<ShardResult> shards(threads);
        std::vector<std::exception_ptr> errors(threads);
        auto work = [&](unsigned t) {
            try {
                const std::size_t begin = t * per;
                const std::size_t count = begin >= opt.sample_count ? 0 : std::min(per, opt.sample_count - begin);
                shards[t] = certify_shard(problem, opt, count, t, spectral);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        };
        if (threads == 1) {
            work(0);
        } else {
            std::vector<std::thread> pool;
            for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t);
            for (auto& th : pool) th.join();
        }
        for (auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
        ShardResult merged;
        merged.L_i_lower.assign(n, 0.0);
        for (const auto& s : shards) {
            merged.L_lower = std::max(merged.L_lower, s.L_lower);
            for (std::size_t i = 0; i < n && i < s.L_i_lower.size(); ++i) {
                merged.L_i_lower[i] = std::max(merged.L_i_lower[i], s.L_i_lower[i]);
            }
            merged.mu = std::min(merged.mu, s.mu);
            merged.rho = std::max(merged.rho, s.rho);
        }
        if (!spectral) {
            out.L = merged.L_lower;
            out.L_i = merged.L_i_lower;
            out.L_provenance = Provenance::numerically_certified;
            out.L_i_provenance = Provenance::numerically_certified;
            if (opt.want_mu) {
                const double m = std::isfinite(merged.mu) ? merged.mu : 0.0;
                out.quasi_strongly_monotone = m > opt.tol;
                out.mu = std::max(m, 0.0);
                out.mu_provenance = Provenance::numerically_certified;
            }
        }
        if (opt.want_rho) {
            out.rho = merged.rho;
            out.rho_provenance = Provenance::numerically_certified;
        }
    }
    return out;
}

}  // namespace vibench
