#include "vibench/oracle.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace vibench {

double pairwise_sum(const std::vector<double>& values) {
    // Recursive halving; blocks of 8 are summed directly.
    struct Rec {
        static double sum(const double* p, std::size_t n) {
            if (n <= 8) {
                double s = 0.0;
                for (std::size_t i = 0; i < n; ++i) s += p[i];
                return s;
            }
            const std::size_t h = n / 2;
            return sum(p, h) + sum(p + h, n - h);
        }
    };
    return Rec::sum(values.data(), values.size());
}

namespace {

void guard(std::size_t n) {
    if (n > kMaxEnumerationSize) {
        std::ostringstream os;
        os << "oracle: exact enumeration refused for n=" << n << " > " << kMaxEnumerationSize;
        throw Error(os.str());
    }
}

double binomial(std::size_t n, std::size_t k) {
    double r = 1.0;
    for (std::size_t i = 1; i <= k; ++i) {
        r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
    }
    return std::round(r);
}

std::vector<Vector> component_values(const FiniteSumProblem& problem, const Vector& x) {
    std::vector<Vector> out(problem.n(), Vector(static_cast<Eigen::Index>(problem.dim())));
    for (std::size_t i = 0; i < problem.n(); ++i) problem.component(i).apply(x, out[i]);
    return out;
}

Vector mean_of(const std::vector<Vector>& a) {
    Vector m = Vector::Zero(a.front().size());
    for (const auto& v : a) m += v;
    return m / static_cast<double>(a.size());
}

// E || (1/n) sum_i v_i a_i - c ||^2 over enumerated outcomes.
double moment(const std::vector<Outcome>& outcomes, const std::vector<Vector>& a, const Vector& c) {
    const double n = static_cast<double>(a.size());
    std::vector<double> terms;
    terms.reserve(outcomes.size());
    Vector g(c.size());
    for (const auto& o : outcomes) {
        g.setZero();
        for (std::size_t k = 0; k < o.v.support.size(); ++k) {
            g += o.v.weights[k] * a[o.v.support[k]];
        }
        g /= n;
        g -= c;
        terms.push_back(o.probability * g.squaredNorm());
    }
    return pairwise_sum(terms);
}

std::vector<Outcome> outcomes_for(const FiniteSumProblem& problem, const SamplerSpec& spec) {
    if (spec.n() != problem.n()) {
        throw Error("oracle: sampler n does not match problem n");
    }
    return enumerate_outcomes(spec);
}

Matrix second_moment_matrix(const std::vector<Outcome>& outcomes, std::size_t n) {
    const auto nn = static_cast<Eigen::Index>(n);
    Matrix m = Matrix::Zero(nn, nn);
    for (const auto& o : outcomes) {
        for (std::size_t a = 0; a < o.v.support.size(); ++a) {
            for (std::size_t b = 0; b < o.v.support.size(); ++b) {
                m(static_cast<Eigen::Index>(o.v.support[a]), static_cast<Eigen::Index>(o.v.support[b])) +=
                    o.probability * o.v.weights[a] * o.v.weights[b];
            }
        }
    }
    return m;
}

double sum_sq(const std::vector<double>& L) {
    double s = 0.0;
    for (double l : L) s += l * l;
    return s;
}

}  // namespace

std::vector<Outcome> enumerate_outcomes(const SamplerSpec& spec) {
    const std::size_t n = spec.n();
    guard(n);
    std::vector<Outcome> out;
    switch (spec.kind()) {
        case SamplerKind::full_batch: {
            Outcome o;
            o.probability = 1.0;
            o.v.support.resize(n);
            std::iota(o.v.support.begin(), o.v.support.end(), std::size_t{0});
            o.v.weights.assign(n, 1.0);
            out.push_back(std::move(o));
            break;
        }
        case SamplerKind::single_element: {
            for (std::size_t i = 0; i < n; ++i) {
                Outcome o;
                o.probability = spec.probs()[i];
                o.v.support = {i};
                o.v.weights = {1.0 / spec.probs()[i]};
                out.push_back(std::move(o));
            }
            break;
        }
        case SamplerKind::minibatch: {
            const std::size_t tau = spec.tau();
            const double p = 1.0 / binomial(n, tau);
            const double w = static_cast<double>(n) / static_cast<double>(tau);
            std::vector<std::size_t> idx(tau);
            std::iota(idx.begin(), idx.end(), std::size_t{0});
            for (;;) {
                Outcome o;
                o.probability = p;
                o.v.support = idx;
                o.v.weights.assign(tau, w);
                out.push_back(std::move(o));
                // next combination in lexicographic order
                std::size_t i = tau;
                while (i > 0 && idx[i - 1] == n - tau + (i - 1)) --i;
                if (i == 0) break;
                ++idx[i - 1];
                for (std::size_t j = i; j < tau; ++j) idx[j] = idx[j - 1] + 1;
            }
            break;
        }
    }
    return out;
}

double enumerate_residual(const FiniteSumProblem& problem, const SamplerSpec& spec, const Vector& x) {
    auto outcomes = outcomes_for(problem, spec);
    auto fx = component_values(problem, x);
    auto fs = component_values(problem, problem.solution());
    for (std::size_t i = 0; i < fx.size(); ++i) fx[i] -= fs[i];
    return moment(outcomes, fx, mean_of(fx));
}

double enumerate_minibatch_residual(const FiniteSumProblem& problem, std::size_t tau, const Vector& x) {
    return enumerate_residual(problem, SamplerSpec::minibatch(problem.n(), tau), x);
}

double enumerate_second_moment(const FiniteSumProblem& problem, const SamplerSpec& spec, const Vector& x) {
    auto outcomes = outcomes_for(problem, spec);
    auto fx = component_values(problem, x);
    return moment(outcomes, fx, Vector::Zero(static_cast<Eigen::Index>(problem.dim())));
}

double enumerate_variance(const FiniteSumProblem& problem, const SamplerSpec& spec, const Vector& x) {
    auto outcomes = outcomes_for(problem, spec);
    auto fx = component_values(problem, x);
    return moment(outcomes, fx, mean_of(fx));
}

double enumerate_shift_moment(const FiniteSumProblem& problem, const SamplerSpec& spec, const Vector& x) {
    auto outcomes = outcomes_for(problem, spec);
    auto fx = component_values(problem, x);
    auto fs = component_values(problem, problem.solution());
    for (std::size_t i = 0; i < fx.size(); ++i) fx[i] -= fs[i];
    return moment(outcomes, fx, Vector::Zero(static_cast<Eigen::Index>(problem.dim())));
}

double enumerate_sigma_star(const FiniteSumProblem& problem, const SamplerSpec& spec) {
    return enumerate_second_moment(problem, spec, problem.solution());
}

double sigma_star_expansion(const FiniteSumProblem& problem, const SamplerSpec& spec) {
    if (spec.n() != problem.n()) {
        throw Error("oracle: sampler n does not match problem n");
    }
    const std::size_t n = problem.n();
    guard(n);
    auto fs = component_values(problem, problem.solution());
    std::vector<double> terms;
    terms.reserve(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double pij = spec.joint_inclusion(i, j);
            terms.push_back(pij / (spec.inclusion(i) * spec.inclusion(j)) * fs[i].dot(fs[j]));
        }
    }
    const double nd = static_cast<double>(n);
    return pairwise_sum(terms) / (nd * nd);
}

double enumerate_minibatch_delta(const std::vector<double>& L_i, std::size_t tau) {
    const std::size_t n = L_i.size();
    guard(n);
    auto outcomes = enumerate_outcomes(SamplerSpec::minibatch(n, tau));
    Matrix var = second_moment_matrix(outcomes, n);
    var.array() -= 1.0;  // E[v_i] = 1
    const double lam = Eigen::SelfAdjointEigenSolver<Matrix>(var, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
    const double nd = static_cast<double>(n);
    return 2.0 * std::max(lam, 0.0) * sum_sq(L_i) / (nd * nd);
}

double enumerate_single_element_delta(const std::vector<double>& L_i, const std::vector<double>& probs) {
    const std::size_t n = L_i.size();
    if (probs.size() != n) {
        throw Error("oracle: L_i and probability lengths differ");
    }
    guard(n);
    auto outcomes = enumerate_outcomes(SamplerSpec::single_element(probs));
    Matrix m = second_moment_matrix(outcomes, n);
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            if (i != j && m(i, j) != 0.0) {
                throw Error("oracle: single-element sampling produced a cross moment");
            }
    std::vector<double> terms(n);
    for (std::size_t i = 0; i < n; ++i) {
        terms[i] = m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) * L_i[i] * L_i[i];
    }
    const double nd = static_cast<double>(n);
    return 2.0 * pairwise_sum(terms) / (nd * nd);
}

// ---------------------------------------------------------------------------

namespace {

ConditionReport margin_report(std::string name, const std::vector<double>& margins,
                              const std::vector<Vector>& points, double tol) {
    ConditionReport r;
    r.name = std::move(name);
    if (margins.empty()) {
        r.detail = "no points";
        return r;
    }
    auto it = std::min_element(margins.begin(), margins.end());
    r.witness_index = static_cast<std::size_t>(it - margins.begin());
    r.worst_margin = *it;
    r.witness = points[r.witness_index];
    r.pass = r.worst_margin >= -tol;
    return r;
}

// Least-squares slope of log(value) against log(dist).
double loglog_slope(const std::vector<double>& dist, const std::vector<double>& val, double* spread) {
    std::vector<double> lx, ly;
    double dmin = INFINITY, dmax = 0.0;
    for (std::size_t i = 0; i < dist.size(); ++i) {
        if (dist[i] > 0.0 && val[i] > 0.0) {
            lx.push_back(std::log(dist[i]));
            ly.push_back(std::log(val[i]));
            dmin = std::min(dmin, dist[i]);
            dmax = std::max(dmax, dist[i]);
        }
    }
    *spread = lx.size() >= 2 ? dmax / dmin : 1.0;
    if (lx.size() < 2) return 0.0;
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / static_cast<double>(lx.size());
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / static_cast<double>(ly.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    return sxx > 0.0 ? sxy / sxx : 0.0;
}

// Sup-type condition E[...] <= C: the constant is the sampled max, and it is
// reported unbounded when it keeps growing with distance from x*.
ConditionReport sup_condition(std::string name, const std::vector<double>& values,
                              const std::vector<double>& dist, const std::vector<Vector>& points,
                              const HierarchyOptions& opt) {
    ConditionReport r;
    r.name = std::move(name);
    auto it = std::max_element(values.begin(), values.end());
    r.witness_index = static_cast<std::size_t>(it - values.begin());
    r.witness = points[r.witness_index];
    r.constant = *it;
    double spread = 1.0;
    r.growth_exponent = loglog_slope(dist, values, &spread);
    r.bounded = !(spread >= 10.0 && r.growth_exponent > opt.growth_slope_threshold);
    r.pass = r.bounded;
    r.worst_margin = 0.0;
    std::ostringstream os;
    if (r.bounded) {
        os << "holds on sample with constant " << r.constant;
    } else {
        os << "unbounded: grows like ||x - x*||^" << r.growth_exponent;
    }
    r.detail = os.str();
    return r;
}

}  // namespace

ConditionReport check_quasi_strong(const FiniteSumProblem& problem, double mu,
                                   const std::vector<Vector>& points, double tol) {
    const Vector& xs = problem.solution();
    std::vector<double> margins;
    margins.reserve(points.size());
    for (const auto& x : points) {
        const Vector F = mean_operator(problem, x);
        const Vector dx = x - xs;
        margins.push_back(F.dot(dx) - mu * dx.squaredNorm());
    }
    ConditionReport r = margin_report("quasi_strong_monotonicity", margins, points, tol);
    r.constant = mu;
    return r;
}

ConditionReport check_weak_mvi(const FiniteSumProblem& problem, double rho,
                               const std::vector<Vector>& points, double tol) {
    const Vector& xs = problem.solution();
    std::vector<double> margins;
    margins.reserve(points.size());
    for (const auto& x : points) {
        const Vector F = mean_operator(problem, x);
        margins.push_back(F.dot(x - xs) + rho * F.squaredNorm());
    }
    ConditionReport r = margin_report("weak_minty", margins, points, tol);
    r.constant = rho;
    return r;
}

std::vector<ConditionReport> check_hierarchy(const FiniteSumProblem& problem, const SamplerSpec& spec,
                                             const std::vector<Vector>& points,
                                             const HierarchyOptions& opt) {
    const Vector& xs = problem.solution();
    const std::size_t m = points.size();
    if (m == 0) {
        return {};
    }
    const NoiseConstants nc = noise_constants_for(problem, spec);
    const double L = problem.constants()->L;

    std::vector<double> dist(m), dist2(m), second(m), var(m), shift(m), resid(m), fnorm2(m), inner(m);
    for (std::size_t k = 0; k < m; ++k) {
        const Vector& x = points[k];
        const Vector F = evaluate_full(problem, x);
        dist2[k] = (x - xs).squaredNorm();
        dist[k] = std::sqrt(dist2[k]);
        fnorm2[k] = F.squaredNorm();
        inner[k] = F.dot(x - xs);
        second[k] = enumerate_second_moment(problem, spec, x);
        var[k] = enumerate_variance(problem, spec, x);
        shift[k] = enumerate_shift_moment(problem, spec, x);
        resid[k] = enumerate_residual(problem, spec, x);
    }

    std::vector<ConditionReport> out;

    // 1. bounded operator, 2. bounded variance
    out.push_back(sup_condition("bounded_operator", second, dist, points, opt));
    ConditionReport bv = sup_condition("bounded_variance", var, dist, points, opt);
    out.push_back(bv);

    // 3. growth with alpha = 1: beta is the sampled max of E||g||^2 - ||F||^2.
    std::vector<double> slack(m);
    for (std::size_t k = 0; k < m; ++k) slack[k] = second[k] - fnorm2[k];
    ConditionReport growth = sup_condition("growth(alpha=1)", slack, dist, points, opt);
    out.push_back(growth);

    // 4. expected cocoercivity: descriptive ratio only.
    {
        ConditionReport r;
        r.name = "expected_cocoercivity";
        double worst = 0.0;
        bool defined = true;
        for (std::size_t k = 0; k < m; ++k) {
            if (dist2[k] == 0.0) continue;
            if (inner[k] <= 0.0) {
                defined = shift[k] == 0.0 && defined;
                if (shift[k] > 0.0) {
                    r.witness_index = k;
                }
                continue;
            }
            const double ratio = shift[k] / inner[k];
            if (ratio > worst) {
                worst = ratio;
                r.witness_index = k;
            }
        }
        r.witness = points[r.witness_index];
        r.constant = worst;
        r.bounded = defined;
        r.pass = defined;
        r.detail = defined ? "sampled l_F (descriptive)" : "<F(x), x - x*> <= 0 with nonzero shift; no finite l_F";
        out.push_back(r);
    }

    // 5. expected residual with the closed-form delta
    {
        std::vector<double> margins(m);
        double dhat = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            margins[k] = 0.5 * nc.delta * dist2[k] - resid[k];
            if (dist2[k] > 0.0) dhat = std::max(dhat, 2.0 * resid[k] / dist2[k]);
        }
        ConditionReport r = margin_report("expected_residual", margins, points, opt.tol);
        r.constant = dhat;
        std::ostringstream os;
        os << "closed-form delta " << nc.delta << ", sampled tight delta " << dhat;
        r.detail = os.str();
        out.push_back(r);
    }

    // 6. variance bound with closed-form (delta, sigma*^2)
    {
        std::vector<double> margins(m);
        for (std::size_t k = 0; k < m; ++k) {
            margins[k] = nc.delta * dist2[k] + fnorm2[k] + 2.0 * nc.sigma_star_sq - second[k];
        }
        ConditionReport r = margin_report("variance_bound", margins, points, opt.tol);
        r.constant = nc.delta;
        out.push_back(r);
    }

    // Implications on this sample.
    if (bv.bounded) {
        // 2 => 3: alpha = 1, beta = sigma^2
        std::vector<double> margins(m);
        for (std::size_t k = 0; k < m; ++k) margins[k] = fnorm2[k] + bv.constant - second[k];
        ConditionReport r = margin_report("bounded_variance=>growth", margins, points, opt.tol);
        r.constant = bv.constant;
        out.push_back(r);
    }
    if (growth.bounded) {
        // 3 => 6: delta = alpha L^2, sigma*^2 = beta / 2
        std::vector<double> margins(m);
        for (std::size_t k = 0; k < m; ++k) margins[k] = L * L * dist2[k] + fnorm2[k] + growth.constant - second[k];
        ConditionReport r = margin_report("growth=>variance_bound", margins, points, opt.tol);
        out.push_back(r);
    }
    {
        // 5 => 6 with the sampled tight delta and exact sigma*^2
        const double sig = enumerate_sigma_star(problem, spec);
        const double dhat = out[4].constant;
        std::vector<double> margins(m);
        for (std::size_t k = 0; k < m; ++k) {
            margins[k] = dhat * dist2[k] + fnorm2[k] + 2.0 * sig - second[k];
        }
        ConditionReport r = margin_report("expected_residual=>variance_bound", margins, points, opt.tol);
        r.constant = dhat;
        out.push_back(r);
    }
    return out;
}

std::vector<Vector> sample_points(const Vector& center, std::size_t count, Rng& rng, double scale) {
    std::vector<Vector> pts;
    pts.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        Vector x(center.size());
        for (Eigen::Index j = 0; j < x.size(); ++j) x(j) = center(j) + scale * rng.normal();
        pts.push_back(std::move(x));
    }
    return pts;
}

}  // namespace vibench
