#include "vibench/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace vibench {

SamplerSpec SamplerSpec::minibatch(std::size_t n, std::size_t tau) {
    if (n == 0) {
        throw Error("sampler: n must be at least 1");
    }
    if (tau < 1 || tau > n) {
        std::ostringstream os;
        os << "sampler: minibatch size tau=" << tau << " must satisfy 1 <= tau <= n=" << n;
        throw Error(os.str());
    }
    SamplerSpec s;
    s.kind_ = SamplerKind::minibatch;
    s.n_ = n;
    s.tau_ = tau;
    return s;
}

SamplerSpec SamplerSpec::single_element(std::vector<double> probs) {
    if (probs.empty()) {
        throw Error("sampler: probability vector is empty");
    }
    double total = 0.0;
    for (double p : probs) {
        if (!(p > 0.0) || !std::isfinite(p)) {
            throw Error("sampler: single-element probabilities must be strictly positive");
        }
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-12) {
        std::ostringstream os;
        os.precision(17);
        os << "sampler: probabilities sum to " << total << ", expected 1";
        throw Error(os.str());
    }
    SamplerSpec s;
    s.kind_ = SamplerKind::single_element;
    s.n_ = probs.size();
    s.tau_ = 1;
    s.cdf_.resize(probs.size());
    std::partial_sum(probs.begin(), probs.end(), s.cdf_.begin());
    s.cdf_.back() = 1.0;
    s.probs_ = std::move(probs);
    return s;
}

SamplerSpec SamplerSpec::uniform_single(std::size_t n) {
    if (n == 0) {
        throw Error("sampler: n must be at least 1");
    }
    return single_element(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

SamplerSpec SamplerSpec::full_batch(std::size_t n) {
    if (n == 0) {
        throw Error("sampler: n must be at least 1");
    }
    SamplerSpec s;
    s.kind_ = SamplerKind::full_batch;
    s.n_ = n;
    s.tau_ = n;
    return s;
}

double SamplerSpec::inclusion(std::size_t i) const {
    switch (kind_) {
        case SamplerKind::minibatch: return static_cast<double>(tau_) / static_cast<double>(n_);
        case SamplerKind::single_element: return probs_.at(i);
        case SamplerKind::full_batch: return 1.0;
    }
    return 0.0;
}

double SamplerSpec::joint_inclusion(std::size_t i, std::size_t j) const {
    if (i == j) {
        return inclusion(i);
    }
    switch (kind_) {
        case SamplerKind::minibatch: {
            if (n_ < 2) return 0.0;
            const double n = static_cast<double>(n_);
            const double t = static_cast<double>(tau_);
            return t * (t - 1.0) / (n * (n - 1.0));
        }
        case SamplerKind::single_element: return 0.0;
        case SamplerKind::full_batch: return 1.0;
    }
    return 0.0;
}

std::string SamplerSpec::describe() const {
    std::ostringstream os;
    switch (kind_) {
        case SamplerKind::minibatch: os << "minibatch(n=" << n_ << ", tau=" << tau_ << ")"; break;
        case SamplerKind::single_element: os << "single_element(n=" << n_ << ")"; break;
        case SamplerKind::full_batch: os << "full_batch(n=" << n_ << ")"; break;
    }
    return os.str();
}

// ---------------------------------------------------------------------------

Sampler::Sampler(SamplerSpec spec) : spec_(std::move(spec)) {
    if (spec_.kind() == SamplerKind::minibatch) {
        perm_.resize(spec_.n());
        std::iota(perm_.begin(), perm_.end(), std::size_t{0});
    }
}

void Sampler::draw(Rng& rng, SamplingVector& out) {
    const std::size_t n = spec_.n();
    switch (spec_.kind()) {
        case SamplerKind::full_batch: {
            out.support.resize(n);
            std::iota(out.support.begin(), out.support.end(), std::size_t{0});
            out.weights.assign(n, 1.0);
            return;
        }
        case SamplerKind::minibatch: {
            const std::size_t tau = spec_.tau();
            for (std::size_t k = 0; k < tau; ++k) {
                const std::size_t j = k + rng.index(n - k);
                std::swap(perm_[k], perm_[j]);
            }
            out.support.assign(perm_.begin(), perm_.begin() + static_cast<std::ptrdiff_t>(tau));
            std::sort(out.support.begin(), out.support.end());
            out.weights.assign(tau, static_cast<double>(n) / static_cast<double>(tau));
            return;
        }
        case SamplerKind::single_element: {
            const auto& cdf = spec_.cdf();
            const double u = rng.uniform();
            auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
            std::size_t i = static_cast<std::size_t>(it - cdf.begin());
            if (i >= n) i = n - 1;
            out.support.assign(1, i);
            out.weights.assign(1, 1.0 / spec_.probs()[i]);
            return;
        }
    }
}

SamplingVector Sampler::draw(Rng& rng) {
    SamplingVector v;
    draw(rng, v);
    return v;
}

SamplingVector draw(const SamplerSpec& spec, Rng& rng) {
    Sampler s(spec);
    return s.draw(rng);
}

void apply_estimator_into(const FiniteSumProblem& problem, const SamplingVector& v, const Vector& x,
                          Vector& out, Vector& scratch) {
    check_dimension(problem, x);
    if (v.support.size() != v.weights.size()) {
        throw Error("sampling vector: support and weights differ in length");
    }
    const auto d = static_cast<Eigen::Index>(problem.dim());
    out.setZero(d);
    scratch.resize(d);
    for (std::size_t k = 0; k < v.support.size(); ++k) {
        problem.component(v.support[k]).apply(x, scratch);
        const double w = v.weights[k];
        if (w == 1.0) {
            out += scratch;
        } else {
            out += w * scratch;
        }
    }
    out /= static_cast<double>(problem.n());
}

Vector apply_estimator(const FiniteSumProblem& problem, const SamplingVector& v, const Vector& x) {
    Vector out, scratch;
    apply_estimator_into(problem, v, x, out, scratch);
    return out;
}

// ---------------------------------------------------------------------------

namespace {

void check_lengths(std::size_t a, std::size_t b, const char* what) {
    if (a != b) {
        std::ostringstream os;
        os << what << ": length mismatch (" << a << " vs " << b << ")";
        throw Error(os.str());
    }
}

}  // namespace

NoiseConstants minibatch_noise_constants(const std::vector<double>& L_i,
                                         const std::vector<double>& star,
                                         std::size_t n, std::size_t tau) {
    if (n == 0) {
        throw Error("minibatch constants: n must be at least 1");
    }
    if (tau < 1 || tau > n) {
        throw Error("minibatch constants: tau out of range");
    }
    check_lengths(L_i.size(), n, "minibatch constants: L_i");
    check_lengths(star.size(), n, "minibatch constants: star norms");
    NoiseConstants out;
    out.provenance = NoiseProvenance::closed_form;
    if (n == 1 || tau == n) {
        return out;
    }
    const double nd = static_cast<double>(n);
    const double td = static_cast<double>(tau);
    const double factor = (nd - td) / (nd - 1.0);
    double sl = 0.0, ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sl += L_i[i] * L_i[i];
        ss += star[i];
    }
    out.delta = 2.0 / (nd * td) * factor * sl;
    out.sigma_star_sq = 1.0 / (nd * td) * factor * ss;
    return out;
}

NoiseConstants single_element_noise_constants(const std::vector<double>& L_i,
                                              const std::vector<double>& star,
                                              const std::vector<double>& probs) {
    const std::size_t n = probs.size();
    check_lengths(L_i.size(), n, "single-element constants: L_i");
    check_lengths(star.size(), n, "single-element constants: star norms");
    double sl = 0.0, ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(probs[i] > 0.0)) {
            throw Error("single-element constants: probabilities must be positive");
        }
        sl += L_i[i] * L_i[i] / probs[i];
        ss += star[i] / probs[i];
    }
    const double n2 = static_cast<double>(n) * static_cast<double>(n);
    NoiseConstants out;
    out.delta = 2.0 / n2 * sl;
    out.sigma_star_sq = ss / n2;
    out.provenance = NoiseProvenance::closed_form;
    return out;
}

std::vector<double> importance_probabilities(const std::vector<double>& L_i) {
    if (L_i.empty()) {
        throw Error("importance probabilities: empty L_i list");
    }
    double total = 0.0;
    for (double l : L_i) {
        if (!(l > 0.0)) {
            throw Error("importance probabilities: every L_i must be positive");
        }
        total += l;
    }
    std::vector<double> p(L_i.size());
    for (std::size_t i = 0; i < L_i.size(); ++i) p[i] = L_i[i] / total;
    // Renormalize so the sum is 1 to within rounding of a single division.
    const double s = std::accumulate(p.begin(), p.end(), 0.0);
    for (double& v : p) v /= s;
    return p;
}

double delta_importance(const std::vector<double>& L_i) {
    const double n = static_cast<double>(L_i.size());
    const double s = std::accumulate(L_i.begin(), L_i.end(), 0.0);
    return 2.0 / (n * n) * s * s;
}

double delta_uniform(const std::vector<double>& L_i) {
    const double n = static_cast<double>(L_i.size());
    double s = 0.0;
    for (double l : L_i) s += l * l;
    return 2.0 / n * s;
}

std::vector<double> star_norms(const FiniteSumProblem& problem) {
    const Vector& xs = problem.solution();
    std::vector<double> out(problem.n());
    Vector tmp(static_cast<Eigen::Index>(problem.dim()));
    for (std::size_t i = 0; i < problem.n(); ++i) {
        problem.component(i).apply(xs, tmp);
        out[i] = tmp.squaredNorm();
    }
    return out;
}

NoiseConstants noise_constants_for(const FiniteSumProblem& problem, const SamplerSpec& spec) {
    if (spec.n() != problem.n()) {
        throw Error("sampler n does not match problem n");
    }
    if (!problem.constants()) {
        throw Error("problem '" + problem.id() + "' has no constants; certify them first");
    }
    const auto& L_i = problem.constants()->L_i;
    const auto star = star_norms(problem);
    switch (spec.kind()) {
        case SamplerKind::full_batch: return NoiseConstants{};
        case SamplerKind::minibatch: return minibatch_noise_constants(L_i, star, spec.n(), spec.tau());
        case SamplerKind::single_element: return single_element_noise_constants(L_i, star, spec.probs());
    }
    return NoiseConstants{};
}

SigmaEstimate estimate_sigma_star(const FiniteSumProblem& problem, const SamplerSpec& spec,
                                  std::size_t samples, Rng& rng) {
    if (samples == 0) {
        throw Error("estimate_sigma_star: samples must be positive");
    }
    if (spec.n() != problem.n()) {
        throw Error("sampler n does not match problem n");
    }
    const Vector& xs = problem.solution();
    const auto d = static_cast<Eigen::Index>(problem.dim());
    std::vector<Vector> fstar(problem.n(), Vector(d));
    for (std::size_t i = 0; i < problem.n(); ++i) {
        problem.component(i).apply(xs, fstar[i]);
    }
    Sampler sampler(spec);
    SamplingVector v;
    Vector g(d);
    double mean = 0.0, m2 = 0.0;
    for (std::size_t s = 0; s < samples; ++s) {
        sampler.draw(rng, v);
        g.setZero();
        for (std::size_t k = 0; k < v.support.size(); ++k) {
            g += v.weights[k] * fstar[v.support[k]];
        }
        g /= static_cast<double>(problem.n());
        const double val = g.squaredNorm();
        const double delta = val - mean;
        mean += delta / static_cast<double>(s + 1);
        m2 += delta * (val - mean);
    }
    SigmaEstimate out;
    out.value = mean;
    out.samples = samples;
    out.std_error = samples > 1 ? std::sqrt(m2 / static_cast<double>(samples - 1) / static_cast<double>(samples)) : 0.0;
    return out;
}

}  // namespace vibench
