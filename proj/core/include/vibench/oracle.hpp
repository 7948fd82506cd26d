#pragma once

#include "vibench/core.hpp"
#include "vibench/rng.hpp"
#include "vibench/sampling.hpp"

#include <string>
#include <vector>

namespace vibench {

// Exact enumeration refuses problems larger than this.
inline constexpr std::size_t kMaxEnumerationSize = 12;

struct Outcome {
    double probability = 0.0;
    SamplingVector v;
};

// Every sampling vector the spec can produce, with its probability.
std::vector<Outcome> enumerate_outcomes(const SamplerSpec& spec);

// E||(F_v(x) - F_v(x*)) - (F(x) - F(x*))||^2
double enumerate_residual(const FiniteSumProblem& problem, const SamplerSpec& spec, const Vector& x);
double enumerate_minibatch_residual(const FiniteSumProblem& problem, std::size_t tau, const Vector& x);

// E||F_v(x)||^2, E||F_v(x) - F(x)||^2, E||F_v(x) - F_v(x*)||^2
double enumerate_second_moment(const FiniteSumProblem& problem, const SamplerSpec& spec, const Vector& x);
double enumerate_variance(const FiniteSumProblem& problem, const SamplerSpec& spec, const Vector& x);
double enumerate_shift_moment(const FiniteSumProblem& problem, const SamplerSpec& spec, const Vector& x);

// E||F_v(x*)||^2 by outcome enumeration.
double enumerate_sigma_star(const FiniteSumProblem& problem, const SamplerSpec& spec);
// (1/n^2) sum_ij P_ij / (p_i p_j) <F_i(x*), F_j(x*)>
double sigma_star_expansion(const FiniteSumProblem& problem, const SamplerSpec& spec);

// delta = 2 lambda_max(Var[v]) sum L_i^2 / n^2 with Var[v] built from enumerated subsets.
double enumerate_minibatch_delta(const std::vector<double>& L_i, std::size_t tau);
// delta = (2/n^2) sum E[v_i^2] L_i^2 with E[v v^T] built from enumerated outcomes
// (off-diagonal second moments are zero for single-element sampling).
double enumerate_single_element_delta(const std::vector<double>& L_i, const std::vector<double>& probs);

struct ConditionReport {
    std::string name;
    double worst_margin = 0.0;   // min over points of (rhs - lhs); negative means violated
    Vector witness;
    std::size_t witness_index = 0;
    bool pass = true;
    double constant = 0.0;       // smallest constant consistent with the sample
    double growth_exponent = 0.0;
    bool bounded = true;
    std::string detail;
};

ConditionReport check_quasi_strong(const FiniteSumProblem& problem, double mu,
                                   const std::vector<Vector>& points, double tol = 1e-9);
ConditionReport check_weak_mvi(const FiniteSumProblem& problem, double rho,
                               const std::vector<Vector>& points, double tol = 1e-9);

struct HierarchyOptions {
    double tol = 1e-9;
    // A condition is reported unbounded when its per-point value grows with
    // log-log slope above this against ||x - x*|| (needs a 10x distance spread).
    double growth_slope_threshold = 0.5;
};

// Reports for bounded operator, bounded variance, growth, expected
// cocoercivity, expected residual and the variance bound, followed by
// implication checks ("a => b").
std::vector<ConditionReport> check_hierarchy(const FiniteSumProblem& problem, const SamplerSpec& spec,
                                             const std::vector<Vector>& points,
                                             const HierarchyOptions& options = {});

std::vector<Vector> sample_points(const Vector& center, std::size_t count, Rng& rng, double scale = 1.0);

// Pairwise (cascade) summation in the given order.
double pairwise_sum(const std::vector<double>& values);

}  // namespace vibench
