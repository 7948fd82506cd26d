#include "vibench/oracle.hpp"
#include "vibench/problems.hpp"

#include "brute.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace vibench;

namespace {

const ConditionReport& find(const std::vector<ConditionReport>& rs, const std::string& name) {
    auto it = std::find_if(rs.begin(), rs.end(), [&](const ConditionReport& r) { return r.name == name; });
    if (it == rs.end()) throw std::runtime_error("missing report " + name);
    return *it;
}

std::vector<Vector> radial_points(const Vector& center, std::size_t count) {
    std::vector<Vector> pts;
    for (std::size_t k = 0; k < count; ++k) {
        const double t = std::pow(10.0, -1.0 + 4.0 * static_cast<double>(k) / static_cast<double>(count - 1));
        Vector dir = Vector::Ones(center.size());
        if (k % 2) dir = -dir;
        pts.push_back(center + t * dir);
    }
    return pts;
}

}  // namespace

TEST(Enumeration, ProbabilitiesSumToOne) {
    for (std::size_t n = 1; n <= 7; ++n)
        for (std::size_t tau = 1; tau <= n; ++tau) {
            double total = 0.0;
            const auto outs = enumerate_outcomes(SamplerSpec::minibatch(n, tau));
            for (const auto& o : outs) total += o.probability;
            EXPECT_NEAR(total, 1.0, 1e-13);
            EXPECT_EQ(outs.size(), brute::minibatch_draws(n, tau).size());
        }
    EXPECT_THROW(enumerate_outcomes(SamplerSpec::minibatch(kMaxEnumerationSize + 1, 2)), Error);
}

TEST(Enumeration, SigmaExpansionMatchesEnumeration) {
    QuadraticGameSpec q;
    q.n = 6;
    q.d = 2;
    q.seed = 21;
    const auto p = generate_quadratic_game(q);
    for (std::size_t tau = 1; tau <= 6; ++tau) {
        const auto spec = SamplerSpec::minibatch(6, tau);
        const double e = enumerate_sigma_star(p, spec);
        EXPECT_NEAR(sigma_star_expansion(p, spec), e, 1e-10 * std::max(1.0, e));
        EXPECT_NEAR(noise_constants_for(p, spec).sigma_star_sq, e, 1e-10 * std::max(1.0, e));
    }
    const auto spec = SamplerSpec::single_element({0.05, 0.2, 0.25, 0.1, 0.3, 0.1});
    const double e = enumerate_sigma_star(p, spec);
    EXPECT_NEAR(sigma_star_expansion(p, spec), e, 1e-10 * std::max(1.0, e));
}

TEST(Enumeration, DeltaMatchesBruteForce) {
    const std::vector<double> L = {0.5, 1.0, 2.0, 4.0, 1.5};
    for (std::size_t tau = 1; tau <= 5; ++tau) {
        const double b = brute::minibatch_delta(L, tau);
        EXPECT_NEAR(enumerate_minibatch_delta(L, tau), b, 1e-12 * std::max(1.0, b));
    }
}

TEST(Hierarchy, RegressionHasUnboundedVarianceButExpectedResidual) {
    const auto r = regression_counterexample(2.0, 1.0, 1.0, 3.0);
    const auto pts = radial_points(r.problem.solution(), 40);
    const auto reps = check_hierarchy(r.problem, SamplerSpec::uniform_single(2), pts);
    EXPECT_FALSE(find(reps, "bounded_variance").bounded);
    EXPECT_FALSE(find(reps, "bounded_operator").bounded);
    EXPECT_TRUE(find(reps, "expected_residual").pass);
    EXPECT_TRUE(find(reps, "variance_bound").pass);
    EXPECT_TRUE(find(reps, "expected_residual=>variance_bound").pass);
}

TEST(Hierarchy, InterpolatedGameHasBoundedNothingButResidualHolds) {
    QuadraticGameSpec q;
    q.n = 5;
    q.d = 2;
    q.seed = 4;
    const auto p = generate_quadratic_game(q);
    const auto pts = radial_points(p.solution(), 30);
    const auto reps = check_hierarchy(p, SamplerSpec::minibatch(5, 2), pts);
    EXPECT_TRUE(find(reps, "expected_residual").pass);
    EXPECT_TRUE(find(reps, "variance_bound").pass);
    EXPECT_FALSE(find(reps, "bounded_variance").bounded);
}

TEST(QuasiStrong, FailsWhenMuTooLarge) {
    const auto p = generate_diagonal_game(3.0);
    Rng rng(3);
    const auto pts = sample_points(p.solution(), 200, rng, 2.0);
    EXPECT_TRUE(check_quasi_strong(p, 1.0, pts).pass);
    const auto bad = check_quasi_strong(p, 1.5, pts);
    EXPECT_FALSE(bad.pass);
    EXPECT_LT(bad.worst_margin, 0.0);
    EXPECT_EQ(bad.witness, pts[bad.witness_index]);
}

TEST(WeakMinty, HoldsAtStoredRho) {
    const auto p = generate_weak_mvi_problem(WeakMviSpec{});
    Rng rng(1);
    const auto pts = sample_points(p.solution(), 200, rng, 5.0);
    EXPECT_TRUE(check_weak_mvi(p, *p.constants()->rho, pts).pass);
    EXPECT_FALSE(check_weak_mvi(p, 0.0, pts).pass);
}

TEST(PairwiseSum, MatchesNaiveOnIntegers) {
    std::vector<double> v;
    for (int i = 1; i <= 1000; ++i) v.push_back(i);
    EXPECT_EQ(pairwise_sum(v), 500500.0);
    EXPECT_EQ(pairwise_sum({}), 0.0);
}
