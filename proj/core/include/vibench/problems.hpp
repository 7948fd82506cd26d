#pragma once

#include "vibench/core.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

namespace vibench {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

struct QuadraticGameSpec {
    std::size_t n = 100;
    std::size_t d = 30;  // per block; ambient dimension is 2d
    Interval eig_A{0.1, 1.0};
    Interval sv_B{0.0, 1.0};
    Interval eig_C{0.1, 1.0};
    // Overrides for the first component only (A_1, B_1, C_1).
    std::optional<Interval> first_eig_A;
    std::optional<Interval> first_sv_B;
    std::optional<Interval> first_eig_C;
    bool interpolated = false;
    // Uses (a_i; c_i) = M_i^{-1} z* as printed instead of b_i = -M_i z*.
    bool printed_formula_compat = false;
    std::uint64_t seed = 0;
    std::size_t max_ambient_dim = 512;
    unsigned max_retries = 8;

    void validate() const;
};

// F_i(z) = M_i z + (a_i; c_i), M_i = [[A_i, B_i], [-B_i^T, C_i]].
FiniteSumProblem generate_quadratic_game(const QuadraticGameSpec& spec);

struct WeakMviSpec {
    std::size_t n = 100;
    double mean_xi = 7.937253933193772;  // sqrt(63)
    double mean_zeta = -1.0;
    double spread = 0.1;  // uniform half-width as a fraction of |mean|
    std::uint64_t seed = 0;

    void validate() const;
};

// F_i(x, y) = (zeta_i x + xi_i y; -xi_i x + zeta_i y).
FiniteSumProblem generate_weak_mvi_problem(const WeakMviSpec& spec);

// F_i(x) = M_i (x - x_i*) with the diagonal M_i built from delta_param.
FiniteSumProblem generate_diagonal_game(double delta_param);

struct RegressionCounterexample {
    FiniteSumProblem problem;
    std::function<double(double)> variance;  // exact E|g(x) - F(x)|^2 under uniform sampling
};

// Two 1-D least-squares components f_i(x) = (a_i x - b_i)^2.
RegressionCounterexample regression_counterexample(double a1, double b1, double a2, double b2);

// Versioned binary format: JSON header + little-endian float64 payloads.
void save_problem(const FiniteSumProblem& problem, const std::string& path);
FiniteSumProblem load_problem(const std::string& path);
std::string serialize_problem(const FiniteSumProblem& problem);
FiniteSumProblem deserialize_problem(const std::string& bytes);

}  // namespace vibench
