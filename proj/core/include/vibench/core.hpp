#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace vibench {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    DimensionError(std::size_t expected, std::size_t actual);
    std::size_t expected() const { return expected_; }
    std::size_t actual() const { return actual_; }

private:
    std::size_t expected_;
    std::size_t actual_;
};

// Warnings go through a replaceable sink (stderr by default).
using WarningSink = std::function<void(const std::string&)>;
void set_warning_sink(WarningSink sink);
void warn(const std::string& message);

// A point with finite coordinates.
class Point {
public:
    Point() = default;
    explicit Point(Vector coords);
    Point(std::initializer_list<double> coords);

    const Vector& coords() const { return coords_; }
    operator const Vector&() const { return coords_; }
    Eigen::Index size() const { return coords_.size(); }

private:
    Vector coords_;
};

struct AffineMap {
    Matrix matrix;
    Vector offset;
};

// F_i : R^d -> R^d, either affine (M z + b) or a general callable.
class ComponentOperator {
public:
    using Fn = std::function<void(const Vector& x, Vector& out)>;

    static ComponentOperator affine(Matrix m, Vector b);
    static ComponentOperator general(std::size_t dim, Fn fn,
                                     std::optional<double> lipschitz = std::nullopt);

    std::size_t dim() const { return dim_; }
    void apply(const Vector& x, Vector& out) const;
    Vector operator()(const Vector& x) const;

    const AffineMap* as_affine() const { return affine_ ? &*affine_ : nullptr; }
    std::optional<double> lipschitz_bound() const { return lipschitz_; }

private:
    std::size_t dim_ = 0;
    std::optional<AffineMap> affine_;
    Fn fn_;
    std::optional<double> lipschitz_;
};

enum class Provenance { closed_form, numerically_certified, user_supplied };
const char* to_string(Provenance p);

struct ProblemConstants {
    double L = 0.0;
    std::vector<double> L_i;
    std::optional<double> mu;
    std::optional<double> rho;
    Provenance L_provenance = Provenance::user_supplied;
    Provenance L_i_provenance = Provenance::user_supplied;
    Provenance mu_provenance = Provenance::user_supplied;
    Provenance rho_provenance = Provenance::user_supplied;
    // False when the symmetrized spectrum dipped below zero and mu was clamped.
    bool quasi_strongly_monotone = true;
};

enum class NoiseProvenance { closed_form, enumerated, monte_carlo };
const char* to_string(NoiseProvenance p);

struct NoiseConstants {
    double delta = 0.0;
    double sigma_star_sq = 0.0;
    NoiseProvenance provenance = NoiseProvenance::closed_form;
    std::optional<double> std_error;
};

struct ProblemOptions {
    std::string id = "problem";
    std::string metadata = "{}";  // JSON text
    double solution_tolerance = 1e-9;
};

class FiniteSumProblem {
public:
    using Options = ProblemOptions;

    FiniteSumProblem(std::vector<ComponentOperator> components,
                     std::optional<Point> solution = std::nullopt,
                     std::optional<ProblemConstants> constants = std::nullopt,
                     Options options = {});

    std::size_t n() const;
    std::size_t dim() const;
    const ComponentOperator& component(std::size_t i) const;
    const std::vector<ComponentOperator>& components() const;

    bool has_solution() const;
    const Vector& solution() const;  // throws if absent
    const std::optional<ProblemConstants>& constants() const;
    const std::string& id() const;
    const std::string& metadata() const;

    bool is_affine() const;
    // Averaged affine map when every component is affine.
    const AffineMap* mean_map() const;

    FiniteSumProblem with_constants(ProblemConstants c) const;

private:
    struct Impl;
    std::shared_ptr<const Impl> impl_;
};

// (1/n) sum_i F_i(x)
Vector evaluate_full(const FiniteSumProblem& problem, const Vector& x);
// Uses the averaged affine map when available; not bitwise equal to evaluate_full.
Vector mean_operator(const FiniteSumProblem& problem, const Vector& x);

void check_dimension(const FiniteSumProblem& problem, const Vector& x);

struct CertifyOptions {
    std::size_t sample_count = 1000;
    std::uint64_t seed = 0;
    bool want_mu = true;
    bool want_rho = false;
    double tol = 1e-9;
    double sample_scale = 1.0;
    unsigned threads = 1;
};

ProblemConstants certify_constants(const FiniteSumProblem& problem,
                                   const CertifyOptions& options = {});

}  // namespace vibench
