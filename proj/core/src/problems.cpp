#include "vibench/problems.hpp"
#include "vibench/rng.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <nlohmann/json.hpp>

#include <cmath>
#include <sstream>

namespace vibench {

using json = nlohmann::json;

namespace {

void check_interval(const Interval& iv, const char* name) {
    if (!(iv.lo >= 0.0) || !(iv.hi >= iv.lo) || !std::isfinite(iv.hi)) {
        std::ostringstream os;
        os << "quadratic game: interval " << name << " = [" << iv.lo << ", " << iv.hi
           << "] must satisfy 0 <= lo <= hi";
        throw Error(os.str());
    }
}

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.normal();
    return m;
}

// Haar-distributed orthogonal matrix: QR of a Gaussian with sign-fixed diagonal.
Matrix random_orthogonal(Eigen::Index d, Rng& rng) {
    Eigen::HouseholderQR<Matrix> qr(gaussian(d, d, rng));
    Matrix q = qr.householderQ();
    Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < d; ++j) {
        if (r(j, j) < 0.0) q.col(j) = -q.col(j);
    }
    return q;
}

Vector uniform_values(Eigen::Index d, const Interval& iv, Rng& rng) {
    Vector v(d);
    for (Eigen::Index j = 0; j < d; ++j) v(j) = rng.uniform(iv.lo, iv.hi);
    return v;
}

Matrix random_symmetric(Eigen::Index d, const Interval& iv, Rng& rng) {
    Matrix q = random_orthogonal(d, rng);
    Vector lam = uniform_values(d, iv, rng);
    Matrix s = q * lam.asDiagonal() * q.transpose();
    return 0.5 * (s + s.transpose());
}

Matrix random_with_singular_values(Eigen::Index d, const Interval& iv, Rng& rng) {
    Matrix u = random_orthogonal(d, rng);
    Matrix v = random_orthogonal(d, rng);
    Vector s = uniform_values(d, iv, rng);
    return u * s.asDiagonal() * v.transpose();
}

json interval_json(const Interval& iv) { return json::array({iv.lo, iv.hi}); }

ProblemConstants spectral_constants(const std::vector<ComponentOperator>& comps, const Matrix& mean) {
    ProblemConstants c;
    c.L_i.reserve(comps.size());
    for (const auto& op : comps) {
        c.L_i.push_back(Eigen::JacobiSVD<Matrix>(op.as_affine()->matrix).singularValues()(0));
    }
    c.L = Eigen::JacobiSVD<Matrix>(mean).singularValues()(0);
    Matrix sym = 0.5 * (mean + mean.transpose());
    const double lam = Eigen::SelfAdjointEigenSolver<Matrix>(sym, Eigen::EigenvaluesOnly).eigenvalues()(0);
    c.quasi_strongly_monotone = lam > 1e-9;
    c.mu = std::max(lam, 0.0);
    c.L_provenance = c.L_i_provenance = c.mu_provenance = Provenance::closed_form;
    return c;
}

}  // namespace

void QuadraticGameSpec::validate() const {
    if (n < 1) throw Error("quadratic game: n must be at least 1");
    if (d < 1) throw Error("quadratic game: d must be at least 1");
    if (2 * d > max_ambient_dim) {
        std::ostringstream os;
        os << "quadratic game: ambient dimension 2d=" << 2 * d << " exceeds cap " << max_ambient_dim;
        throw Error(os.str());
    }
    check_interval(eig_A, "eig_A");
    check_interval(sv_B, "sv_B");
    check_interval(eig_C, "eig_C");
    if (first_eig_A) check_interval(*first_eig_A, "first_eig_A");
    if (first_sv_B) check_interval(*first_sv_B, "first_sv_B");
    if (first_eig_C) check_interval(*first_eig_C, "first_eig_C");
}

FiniteSumProblem generate_quadratic_game(const QuadraticGameSpec& spec) {
    spec.validate();
    const auto d = static_cast<Eigen::Index>(spec.d);
    const auto D = 2 * d;

    for (unsigned attempt = 0; attempt <= spec.max_retries; ++attempt) {
        Rng rng(spec.seed, attempt);
        std::vector<Matrix> Ms;
        std::vector<Vector> bs;
        Ms.reserve(spec.n);
        bs.reserve(spec.n);
        for (std::size_t i = 0; i < spec.n; ++i) {
            const bool first = i == 0;
            const Interval ia = first && spec.first_eig_A ? *spec.first_eig_A : spec.eig_A;
            const Interval ib = first && spec.first_sv_B ? *spec.first_sv_B : spec.sv_B;
            const Interval ic = first && spec.first_eig_C ? *spec.first_eig_C : spec.eig_C;
            Matrix A = random_symmetric(d, ia, rng);
            Matrix B = random_with_singular_values(d, ib, rng);
            Matrix C = random_symmetric(d, ic, rng);
            Matrix M(D, D);
            M.topLeftCorner(d, d) = A;
            M.topRightCorner(d, d) = B;
            M.bottomLeftCorner(d, d) = -B.transpose();
            M.bottomRightCorner(d, d) = C;
            Ms.push_back(std::move(M));
            Vector b(D);
            for (Eigen::Index j = 0; j < D; ++j) b(j) = rng.normal();
            bs.push_back(std::move(b));
        }

        Matrix Mbar = Matrix::Zero(D, D);
        for (const auto& M : Ms) Mbar += M;
        Mbar /= static_cast<double>(spec.n);
        Eigen::FullPivLU<Matrix> lu(Mbar);
        if (!lu.isInvertible() || lu.rcond() < 1e-12) {
            continue;
        }

        Vector zstar;
        if (spec.interpolated) {
            zstar.resize(D);
            for (Eigen::Index j = 0; j < D; ++j) zstar(j) = rng.normal();
            for (std::size_t i = 0; i < spec.n; ++i) {
                if (spec.printed_formula_compat) {
                    Eigen::FullPivLU<Matrix> lui(Ms[i]);
                    if (!lui.isInvertible()) {
                        throw Error("quadratic game: printed-formula mode needs invertible M_i");
                    }
                    bs[i] = lui.solve(zstar);
                } else {
                    bs[i] = -(Ms[i] * zstar);
                }
            }
        }

        std::vector<ComponentOperator> comps;
        comps.reserve(spec.n);
        Vector bbar = Vector::Zero(D);
        for (std::size_t i = 0; i < spec.n; ++i) {
            bbar += bs[i];
            comps.push_back(ComponentOperator::affine(Ms[i], bs[i]));
        }
        bbar /= static_cast<double>(spec.n);

        Vector xstar = (spec.interpolated && !spec.printed_formula_compat) ? zstar : Vector(lu.solve(-bbar));
        // One refinement step keeps ||F(x*)|| near machine precision for ill-conditioned draws.
        {
            Vector Fx = Vector::Zero(D);
            for (const auto& c : comps) Fx += c(xstar);
            Fx /= static_cast<double>(spec.n);
            xstar -= lu.solve(Fx);
        }

        ProblemConstants consts = spectral_constants(comps, Mbar);

        json meta;
        meta["family"] = "quadratic_game";
        meta["n"] = spec.n;
        meta["d"] = spec.d;
        meta["eig_A"] = interval_json(spec.eig_A);
        meta["sv_B"] = interval_json(spec.sv_B);
        meta["eig_C"] = interval_json(spec.eig_C);
        if (spec.first_eig_A) meta["first_eig_A"] = interval_json(*spec.first_eig_A);
        if (spec.first_sv_B) meta["first_sv_B"] = interval_json(*spec.first_sv_B);
        if (spec.first_eig_C) meta["first_eig_C"] = interval_json(*spec.first_eig_C);
        meta["interpolated"] = spec.interpolated;
        meta["printed_formula_compat"] = spec.printed_formula_compat;
        meta["seed"] = spec.seed;
        meta["attempt"] = attempt;

        FiniteSumProblem::Options opts;
        std::ostringstream id;
        id << "quadratic_game(n=" << spec.n << ",d=" << spec.d << (spec.interpolated ? ",interp" : "")
           << ",seed=" << spec.seed << ")";
        opts.id = id.str();
        opts.metadata = meta.dump();
        return FiniteSumProblem(std::move(comps), Point(xstar), std::move(consts), opts);
    }
    throw Error("quadratic game: averaged matrix singular after all retries");
}

void WeakMviSpec::validate() const {
    if (n < 1) throw Error("weak-MVI problem: n must be at least 1");
    if (!(spread >= 0.0) || !std::isfinite(spread)) throw Error("weak-MVI problem: spread must be >= 0");
    if (!std::isfinite(mean_xi) || !std::isfinite(mean_zeta)) throw Error("weak-MVI problem: means must be finite");
    if (mean_xi == 0.0 && mean_zeta == 0.0) throw Error("weak-MVI problem: mean operator is zero");
}

FiniteSumProblem generate_weak_mvi_problem(const WeakMviSpec& spec) {
    spec.validate();
    Rng rng(spec.seed, 0);
    const std::size_t n = spec.n;
    std::vector<double> xi(n), zeta(n);
    const double hx = spec.spread * std::abs(spec.mean_xi);
    const double hz = spec.spread * std::abs(spec.mean_zeta);
    double sx = 0.0, sz = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        xi[i] = rng.uniform(-hx, hx);
        zeta[i] = rng.uniform(-hz, hz);
        sx += xi[i];
        sz += zeta[i];
    }
    const double cx = sx / static_cast<double>(n);
    const double cz = sz / static_cast<double>(n);
    std::vector<ComponentOperator> comps;
    ProblemConstants c;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = spec.mean_xi + (xi[i] - cx);
        const double z = spec.mean_zeta + (zeta[i] - cz);
        Matrix M(2, 2);
        M << z, x, -x, z;
        comps.push_back(ComponentOperator::affine(M, Vector::Zero(2)));
        c.L_i.push_back(std::hypot(x, z));
    }
    c.L = std::hypot(spec.mean_xi, spec.mean_zeta);
    // Stored in the convention <F(x), x - x*> >= -(rho/2)|F(x)|^2 used to label
    // this problem; it is also valid (not tight) for the rho without the 1/2.
    c.rho = std::max(0.0, -2.0 * spec.mean_zeta / (c.L * c.L));
    c.quasi_strongly_monotone = spec.mean_zeta > 0.0;
    if (spec.mean_zeta > 0.0) c.mu = spec.mean_zeta;
    c.L_provenance = c.L_i_provenance = c.rho_provenance = c.mu_provenance = Provenance::closed_form;

    json meta;
    meta["family"] = "weak_mvi";
    meta["n"] = n;
    meta["mean_xi"] = spec.mean_xi;
    meta["mean_zeta"] = spec.mean_zeta;
    meta["spread"] = spec.spread;
    meta["seed"] = spec.seed;
    FiniteSumProblem::Options opts;
    std::ostringstream id;
    id << "weak_mvi(n=" << n << ",seed=" << spec.seed << ")";
    opts.id = id.str();
    opts.metadata = meta.dump();
    return FiniteSumProblem(std::move(comps), Point{0.0, 0.0}, std::move(c), opts);
}

FiniteSumProblem generate_diagonal_game(double D) {
    if (!(D >= 1.0) || !std::isfinite(D)) {
        throw Error("diagonal game: Delta must be >= 1");
    }
    std::vector<ComponentOperator> comps;
    const Vector xs[3] = {
        (Vector(4) << D, 0.0, 0.0, D).finished(),
        (Vector(4) << 0.0, D, 0.0, 0.0).finished(),
        (Vector(4) << 0.0, 0.0, D, 0.0).finished(),
    };
    Matrix sum = Matrix::Zero(4, 4);
    Vector rhs = Vector::Zero(4);
    for (int i = 0; i < 3; ++i) {
        Vector diag = Vector::Ones(4);
        diag(i) = D;
        Matrix M = diag.asDiagonal();
        sum += M;
        rhs += M * xs[i];
        comps.push_back(ComponentOperator::affine(M, -(M * xs[i])));
    }
    Vector solution = rhs.cwiseQuotient(sum.diagonal());

    ProblemConstants c;
    c.L = (D + 2.0) / 3.0;
    c.L_i.assign(3, D);
    c.mu = 1.0;
    c.L_provenance = c.L_i_provenance = c.mu_provenance = Provenance::closed_form;

    json meta;
    meta["family"] = "diagonal_game";
    meta["delta"] = D;
    FiniteSumProblem::Options opts;
    std::ostringstream id;
    id << "diagonal_game(delta=" << D << ")";
    opts.id = id.str();
    opts.metadata = meta.dump();
    opts.solution_tolerance = 1e-12 * std::max(1.0, D * D);
    return FiniteSumProblem(std::move(comps), Point(solution), std::move(c), opts);
}

RegressionCounterexample regression_counterexample(double a1, double b1, double a2, double b2) {
    if (a1 == 0.0 && a2 == 0.0) {
        throw Error("regression counterexample: a1 and a2 cannot both be zero");
    }
    std::vector<ComponentOperator> comps;
    // grad (a x - b)^2 = 2a(a x - b)
    comps.push_back(ComponentOperator::affine(Matrix::Constant(1, 1, 2.0 * a1 * a1),
                                              Vector::Constant(1, -2.0 * a1 * b1)));
    comps.push_back(ComponentOperator::affine(Matrix::Constant(1, 1, 2.0 * a2 * a2),
                                              Vector::Constant(1, -2.0 * a2 * b2)));
    const double s = a1 * a1 + a2 * a2;
    const double xstar = (a1 * b1 + a2 * b2) / s;

    ProblemConstants c;
    c.L = s;
    c.L_i = {2.0 * a1 * a1, 2.0 * a2 * a2};
    c.mu = s;
    c.L_provenance = c.L_i_provenance = c.mu_provenance = Provenance::closed_form;

    json meta;
    meta["family"] = "regression";
    meta["a1"] = a1;
    meta["b1"] = b1;
    meta["a2"] = a2;
    meta["b2"] = b2;
    FiniteSumProblem::Options opts;
    opts.id = "regression_counterexample";
    opts.metadata = meta.dump();

    const double lead = a1 * a1 - a2 * a2;
    const double off = a1 * b1 - a2 * b2;
    return RegressionCounterexample{
        FiniteSumProblem(std::move(comps), Point{xstar}, std::move(c), opts),
        [lead, off](double x) {
            const double r = lead * x - off;
            return r * r;
        }};
}

}  // namespace vibench
