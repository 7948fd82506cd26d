#include "vibench/schedules.hpp"
#include "vibench/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace vibench {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw Error(std::string("schedule: ") + name + " must be positive and finite");
    }
}

void require_nonnegative(double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
        throw Error(std::string("schedule: ") + name + " must be nonnegative and finite");
    }
}

double ratio_or_inf(double num, double den) {
    return den > 0.0 ? num / den : kInf;
}

}  // namespace

double constant_step(double L, double mu, double delta, std::optional<double> eps,
                     std::optional<double> sigma_star_sq) {
    require_positive(L, "L");
    require_positive(mu, "mu");
    require_nonnegative(delta, "delta");
    double w = std::min(ratio_or_inf(mu, 18.0 * delta), 1.0 / (4.0 * L));
    if (eps) {
        require_positive(*eps, "target eps");
        if (!sigma_star_sq) {
            throw Error("schedule: target eps requires sigma_star_sq");
        }
        require_nonnegative(*sigma_star_sq, "sigma_star_sq");
        w = std::min(w, ratio_or_inf(*eps * mu, 48.0 * *sigma_star_sq));
    }
    return w;
}

double switching_omega_bar(double L, double mu, double delta) {
    return constant_step(L, mu, delta);
}

std::uint64_t switching_kstar(double L, double mu, double delta) {
    const double wb = switching_omega_bar(L, mu, delta);
    return static_cast<std::uint64_t>(std::ceil(4.0 / (mu * wb)));
}

double switching_step(std::uint64_t k, double L, double mu, double delta) {
    const double wb = switching_omega_bar(L, mu, delta);
    const std::uint64_t ks = static_cast<std::uint64_t>(std::ceil(4.0 / (mu * wb)));
    if (k <= ks) {
        return wb;
    }
    const double kd = static_cast<double>(k);
    return 2.0 * (2.0 * kd + 1.0) / (mu * (kd + 1.0) * (kd + 1.0));
}

double horizon_step(std::uint64_t k, std::uint64_t K, double L, double mu, double delta) {
    if (K == 0) {
        throw Error("schedule: horizon K must be positive");
    }
    const double wb = switching_omega_bar(L, mu, delta);
    if (static_cast<double>(K) <= 2.0 / (mu * wb)) {
        return wb;
    }
    const std::uint64_t k0 = (K + 1) / 2;
    if (k <= k0) {
        return wb;
    }
    return 2.0 / (2.0 / wb + 0.5 * mu * static_cast<double>(k - k0));
}

double hsieh_step(std::uint64_t k, double gamma0, double b) {
    require_positive(gamma0, "gamma0");
    require_positive(b, "b");
    return gamma0 / (static_cast<double>(k) + b);
}

bool hsieh_admissible(double gamma0, double b, double L, double mu) {
    return gamma0 > 1.0 / mu && gamma0 <= b / (4.0 * L);
}

StepPair weak_mvi_steps(double L, double rho, double safety) {
    require_positive(L, "L");
    require_nonnegative(rho, "rho");
    if (!(safety > 0.0 && safety < 1.0)) {
        throw Error("schedule: weak-MVI safety factor must lie in (0, 1)");
    }
    if (rho >= 1.0 / (2.0 * L)) {
        throw Error("weak-MVI regime out of range: rho must be < 1/(2L)");
    }
    const double lo = std::max(2.0 * rho, 1.0 / (2.0 * L));
    const double hi = 1.0 / L;
    StepPair s;
    s.gamma = 0.5 * (lo + hi);
    s.omega = safety * std::min(s.gamma - 2.0 * rho, 1.0 / (4.0 * L) - s.gamma / 4.0);
    return s;
}

bool weak_mvi_admissible(double L, double rho, double gamma, double omega) {
    const double lo = std::max(2.0 * rho, 1.0 / (2.0 * L));
    return gamma > lo && gamma < 1.0 / L && omega > 0.0 &&
           omega < std::min(gamma - 2.0 * rho, 1.0 / (4.0 * L) - gamma / 4.0);
}

std::uint64_t weak_mvi_batchsize(std::uint64_t K, double delta, double sigma_star_sq, double L,
                                 double gamma, double omega, double r0_sq) {
    if (K < 2) {
        throw Error("weak-MVI batch size: K must be at least 2");
    }
    require_positive(L, "L");
    require_positive(gamma, "gamma");
    require_positive(omega, "omega");
    require_positive(r0_sq, "r0_sq");
    require_nonnegative(delta, "delta");
    require_nonnegative(sigma_star_sq, "sigma_star_sq");
    const double slack = 1.0 - L * gamma;
    if (!(slack > 0.0)) {
        throw Error("weak-MVI batch size: requires L*gamma < 1");
    }
    const double km1 = static_cast<double>(K - 1);
    double t = 1.0;
    t = std::max(t, 32.0 * delta / (slack * L * L * L * omega));
    t = std::max(t, 48.0 * omega * gamma * delta * km1 / (slack * slack));
    t = std::max(t, 2.0 * omega * gamma * sigma_star_sq * km1 / (slack * r0_sq));
    return static_cast<std::uint64_t>(std::ceil(t));
}

ConditionMargins step_conditions(double w, double L, double mu, double delta) {
    ConditionMargins m;
    m.first = 2.0 * w * (mu - w * delta) + 8.0 * w * w * L * L - 1.0;
    m.second = 8.0 * w * w * (delta + L * L) - (1.0 - w * mu + 9.0 * w * w * delta);
    return m;
}

const char* to_string(ScheduleKind kind) {
    switch (kind) {
        case ScheduleKind::constant: return "constant";
        case ScheduleKind::constant_targeted: return "constant_targeted";
        case ScheduleKind::switching: return "switching";
        case ScheduleKind::horizon_aware: return "horizon_aware";
        case ScheduleKind::hsieh: return "hsieh";
        case ScheduleKind::weak_mvi: return "weak_mvi";
        case ScheduleKind::custom: return "custom";
        case ScheduleKind::fixed: return "fixed";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------

StepSizePlan StepSizePlan::constant(double L, double mu, double delta) {
    StepSizePlan p;
    p.kind_ = ScheduleKind::constant;
    p.L_ = L; p.mu_ = mu; p.delta_ = delta;
    p.omega_ = p.gamma_ = p.omega_bar_ = constant_step(L, mu, delta);
    return p;
}

StepSizePlan StepSizePlan::constant_targeted(double L, double mu, double delta, double eps, double s2) {
    StepSizePlan p;
    p.kind_ = ScheduleKind::constant_targeted;
    p.L_ = L; p.mu_ = mu; p.delta_ = delta;
    p.omega_bar_ = constant_step(L, mu, delta);
    p.omega_ = p.gamma_ = constant_step(L, mu, delta, eps, s2);
    return p;
}

StepSizePlan StepSizePlan::switching(double L, double mu, double delta) {
    StepSizePlan p;
    p.kind_ = ScheduleKind::switching;
    p.L_ = L; p.mu_ = mu; p.delta_ = delta;
    p.omega_bar_ = switching_omega_bar(L, mu, delta);
    p.kstar_ = switching_kstar(L, mu, delta);
    return p;
}

StepSizePlan StepSizePlan::horizon_aware(std::uint64_t K, double L, double mu, double delta) {
    if (K == 0) {
        throw Error("schedule: horizon K must be positive");
    }
    StepSizePlan p;
    p.kind_ = ScheduleKind::horizon_aware;
    p.L_ = L; p.mu_ = mu; p.delta_ = delta;
    p.K_ = K;
    p.omega_bar_ = switching_omega_bar(L, mu, delta);
    return p;
}

StepSizePlan StepSizePlan::hsieh(double gamma0, double b, std::optional<double> L, std::optional<double> mu) {
    require_positive(gamma0, "gamma0");
    require_positive(b, "b");
    if (L && mu && !hsieh_admissible(gamma0, b, *L, *mu)) {
        std::ostringstream os;
        os << "hsieh schedule: (gamma0=" << gamma0 << ", b=" << b
           << ") violates 1/mu < gamma0 <= b/(4L) for L=" << *L << ", mu=" << *mu;
        warn(os.str());
    }
    StepSizePlan p;
    p.kind_ = ScheduleKind::hsieh;
    p.gamma0_ = gamma0;
    p.b_ = b;
    return p;
}

StepSizePlan StepSizePlan::weak_mvi(double gamma, double omega) {
    require_positive(gamma, "gamma");
    require_positive(omega, "omega");
    StepSizePlan p;
    p.kind_ = ScheduleKind::weak_mvi;
    p.gamma_ = gamma;
    p.omega_ = omega;
    return p;
}

StepSizePlan StepSizePlan::custom(double L, double mu, double delta, std::uint64_t switch_at) {
    StepSizePlan p;
    p.kind_ = ScheduleKind::custom;
    p.L_ = L; p.mu_ = mu; p.delta_ = delta;
    p.omega_bar_ = switching_omega_bar(L, mu, delta);
    p.switch_at_ = switch_at;
    return p;
}

StepSizePlan StepSizePlan::fixed(double omega) {
    require_positive(omega, "omega");
    StepSizePlan p;
    p.kind_ = ScheduleKind::fixed;
    p.gamma_ = p.omega_ = p.omega_bar_ = omega;
    return p;
}

StepPair StepSizePlan::at(std::uint64_t k) const {
    double w = 0.0;
    switch (kind_) {
        case ScheduleKind::constant:
        case ScheduleKind::constant_targeted:
        case ScheduleKind::fixed:
        case ScheduleKind::weak_mvi:
            return StepPair{gamma_, omega_};
        case ScheduleKind::switching:
            w = switching_step(k, L_, mu_, delta_);
            break;
        case ScheduleKind::horizon_aware:
            w = horizon_step(k, K_, L_, mu_, delta_);
            break;
        case ScheduleKind::hsieh:
            w = hsieh_step(k, gamma0_, b_);
            break;
        case ScheduleKind::custom: {
            if (k <= switch_at_) {
                w = omega_bar_;
            } else {
                const double kd = static_cast<double>(k);
                w = std::min(omega_bar_, 2.0 * (2.0 * kd + 1.0) / (mu_ * (kd + 1.0) * (kd + 1.0)));
            }
            break;
        }
    }
    return StepPair{w, w};
}

bool StepSizePlan::is_constant() const {
    switch (kind_) {
        case ScheduleKind::constant:
        case ScheduleKind::constant_targeted:
        case ScheduleKind::fixed:
        case ScheduleKind::weak_mvi:
            return true;
        default:
            return false;
    }
}

std::string StepSizePlan::describe() const {
    std::ostringstream os;
    os.precision(10);
    os << to_string(kind_);
    switch (kind_) {
        case ScheduleKind::constant:
        case ScheduleKind::constant_targeted:
        case ScheduleKind::fixed:
            os << "(omega=" << omega_ << ")";
            break;
        case ScheduleKind::weak_mvi:
            os << "(gamma=" << gamma_ << ", omega=" << omega_ << ")";
            break;
        case ScheduleKind::switching:
            os << "(omega_bar=" << omega_bar_ << ", k*=" << kstar_ << ")";
            break;
        case ScheduleKind::horizon_aware:
            os << "(omega_bar=" << omega_bar_ << ", K=" << K_ << ")";
            break;
        case ScheduleKind::hsieh:
            os << "(gamma0=" << gamma0_ << ", b=" << b_ << ")";
            break;
        case ScheduleKind::custom:
            os << "(omega_bar=" << omega_bar_ << ", switch_at=" << switch_at_ << ")";
            break;
    }
    return os.str();
}

}  // namespace vibench
