#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace vibench {

struct StepPair {
    double gamma = 0.0;  // extrapolation
    double omega = 0.0;  // update
};

// Terms with a zero denominator are dropped (treated as +inf).
double constant_step(double L, double mu, double delta,
                     std::optional<double> target_eps = std::nullopt,
                     std::optional<double> sigma_star_sq = std::nullopt);

double switching_omega_bar(double L, double mu, double delta);
std::uint64_t switching_kstar(double L, double mu, double delta);
double switching_step(std::uint64_t k, double L, double mu, double delta);

double horizon_step(std::uint64_t k, std::uint64_t K, double L, double mu, double delta);

// Warns (does not throw) when 1/mu < gamma0 <= b/(4L) is violated and mu, L are given.
double hsieh_step(std::uint64_t k, double gamma0, double b);
bool hsieh_admissible(double gamma0, double b, double L, double mu);

StepPair weak_mvi_steps(double L, double rho, double safety = 0.5);
bool weak_mvi_admissible(double L, double rho, double gamma, double omega);

std::uint64_t weak_mvi_batchsize(std::uint64_t K, double delta, double sigma_star_sq, double L,
                                 double gamma, double omega, double r0_sq);

// Step-size conditions for the constant regime; both <= 0 means satisfied.
struct ConditionMargins {
    double first = 0.0;   // 2w(mu - w delta) + 8 w^2 L^2 - 1
    double second = 0.0;  // 8 w^2 (delta + L^2) - (1 - w mu + 9 w^2 delta)
};
ConditionMargins step_conditions(double omega, double L, double mu, double delta);

enum class ScheduleKind { constant, constant_targeted, switching, horizon_aware, hsieh, weak_mvi, custom, fixed };
const char* to_string(ScheduleKind kind);

class StepSizePlan {
public:
    static StepSizePlan constant(double L, double mu, double delta);
    static StepSizePlan constant_targeted(double L, double mu, double delta, double eps, double sigma_star_sq);
    static StepSizePlan switching(double L, double mu, double delta);
    static StepSizePlan horizon_aware(std::uint64_t K, double L, double mu, double delta);
    static StepSizePlan hsieh(double gamma0, double b, std::optional<double> L = std::nullopt,
                              std::optional<double> mu = std::nullopt);
    static StepSizePlan weak_mvi(double gamma, double omega);
    // Constant omega_bar until switch_at, then min(omega_bar, 2(2k+1)/(mu(k+1)^2)).
    static StepSizePlan custom(double L, double mu, double delta, std::uint64_t switch_at);
    // Explicit constant gamma = omega.
    static StepSizePlan fixed(double omega);

    StepPair at(std::uint64_t k) const;
    bool is_constant() const;
    ScheduleKind kind() const { return kind_; }
    double omega_bar() const { return omega_bar_; }
    std::uint64_t kstar() const { return kstar_; }
    std::uint64_t horizon() const { return K_; }
    std::string describe() const;

private:
    ScheduleKind kind_ = ScheduleKind::fixed;
    double L_ = 0.0, mu_ = 0.0, delta_ = 0.0;
    double omega_bar_ = 0.0;
    double gamma_ = 0.0, omega_ = 0.0;
    double gamma0_ = 0.0, b_ = 0.0;
    std::uint64_t kstar_ = 0;
    std::uint64_t K_ = 0;
    std::uint64_t switch_at_ = 0;
};

}  // namespace vibench
