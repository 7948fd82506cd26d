#pragma once

#include "vibench/core.hpp"
#include "vibench/rng.hpp"

#include <string>
#include <vector>

namespace vibench {

enum class SamplerKind { minibatch, single_element, full_batch };

// Distribution over sampling vectors. Validated at construction.
class SamplerSpec {
public:
    static SamplerSpec minibatch(std::size_t n, std::size_t tau);
    static SamplerSpec single_element(std::vector<double> probs);
    static SamplerSpec uniform_single(std::size_t n);
    static SamplerSpec full_batch(std::size_t n);

    SamplerKind kind() const { return kind_; }
    std::size_t n() const { return n_; }
    std::size_t tau() const { return tau_; }  // 1 for single-element, n for full batch
    const std::vector<double>& probs() const { return probs_; }
    const std::vector<double>& cdf() const { return cdf_; }

    // P(i in S) and P(i, j in S), i != j.
    double inclusion(std::size_t i) const;
    double joint_inclusion(std::size_t i, std::size_t j) const;

    std::string describe() const;

private:
    SamplerKind kind_ = SamplerKind::full_batch;
    std::size_t n_ = 0;
    std::size_t tau_ = 0;
    std::vector<double> probs_;
    std::vector<double> cdf_;
};

struct SamplingVector {
    std::vector<std::size_t> support;
    std::vector<double> weights;
};

// Stateful drawer; keeps a permutation buffer so minibatch draws cost O(tau).
class Sampler {
public:
    explicit Sampler(SamplerSpec spec);
    const SamplerSpec& spec() const { return spec_; }
    void draw(Rng& rng, SamplingVector& out);
    SamplingVector draw(Rng& rng);

private:
    SamplerSpec spec_;
    std::vector<std::size_t> perm_;
};

SamplingVector draw(const SamplerSpec& spec, Rng& rng);

// (1/n) sum_{i in support} v_i F_i(x)
Vector apply_estimator(const FiniteSumProblem& problem, const SamplingVector& v, const Vector& x);
void apply_estimator_into(const FiniteSumProblem& problem, const SamplingVector& v, const Vector& x,
                          Vector& out, Vector& scratch);

NoiseConstants minibatch_noise_constants(const std::vector<double>& L_i,
                                         const std::vector<double>& star_norms,
                                         std::size_t n, std::size_t tau);
NoiseConstants single_element_noise_constants(const std::vector<double>& L_i,
                                              const std::vector<double>& star_norms,
                                              const std::vector<double>& probs);

std::vector<double> importance_probabilities(const std::vector<double>& L_i);
double delta_importance(const std::vector<double>& L_i);
double delta_uniform(const std::vector<double>& L_i);

// ||F_i(x*)||^2 per component.
std::vector<double> star_norms(const FiniteSumProblem& problem);

// Closed-form (delta, sigma*^2) for a problem and sampler; needs L_i and x*.
NoiseConstants noise_constants_for(const FiniteSumProblem& problem, const SamplerSpec& spec);

struct SigmaEstimate {
    double value = 0.0;
    double std_error = 0.0;
    std::size_t samples = 0;
};

SigmaEstimate estimate_sigma_star(const FiniteSumProblem& problem, const SamplerSpec& spec,
                                  std::size_t samples, Rng& rng);

}  // namespace vibench
