#ifndef SAMPLERL_TABULAR_HPP_
#define SAMPLERL_TABULAR_HPP_

#include <span>
#include <vector>

#include "samplerl/divergence.hpp"
#include "samplerl/rng.hpp"

namespace samplerl {

// Small discrete finite-horizon MDP where occupancies, objectives and policy
// gradients are computable exactly. This is the brute-force testbed backing
// the gradient estimator: everything here is enumeration or dynamic
// programming, no sampling.
struct TabularMdp {
    int num_states = 0;
    int num_actions = 0;
    int horizon = 0;
    std::vector<double> initial;  // over states
    std::vector<double> kernel;   // [s][a][s'] row-major, rows sum to 1

    double p(int s, int a, int s2) const {
        return kernel[(static_cast<size_t>(s) * num_actions + a) * num_states + s2];
    }
};

TabularMdp make_tabular_mdp(int num_states, int num_actions, int horizon,
                            std::vector<double> initial, std::vector<double> kernel);

// stationary per-state action logits
struct TabularPolicy {
    int num_states = 0;
    int num_actions = 0;
    std::vector<double> logits;  // [s][a]

    std::vector<double> probs(int s) const;
};

// random strictly positive instance + policy; keeps every state reachable so
// exact ratios are well defined
TabularMdp random_tabular_mdp(int num_states, int num_actions, int horizon, Rng& rng);
TabularPolicy random_tabular_policy(int num_states, int num_actions, Rng& rng);

// mu(s) = (1/T) sum_{t=1..T} P(s_t = s); s_0 excluded
std::vector<double> exact_occupancy(const TabularMdp& mdp, const TabularPolicy& policy);

// D_f(mu_E || mu_theta) with mu_theta from exact_occupancy
double exact_objective(const TabularMdp& mdp, const TabularPolicy& policy,
                       std::span<const double> mu_e, const FGenerator& gen);

// central finite differences of exact_objective in every logit
std::vector<double> fd_gradient(const TabularMdp& mdp, const TabularPolicy& policy,
                                std::span<const double> mu_e, const FGenerator& gen, double eps);

// exact expectation of the suffix-sum estimator over all T-step trajectories;
// must match fd_gradient (the core correctness check for the gradient formula)
std::vector<double> estimator_gradient(const TabularMdp& mdp, const TabularPolicy& policy,
                                       std::span<const double> mu_e, const FGenerator& gen,
                                       long long enumeration_cap = 4'000'000);

// same estimator evaluated with policy logits `theta` on trajectories
// enumerated under `theta0`, reweighted per trajectory (importance sampling)
std::vector<double> enumerated_is_gradient(const TabularMdp& mdp, const TabularPolicy& theta,
                                           const TabularPolicy& theta0,
                                           std::span<const double> mu_e, const FGenerator& gen,
                                           long long enumeration_cap = 4'000'000);

}  // namespace samplerl

#endif  // SAMPLERL_TABULAR_HPP_
