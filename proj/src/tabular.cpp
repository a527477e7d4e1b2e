#include "samplerl/tabular.hpp"

#include <cmath>
#include <stdexcept>

#include "samplerl/signal.hpp"

namespace samplerl {

namespace {

void check_row(std::span<const double> row, const char* what) {
    double sum = 0.0;
    for (double v : row) {
        if (!(v >= 0.0)) throw std::invalid_argument(std::string(what) + ": negative entry");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-12)
        throw std::invalid_argument(std::string(what) + ": row must sum to 1");
}

// flat list of all T-step trajectories with their probabilities
struct Enumeration {
    std::vector<std::vector<int>> states;   // s_0 ... s_T per path
    std::vector<std::vector<int>> actions;  // a_1 ... a_T per path
    std::vector<double> probs;
};

Enumeration enumerate_paths(const TabularMdp& mdp, const TabularPolicy& policy,
                            long long enumeration_cap) {
    const int s_count = mdp.num_states, a_count = mdp.num_actions, horizon = mdp.horizon;
    long long total = s_count;
    for (int t = 0; t < horizon; ++t) {
        total *= static_cast<long long>(a_count) * s_count;
        if (total > enumeration_cap)
            throw std::invalid_argument(
                "tabular enumeration too large; use a smaller instance or raise the cap");
    }
    std::vector<std::vector<double>> pi(s_count);
    for (int s = 0; s < s_count; ++s) pi[s] = policy.probs(s);

    Enumeration out;
    out.states.reserve(total);
    std::vector<int> s_path(horizon + 1), a_path(horizon);

    // depth-first over (a_t, s_t) choices
    auto recurse = [&](auto&& self, int t, double prob) -> void {
        if (prob == 0.0) return;  // prune impossible branches
        if (t == horizon) {
            out.states.push_back(s_path);
            out.actions.push_back(a_path);
            out.probs.push_back(prob);
            return;
        }
        const int s = s_path[t];
        for (int a = 0; a < a_count; ++a) {
            a_path[t] = a;
            for (int s2 = 0; s2 < s_count; ++s2) {
                s_path[t + 1] = s2;
                self(self, t + 1, prob * pi[s][a] * mdp.p(s, a, s2));
            }
        }
    };
    for (int s0 = 0; s0 < s_count; ++s0) {
        s_path[0] = s0;
        recurse(recurse, 0, mdp.initial[s0]);
    }
    return out;
}

std::vector<std::vector<double>> path_signals(const Enumeration& paths,
                                              std::span<const double> mu_e,
                                              std::span<const double> mu_theta,
                                              const FGenerator& gen) {
    std::vector<std::vector<double>> signals(paths.probs.size());
    std::vector<double> h_values;
    for (size_t i = 0; i < paths.probs.size(); ++i) {
        const std::vector<int>& s_path = paths.states[i];
        const int horizon = static_cast<int>(s_path.size()) - 1;
        h_values.resize(horizon);
        for (int t = 1; t <= horizon; ++t) {
            const int s = s_path[t];
            if (!(mu_theta[s] > 0.0))
                throw std::domain_error("estimator: visited state has zero occupancy");
            h_values[t - 1] = h_value(gen, mu_e[s] / mu_theta[s]);
        }
        signals[i] = suffix_sums(h_values);
    }
    return signals;
}

}  // namespace

TabularMdp make_tabular_mdp(int num_states, int num_actions, int horizon,
                            std::vector<double> initial, std::vector<double> kernel) {
    if (num_states < 1 || num_actions < 1 || horizon < 1)
        throw std::invalid_argument("tabular mdp: sizes must be positive");
    if (static_cast<int>(initial.size()) != num_states)
        throw std::invalid_argument("tabular mdp: initial size mismatch");
    if (kernel.size() != static_cast<size_t>(num_states) * num_actions * num_states)
        throw std::invalid_argument("tabular mdp: kernel size mismatch");
    check_row(initial, "initial");
    for (int s = 0; s < num_states; ++s)
        for (int a = 0; a < num_actions; ++a)
            check_row(std::span<const double>(kernel).subspan(
                          (static_cast<size_t>(s) * num_actions + a) * num_states, num_states),
                      "kernel");
    return TabularMdp{num_states, num_actions, horizon, std::move(initial), std::move(kernel)};
}

std::vector<double> TabularPolicy::probs(int s) const {
    const double* row = logits.data() + static_cast<size_t>(s) * num_actions;
    double best = row[0];
    for (int a = 1; a < num_actions; ++a) best = std::max(best, row[a]);
    std::vector<double> p(num_actions);
    double z = 0.0;
    for (int a = 0; a < num_actions; ++a) {
        p[a] = std::exp(row[a] - best);
        z += p[a];
    }
    for (double& v : p) v /= z;
    return p;
}

TabularMdp random_tabular_mdp(int num_states, int num_actions, int horizon, Rng& rng) {
    auto random_row = [&](std::span<double> row) {
        double sum = 0.0;
        for (double& v : row) {
            v = 0.05 + rng.uniform();  // bounded away from zero
            sum += v;
        }
        for (double& v : row) v /= sum;
    };
    std::vector<double> initial(num_states);
    random_row(initial);
    std::vector<double> kernel(static_cast<size_t>(num_states) * num_actions * num_states);
    for (int s = 0; s < num_states; ++s)
        for (int a = 0; a < num_actions; ++a)
            random_row(std::span<double>(kernel).subspan(
                (static_cast<size_t>(s) * num_actions + a) * num_states, num_states));
    return make_tabular_mdp(num_states, num_actions, horizon, std::move(initial),
                            std::move(kernel));
}

TabularPolicy random_tabular_policy(int num_states, int num_actions, Rng& rng) {
    TabularPolicy policy{num_states, num_actions,
                         std::vector<double>(static_cast<size_t>(num_states) * num_actions)};
    for (double& v : policy.logits) v = rng.uniform(-1.0, 1.0);
    return policy;
}

std::vector<double> exact_occupancy(const TabularMdp& mdp, const TabularPolicy& policy) {
    const int s_count = mdp.num_states, a_count = mdp.num_actions;
    std::vector<double> marginal = mdp.initial;
    std::vector<double> occupancy(s_count, 0.0), next(s_count);
    for (int t = 1; t <= mdp.horizon; ++t) {
        std::fill(next.begin(), next.end(), 0.0);
        for (int s = 0; s < s_count; ++s) {
            if (marginal[s] == 0.0) continue;
            const std::vector<double> pi = policy.probs(s);
            for (int a = 0; a < a_count; ++a) {
                const double w = marginal[s] * pi[a];
                if (w == 0.0) continue;
                for (int s2 = 0; s2 < s_count; ++s2) next[s2] += w * mdp.p(s, a, s2);
            }
        }
        marginal = next;
        for (int s = 0; s < s_count; ++s) occupancy[s] += marginal[s] / mdp.horizon;
    }
    return occupancy;
}

double exact_objective(const TabularMdp& mdp, const TabularPolicy& policy,
                       std::span<const double> mu_e, const FGenerator& gen) {
    const std::vector<double> mu_theta = exact_occupancy(mdp, policy);
    return divergence_discrete(gen, mu_e, mu_theta).value;
}

std::vector<double> fd_gradient(const TabularMdp& mdp, const TabularPolicy& policy,
                                std::span<const double> mu_e, const FGenerator& gen,
                                double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("fd_gradient: eps must be positive");
    TabularPolicy probe = policy;
    std::vector<double> grad(policy.logits.size());
    for (size_t i = 0; i < policy.logits.size(); ++i) {
        probe.logits[i] = policy.logits[i] + eps;
        const double up = exact_objective(mdp, probe, mu_e, gen);
        probe.logits[i] = policy.logits[i] - eps;
        const double down = exact_objective(mdp, probe, mu_e, gen);
        probe.logits[i] = policy.logits[i];
        grad[i] = (up - down) / (2.0 * eps);
    }
    return grad;
}

std::vector<double> estimator_gradient(const TabularMdp& mdp, const TabularPolicy& policy,
                                       std::span<const double> mu_e, const FGenerator& gen,
                                       long long enumeration_cap) {
    const Enumeration paths = enumerate_paths(mdp, policy, enumeration_cap);
    const std::vector<double> mu_theta = exact_occupancy(mdp, policy);
    const std::vector<std::vector<double>> signals = path_signals(paths, mu_e, mu_theta, gen);

    std::vector<std::vector<std::vector<double>>> pi_cache(mdp.num_states);
    for (int s = 0; s < mdp.num_states; ++s) pi_cache[s] = {policy.probs(s)};

    auto add_step_grad = [&](int i, int t, double coeff, std::span<double> acc) {
        const int s = paths.states[i][t - 1];
        const int a = paths.actions[i][t - 1];
        const std::vector<double>& pi = pi_cache[s][0];
        double* row = acc.data() + static_cast<size_t>(s) * mdp.num_actions;
        for (int b = 0; b < mdp.num_actions; ++b)
            row[b] += coeff * ((b == a ? 1.0 : 0.0) - pi[b]);
    };
    return accumulate_policy_gradient(static_cast<int>(policy.logits.size()),
                                      static_cast<int>(paths.probs.size()), mdp.horizon, signals,
                                      paths.probs, add_step_grad);
}

std::vector<double> enumerated_is_gradient(const TabularMdp& mdp, const TabularPolicy& theta,
                                           const TabularPolicy& theta0,
                                           std::span<const double> mu_e, const FGenerator& gen,
                                           long long enumeration_cap) {
    const Enumeration paths = enumerate_paths(mdp, theta0, enumeration_cap);
    const std::vector<double> mu_theta = exact_occupancy(mdp, theta);
    const std::vector<std::vector<double>> signals = path_signals(paths, mu_e, mu_theta, gen);

    std::vector<std::vector<double>> pi(mdp.num_states), pi0(mdp.num_states);
    for (int s = 0; s < mdp.num_states; ++s) {
        pi[s] = theta.probs(s);
        pi0[s] = theta0.probs(s);
    }
    // behavior probability times the policy likelihood ratio (dynamics cancel)
    std::vector<double> weights(paths.probs);
    for (size_t i = 0; i < weights.size(); ++i) {
        double ratio = 1.0;
        for (size_t t = 0; t < paths.actions[i].size(); ++t) {
            const int s = paths.states[i][t];
            const int a = paths.actions[i][t];
            ratio *= pi[s][a] / pi0[s][a];
        }
        weights[i] *= ratio;
    }
    auto add_step_grad = [&](int i, int t, double coeff, std::span<double> acc) {
        const int s = paths.states[i][t - 1];
        const int a = paths.actions[i][t - 1];
        double* row = acc.data() + static_cast<size_t>(s) * mdp.num_actions;
        for (int b = 0; b < mdp.num_actions; ++b)
            row[b] += coeff * ((b == a ? 1.0 : 0.0) - pi[s][b]);
    };
    return accumulate_policy_gradient(static_cast<int>(theta.logits.size()),
                                      static_cast<int>(paths.probs.size()), mdp.horizon, signals,
                                      weights, add_step_grad);
}

}  // namespace samplerl
