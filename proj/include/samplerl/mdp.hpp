#ifndef SAMPLERL_MDP_HPP_
#define SAMPLERL_MDP_HPP_

#include <cstdint>
#include <numeric>
#include <span>
#include <string_view>
#include <thread>
#include <vector>

#include "samplerl/gaussian_mixture.hpp"
#include "samplerl/rng.hpp"
#include "samplerl/sampler_ops.hpp"

namespace samplerl {

enum class Strategy { Gamma, Guidance, Renoise };

Strategy strategy_from_name(std::string_view name);
const char* strategy_name(Strategy strategy);

struct State {
    Vec x;
    int level_index = 0;  // sigma_t = schedule.sigma(level_index)
    int step = 0;
};

struct Action {
    Strategy strategy = Strategy::Gamma;
    int index = 0;  // into the strategy's action grid
};

using ActionMask = std::vector<uint8_t>;

// Finite-horizon sampling MDP. The denoiser is the analytic posterior mean of
// `target`; `expert` is the distribution being matched (usually the same
// mixture, but it may differ, e.g. for class-rebalancing runs).
struct SamplerEnv {
    GaussianMixture target;
    GaussianMixture expert;
    NoiseSchedule schedule;
    Strategy strategy = Strategy::Gamma;
    std::vector<double> action_grid;  // gamma or omega values; unused for Renoise
    int renoise_span = 4;             // M: how many higher levels a jump may reach
    int horizon = 0;                  // T
    int nfe_budget = -1;              // denoiser calls; -1 = unbounded

    int dim() const { return target.dim(); }
    int action_count() const;
    bool conditional() const { return strategy == Strategy::Guidance; }
};

SamplerEnv make_env(GaussianMixture target, GaussianMixture expert, NoiseSchedule schedule,
                    Strategy strategy, std::vector<double> action_grid, int renoise_span,
                    int horizon, int nfe_budget);

// denoiser evaluations needed to descend straight from level_index to 0
int descend_cost(int level_index);

// which actions the level structure allows at this state
ActionMask structural_mask(const SamplerEnv& env, const State& state);

// structural mask further restricted so the remaining budget always covers a
// straight descent; exhaustion forces continue-down
ActionMask available_actions(const SamplerEnv& env, const State& state, int nfe_used);

struct TransitionResult {
    State state;
    int nfe = 0;
};

// cond is the trajectory's conditioning component (Guidance only, else -1)
TransitionResult transition(const SamplerEnv& env, const State& state, const Action& action,
                            int cond, Rng& rng);

struct Trajectory {
    std::vector<State> states;       // s_0 ... s_T
    std::vector<Action> actions;     // a_1 ... a_T (a_t chosen at s_{t-1})
    std::vector<double> logprobs;    // under the sampling policy and temperature
    std::vector<ActionMask> masks;   // availability when a_t was chosen
    std::vector<int> nfe;            // per step
    int total_nfe = 0;
    bool terminal_reached = false;
    int cond = -1;

    int horizon() const { return static_cast<int>(actions.size()); }
    const State& state_before(int t) const { return states[t - 1]; }  // t in 1..T
    const State& state_at(int t) const { return states[t]; }          // occupancy states
};

// P must provide sample_action(state, mask, beta, rng) -> {action index, logprob}
template <typename P>
Trajectory rollout(const SamplerEnv& env, const P& policy, double beta, Rng& rng) {
    Trajectory traj;
    const int n = env.schedule.max_index();
    State s;
    s.x.resize(env.dim());
    for (double& v : s.x) v = env.schedule.sigma(n) * rng.normal();
    s.level_index = n;
    s.step = 0;
    traj.cond = env.conditional() ? rng.categorical(env.target.weights) : -1;
    traj.states.push_back(s);

    for (int t = 1; t <= env.horizon; ++t) {
        ActionMask mask = available_actions(env, s, traj.total_nfe);
        auto [index, logprob] = policy.sample_action(s, mask, beta, rng);
        Action action{env.strategy, index};
        TransitionResult step = transition(env, s, action, traj.cond, rng);
        s = std::move(step.state);
        traj.states.push_back(s);
        traj.actions.push_back(action);
        traj.logprobs.push_back(logprob);
        traj.masks.push_back(std::move(mask));
        traj.nfe.push_back(step.nfe);
        traj.total_nfe += step.nfe;
    }
    traj.terminal_reached = (s.level_index == 0);
    return traj;
}

// independent per-trajectory streams derived from (rng, index): results do
// not depend on thread count or scheduling
template <typename P>
std::vector<Trajectory> rollout_batch(const SamplerEnv& env, const P& policy, double beta,
                                      int n_traj, const Rng& rng, int threads = 1) {
    std::vector<Trajectory> out(n_traj);
    auto worker = [&](int begin, int end) {
        for (int i = begin; i < end; ++i) {
            Rng stream = rng.derive("traj", static_cast<uint64_t>(i));
            out[i] = rollout(env, policy, beta, stream);
        }
    };
    if (threads <= 1 || n_traj < 2 * threads) {
        worker(0, n_traj);
    } else {
        std::vector<std::thread> pool;
        const int chunk = (n_traj + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            const int begin = t * chunk;
            const int end = std::min(n_traj, begin + chunk);
            if (begin >= end) break;
            pool.emplace_back(worker, begin, end);
        }
        for (std::thread& th : pool) th.join();
    }
    return out;
}

}  // namespace samplerl

#endif  // SAMPLERL_MDP_HPP_
