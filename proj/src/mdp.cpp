#include "samplerl/mdp.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace samplerl {

Strategy strategy_from_name(std::string_view name) {
    if (name == "gamma") return Strategy::Gamma;
    if (name == "guidance") return Strategy::Guidance;
    if (name == "renoise") return Strategy::Renoise;
    throw std::invalid_argument("unknown strategy: " + std::string(name));
}

const char* strategy_name(Strategy strategy) {
    switch (strategy) {
        case Strategy::Gamma: return "gamma";
        case Strategy::Guidance: return "guidance";
        case Strategy::Renoise: return "renoise";
    }
    return "?";
}

int SamplerEnv::action_count() const {
    if (strategy == Strategy::Renoise) return 1 + renoise_span;  // continue + jumps
    return static_cast<int>(action_grid.size());
}

SamplerEnv make_env(GaussianMixture target, GaussianMixture expert, NoiseSchedule schedule,
                    Strategy strategy, std::vector<double> action_grid, int renoise_span,
                    int horizon, int nfe_budget) {
    SamplerEnv env{std::move(target), std::move(expert), std::move(schedule), strategy,
                   std::move(action_grid), renoise_span, horizon, nfe_budget};
    const int n = env.schedule.max_index();
    if (env.target.dim() != env.expert.dim())
        throw std::invalid_argument("env: target and expert dimension mismatch");
    if (env.horizon < n)
        throw std::invalid_argument("env: horizon must allow a straight descent (T >= N)");
    if (strategy == Strategy::Renoise) {
        if (env.renoise_span < 1) throw std::invalid_argument("env: renoise span must be >= 1");
        if (env.nfe_budget >= 0 && env.nfe_budget < descend_cost(n))
            throw std::invalid_argument("env: nfe budget below straight descent cost");
    } else {
        if (env.action_grid.empty()) throw std::invalid_argument("env: empty action grid");
        if (env.horizon != n)
            throw std::invalid_argument("env: gamma/guidance strategies require T = N");
        for (double v : env.action_grid)
            if (strategy == Strategy::Gamma && v < 0.0)
                throw std::invalid_argument("env: gamma values must be >= 0");
    }
    if (strategy == Strategy::Guidance && env.target.components() < 2)
        throw std::invalid_argument("env: guidance needs a conditional target (K >= 2)");
    return env;
}

int descend_cost(int level_index) {
    // Heun pays 2 per step except the final Euler fallback into sigma = 0
    return level_index <= 0 ? 0 : 2 * level_index - 1;
}

ActionMask structural_mask(const SamplerEnv& env, const State& state) {
    ActionMask mask(env.action_count(), 1);
    if (env.strategy != Strategy::Renoise) return mask;  // full grid at every level
    const int n = env.schedule.max_index();
    const int reachable = std::min(env.renoise_span, n - state.level_index);
    for (int j = reachable + 1; j <= env.renoise_span; ++j) mask[j] = 0;
    return mask;
}

ActionMask available_actions(const SamplerEnv& env, const State& state, int nfe_used) {
    ActionMask mask = structural_mask(env, state);
    if (env.strategy != Strategy::Renoise || env.nfe_budget < 0) return mask;
    for (int j = 1; j <= env.renoise_span; ++j) {
        if (!mask[j]) continue;
        const int target_level = state.level_index + j;
        if (nfe_used + descend_cost(target_level) > env.nfe_budget) mask[j] = 0;
    }
    return mask;
}

TransitionResult transition(const SamplerEnv& env, const State& state, const Action& action,
                            int cond, Rng& rng) {
    if (action.strategy != env.strategy)
        throw std::invalid_argument("transition: action strategy mismatch");
    if (action.index < 0 || action.index >= env.action_count())
        throw std::invalid_argument("transition: action index out of range");
    const NoiseSchedule& sched = env.schedule;
    const bool is_jump = env.strategy == Strategy::Renoise && action.index > 0;

    // absorbing terminal: everything except a renoise jump self-transitions
    if (state.level_index == 0 && !is_jump) {
        State next = state;
        next.step = state.step + 1;
        return {std::move(next), 0};
    }

    DenoiserFn denoiser;
    if (env.strategy == Strategy::Guidance) {
        const double omega = env.action_grid[action.index];
        denoiser = [&env, cond, omega](std::span<const double> x, double s) {
            return guided_denoise(env.target, x, s, cond, omega);
        };
    } else {
        denoiser = [&env](std::span<const double> x, double s) {
            return denoise(env.target, x, s);
        };
    }

    State next;
    next.step = state.step + 1;
    if (is_jump) {
        const int to = state.level_index + action.index;
        if (to > sched.max_index())
            throw std::invalid_argument("transition: jump beyond the noisiest level");
        next.x = renoise(state.x, sched.sigma(state.level_index), sched.sigma(to), rng);
        next.level_index = to;
        return {std::move(next), 0};
    }

    const double sigma_from = sched.sigma(state.level_index);
    const double sigma_to = sched.sigma(state.level_index - 1);
    StepResult step;
    if (env.strategy == Strategy::Gamma) {
        step = edm_stoch_step(denoiser, state.x, sigma_from, sigma_to,
                              env.action_grid[action.index], rng);
    } else {
        step = heun_step(denoiser, state.x, sigma_from, sigma_to);
    }
    next.x = std::move(step.x);
    next.level_index = state.level_index - 1;
    return {std::move(next), step.nfe};
}

}  // namespace samplerl
