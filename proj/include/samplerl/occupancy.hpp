#ifndef SAMPLERL_OCCUPANCY_HPP_
#define SAMPLERL_OCCUPANCY_HPP_

#include <cstdint>
#include <vector>

#include "samplerl/mdp.hpp"
#include "samplerl/ratio.hpp"

namespace samplerl {

// Marginal distribution over noise levels under an occupancy measure, stored
// descending [sigma_N, ..., sigma_0] to match the schedule. Weights built
// from trajectories keep their integer visit counts.
struct LevelWeights {
    std::vector<double> w;
    std::vector<int64_t> counts;  // empty for designed weights
    int64_t total = 0;

    int max_index() const { return static_cast<int>(w.size()) - 1; }
    double at_index(int level_index) const { return w[w.size() - 1 - level_index]; }
};

// visit frequency of each level over s_1..s_T across the batch
LevelWeights estimate_level_weights(const std::vector<Trajectory>& trajectories,
                                    const NoiseSchedule& schedule);

// w_E: (1 - alpha)/N on each nonzero level, alpha on the terminal level
LevelWeights expert_level_weights(int n, double alpha);

// straight-descent terminal mass plus a margin rewarding faster termination
double default_terminal_mass(int horizon, int n);

// (w_E / w_theta at the state's level) * exp(discriminator logit), clamped
double occupancy_ratio(const LevelWeights& w_e, const LevelWeights& w_theta,
                       const Discriminator& disc, const State& state,
                       const NoiseSchedule& schedule, double clamp_min = 1e-3,
                       double clamp_max = 1e3);

}  // namespace samplerl

#endif  // SAMPLERL_OCCUPANCY_HPP_
