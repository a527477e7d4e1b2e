#include "samplerl/occupancy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace samplerl {

LevelWeights estimate_level_weights(const std::vector<Trajectory>& trajectories,
                                    const NoiseSchedule& schedule) {
    if (trajectories.empty())
        throw std::invalid_argument("estimate_level_weights: empty trajectory list");
    const int n = schedule.max_index();
    LevelWeights out;
    out.counts.assign(n + 1, 0);
    for (const Trajectory& traj : trajectories) {
        for (int t = 1; t <= traj.horizon(); ++t) {
            const int level = traj.state_at(t).level_index;
            out.counts[n - level] += 1;  // descending storage
        }
    }
    for (int64_t c : out.counts) out.total += c;
    out.w.resize(n + 1);
    for (int i = 0; i <= n; ++i) out.w[i] = static_cast<double>(out.counts[i]) / out.total;
    return out;
}

LevelWeights expert_level_weights(int n, double alpha) {
    if (n < 1) throw std::invalid_argument("expert_level_weights: n must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("expert_level_weights: alpha must lie in (0, 1)");
    LevelWeights out;
    out.w.assign(n + 1, (1.0 - alpha) / n);
    out.w.back() = alpha;
    return out;
}

double default_terminal_mass(int horizon, int n) {
    return std::min(0.9, static_cast<double>(horizon - n + 1) / horizon + 0.1);
}

double occupancy_ratio(const LevelWeights& w_e, const LevelWeights& w_theta,
                       const Discriminator& disc, const State& state,
                       const NoiseSchedule& schedule, double clamp_min, double clamp_max) {
    const double wt = w_theta.at_index(state.level_index);
    if (!(wt > 0.0)) throw std::invalid_argument("occupancy_ratio: level never visited");
    const double sigma = schedule.sigma(state.level_index);
    const double ratio = w_e.at_index(state.level_index) / wt *
                         conditional_ratio(disc, state.x, sigma, clamp_min, clamp_max);
    return std::clamp(ratio, clamp_min, clamp_max);
}

}  // namespace samplerl
