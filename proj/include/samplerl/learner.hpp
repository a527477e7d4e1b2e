#ifndef SAMPLERL_LEARNER_HPP_
#define SAMPLERL_LEARNER_HPP_

#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "samplerl/config.hpp"
#include "samplerl/divergence.hpp"
#include "samplerl/mdp.hpp"
#include "samplerl/occupancy.hpp"
#include "samplerl/policy.hpp"
#include "samplerl/ratio.hpp"

namespace samplerl {

// one (s_{t-1}, a_t) decision with its recentered learning signal
struct BufferEntry {
    State state;
    ActionMask mask;
    int action = 0;
    double logprob_behavior = 0.0;  // under the policy that generated the batch
    double signal = 0.0;            // recentered (and optionally normalized)
};

// A_t = suffix sums of h_f(ratio(s_t')) over the trajectory's occupancy states
std::vector<double> learning_signals(const Trajectory& traj,
                                     const std::function<double(const State&)>& ratio_fn,
                                     const FGenerator& gen);

// (A_t - mean_t A) / T per timestep column; needs at least two trajectories
std::vector<std::vector<double>> baseline_recenter(
    const std::vector<std::vector<double>>& signals);

// divide by the batch standard deviation (optional reward normalization)
void normalize_signals_inplace(std::vector<std::vector<double>>& signals);

// on-policy REINFORCE-style gradient of the f-divergence objective
std::vector<double> pg_gradient(const Policy& policy, const std::vector<Trajectory>& trajectories,
                                const std::vector<std::vector<double>>& signals);

// off-policy variant: per-trajectory likelihood ratio against the recorded
// behavior logprobs (high variance; disabled by default in training)
std::vector<double> is_gradient(const Policy& policy, const std::vector<Trajectory>& trajectories,
                                const std::vector<std::vector<double>>& signals);

// gradient of the clipped surrogate mean over the given entries; returns the
// surrogate value through `surrogate` when non-null
std::vector<double> ppo_gradient(const Policy& policy, std::span<const BufferEntry> buffer,
                                 double epsilon, double* surrogate = nullptr);

struct MetricsRow {
    int epoch = 0;
    double divergence_estimate = 0.0;
    double surrogate_loss = 0.0;
    double mean_nfe = 0.0;
    double w_theta_terminal = 0.0;
    double policy_entropy = 0.0;
    double energy_distance = 0.0;
    double wall_time_s = 0.0;
};

extern const char* const kMetricsHeader;
std::string metrics_row_csv(const MetricsRow& row);

using MetricsSink = std::function<void(const MetricsRow&)>;

struct TrainResult {
    Policy policy;
    Policy ema_policy;
    Discriminator discriminator;
    std::vector<MetricsRow> history;
};

// full training loop: rollouts every K epochs, discriminator refresh, signal
// computation with ratios frozen at the snapshot policy, minibatch PPO
// updates in between, EMA after every update
TrainResult train(const ExperimentConfig& config, const MetricsSink& sink = nullptr,
                  int threads = 1, std::ostream* log = nullptr);

}  // namespace samplerl

#endif  // SAMPLERL_LEARNER_HPP_
