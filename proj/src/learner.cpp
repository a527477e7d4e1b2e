#include "samplerl/learner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "samplerl/metrics.hpp"
#include "samplerl/signal.hpp"

namespace samplerl {

std::vector<double> learning_signals(const Trajectory& traj,
                                     const std::function<double(const State&)>& ratio_fn,
                                     const FGenerator& gen) {
    std::vector<double> h_values(traj.horizon());
    for (int t = 1; t <= traj.horizon(); ++t) {
        const double ratio = ratio_fn(traj.state_at(t));
        if (!std::isfinite(ratio) || !(ratio > 0.0))
            throw std::domain_error("learning_signals: ratio must be finite and positive");
        h_values[t - 1] = h_value(gen, ratio);
    }
    return suffix_sums(h_values);
}

std::vector<std::vector<double>> baseline_recenter(
    const std::vector<std::vector<double>>& signals) {
    const int n = static_cast<int>(signals.size());
    if (n < 2) throw std::invalid_argument("baseline_recenter: need at least two trajectories");
    const int horizon = static_cast<int>(signals[0].size());
    std::vector<double> mean(horizon, 0.0);
    for (const std::vector<double>& row : signals) {
        if (static_cast<int>(row.size()) != horizon)
            throw std::invalid_argument("baseline_recenter: ragged signal matrix");
        for (int t = 0; t < horizon; ++t) mean[t] += row[t];
    }
    for (double& m : mean) m /= n;
    std::vector<std::vector<double>> out(n, std::vector<double>(horizon));
    for (int i = 0; i < n; ++i)
        for (int t = 0; t < horizon; ++t) out[i][t] = (signals[i][t] - mean[t]) / horizon;
    return out;
}

void normalize_signals_inplace(std::vector<std::vector<double>>& signals) {
    double sq = 0.0;
    long long count = 0;
    for (const std::vector<double>& row : signals)
        for (double v : row) {
            sq += v * v;
            ++count;
        }
    if (count == 0) return;
    const double stddev = std::sqrt(sq / count);  // recentered signals have mean 0
    if (stddev == 0.0) return;
    for (std::vector<double>& row : signals)
        for (double& v : row) v /= stddev;
}

namespace {

std::vector<double> gradient_over_trajectories(const Policy& policy,
                                               const std::vector<Trajectory>& trajectories,
                                               const std::vector<std::vector<double>>& signals,
                                               std::span<const double> weights) {
    if (trajectories.empty()) throw std::invalid_argument("gradient: empty batch");
    const int horizon = trajectories[0].horizon();
    auto add_step_grad = [&](int i, int t, double coeff, std::span<double> acc) {
        const Trajectory& traj = trajectories[i];
        policy.add_logprob_grad(traj.state_before(t), traj.masks[t - 1],
                                traj.actions[t - 1].index, coeff, acc);
    };
    return accumulate_policy_gradient(policy.num_params(),
                                      static_cast<int>(trajectories.size()), horizon, signals,
                                      weights, add_step_grad);
}

}  // namespace

std::vector<double> pg_gradient(const Policy& policy, const std::vector<Trajectory>& trajectories,
                                const std::vector<std::vector<double>>& signals) {
    return gradient_over_trajectories(policy, trajectories, signals, {});
}

std::vector<double> is_gradient(const Policy& policy, const std::vector<Trajectory>& trajectories,
                                const std::vector<std::vector<double>>& signals) {
    const int n = static_cast<int>(trajectories.size());
    std::vector<double> weights(n);
    for (int i = 0; i < n; ++i) {
        const Trajectory& traj = trajectories[i];
        double log_ratio = 0.0;
        for (int t = 1; t <= traj.horizon(); ++t)
            log_ratio += policy.logprob(traj.state_before(t), traj.masks[t - 1],
                                        traj.actions[t - 1].index) -
                         traj.logprobs[t - 1];
        weights[i] = std::exp(log_ratio) / n;
    }
    return gradient_over_trajectories(policy, trajectories, signals, weights);
}

std::vector<double> ppo_gradient(const Policy& policy, std::span<const BufferEntry> buffer,
                                 double epsilon, double* surrogate) {
    if (buffer.empty()) throw std::invalid_argument("ppo_gradient: empty buffer");
    if (!(epsilon >= 0.0 && epsilon < 1.0))
        throw std::invalid_argument("ppo_gradient: epsilon must lie in [0, 1)");
    std::vector<double> grad(policy.num_params(), 0.0);
    double value = 0.0;
    const double scale = 1.0 / static_cast<double>(buffer.size());
    for (const BufferEntry& entry : buffer) {
        const double logp = policy.logprob(entry.state, entry.mask, entry.action);
        const double ratio = std::exp(logp - entry.logprob_behavior);
        const double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
        const double unclipped_term = ratio * entry.signal;
        const double clipped_term = clipped * entry.signal;
        // minimization: the pessimistic (max) branch is the objective
        value += scale * std::max(unclipped_term, clipped_term);
        const bool unclipped_active = unclipped_term >= clipped_term;
        if (unclipped_active)
            policy.add_logprob_grad(entry.state, entry.mask, entry.action,
                                    scale * entry.signal * ratio, grad);
        // clipped-active terms are locally constant in theta
    }
    if (surrogate) *surrogate = value;
    return grad;
}

const char* const kMetricsHeader =
    "epoch,divergence_estimate,surrogate_loss,mean_nfe,w_theta_terminal,policy_entropy,"
    "energy_distance,wall_time_s";

std::string metrics_row_csv(const MetricsRow& row) {
    std::string out = std::to_string(row.epoch);
    for (double v : {row.divergence_estimate, row.surrogate_loss, row.mean_nfe,
                     row.w_theta_terminal, row.policy_entropy, row.energy_distance,
                     row.wall_time_s}) {
        out += ',';
        out += format_double(v);
    }
    return out;
}

namespace {

void check_finite(std::span<const double> params, int epoch) {
    for (double v : params)
        if (!std::isfinite(v))
            throw std::runtime_error("training diverged: non-finite policy parameter at epoch " +
                                     std::to_string(epoch));
}

std::vector<Vec> terminal_samples(const std::vector<Trajectory>& trajectories, size_t cap) {
    std::vector<Vec> out;
    for (const Trajectory& traj : trajectories) {
        if (traj.states.back().level_index != 0) continue;
        out.push_back(traj.states.back().x);
        if (out.size() >= cap) break;
    }
    if (out.empty())
        for (const Trajectory& traj : trajectories) {
            out.push_back(traj.states.back().x);
            if (out.size() >= cap) break;
        }
    return out;
}

}  // namespace

TrainResult train(const ExperimentConfig& cfg, const MetricsSink& sink, int threads,
                  std::ostream* log) {
    const auto wall_start = std::chrono::steady_clock::now();
    const SamplerEnv env = cfg.build_env();
    const NoiseSchedule& sched = env.schedule;
    const int n = sched.max_index();
    const FGenerator gen = make_generator(cfg.divergence);
    const Rng root(cfg.seed);

    if (!schedule_covers_target(sched, env.target, cfg.schedule.coverage_factor) && log)
        *log << "warning: sigma_max below " << cfg.schedule.coverage_factor
             << "x the largest component std\n";

    Rng init_rng = root.derive("policy_init");
    Policy policy = Policy::init(cfg.build_policy_spec(), cfg.policy.heuristic, init_rng);
    EmaParameters ema = make_ema(policy, cfg.learner.ema_decay);
    Rng disc_rng = root.derive("disc_init");
    Discriminator disc = Discriminator::init(env.dim(), cfg.discriminator.widths, disc_rng);

    // expert marginals cached once per level
    std::vector<std::vector<Vec>> expert_by_level(n + 1);
    for (int level = 0; level <= n; ++level) {
        Rng stream = root.derive("expert", level);
        expert_by_level[level] =
            sample_expert(env.expert, sched.sigma(level), cfg.discriminator.expert_per_level,
                          stream);
    }

    const double alpha = cfg.effective_terminal_mass();
    const LevelWeights w_e = expert_level_weights(n, alpha);
    const double smoothing_sigma_min = cfg.discriminator.smoothing_sigma_frac * sched.sigma_max();
    if (log)
        *log << "training: strategy=" << strategy_name(env.strategy)
             << " divergence=" << divergence_name(cfg.divergence) << " w_e_terminal=" << alpha
             << "\n";

    DiscriminatorOptions disc_opts;
    disc_opts.batch = cfg.discriminator.batch;
    disc_opts.lr = cfg.discriminator.lr;
    disc_opts.label_smoothing = cfg.discriminator.label_smoothing;
    disc_opts.smoothing_sigma_min = smoothing_sigma_min;

    // bins trajectory states by level and trains the discriminator on the
    // levels the policy actually visits
    auto refresh_discriminator = [&](const std::vector<Trajectory>& trajs, int iters,
                                     Rng rng) {
        std::vector<std::vector<Vec>> policy_by_level(n + 1);
        for (const Trajectory& traj : trajs)
            for (int t = 1; t <= traj.horizon(); ++t)
                policy_by_level[traj.state_at(t).level_index].push_back(traj.state_at(t).x);
        std::vector<std::vector<Vec>> expert_sets, policy_sets;
        std::vector<double> sigmas;
        for (int level = 0; level <= n; ++level) {
            if (policy_by_level[level].empty()) continue;
            expert_sets.push_back(expert_by_level[level]);
            policy_sets.push_back(std::move(policy_by_level[level]));
            sigmas.push_back(sched.sigma(level));
        }
        DiscriminatorOptions opts = disc_opts;
        opts.iters = iters;
        train_discriminator(disc, expert_sets, policy_sets, sigmas, opts, rng);
    };

    // discriminator pre-initialization against the initial policy
    if (cfg.discriminator.dre_init_iters > 0) {
        const std::vector<Trajectory> warmup = rollout_batch(
            env, policy, 1.0, cfg.learner.n_traj, root.derive("rollout", 0), threads);
        refresh_discriminator(warmup, cfg.discriminator.dre_init_iters, root.derive("dre_init"));
    }

    std::vector<BufferEntry> buffer;
    std::vector<size_t> order;
    double divergence_estimate = 0.0, batch_nfe = 0.0, w_terminal = 0.0, energy = 0.0;
    TrainResult result{policy, policy, disc, {}};

    for (int epoch = 1; epoch <= cfg.learner.n_epoch; ++epoch) {
        if ((epoch - 1) % cfg.learner.regen_every == 0) {
            const std::vector<Trajectory> trajs = rollout_batch(
                env, policy, 1.0, cfg.learner.n_traj, root.derive("rollout", epoch), threads);
            const LevelWeights w_theta = estimate_level_weights(trajs, sched);
            refresh_discriminator(trajs, cfg.discriminator.train_iters,
                                  root.derive("disc", epoch));

            auto ratio_fn = [&](const State& s) {
                return occupancy_ratio(w_e, w_theta, disc, s, sched,
                                       cfg.discriminator.ratio_clamp_min,
                                       cfg.discriminator.ratio_clamp_max);
            };
            std::vector<std::vector<double>> signals(trajs.size());
            double f_sum = 0.0;
            long long f_count = 0;
            for (size_t i = 0; i < trajs.size(); ++i) {
                signals[i] = learning_signals(trajs[i], ratio_fn, gen);
                for (int t = 1; t <= trajs[i].horizon(); ++t) {
                    f_sum += f_value(gen, ratio_fn(trajs[i].state_at(t)));
                    ++f_count;
                }
            }
            divergence_estimate = f_sum / static_cast<double>(f_count);
            std::vector<std::vector<double>> recentered = baseline_recenter(signals);
            if (cfg.learner.normalize_signals) normalize_signals_inplace(recentered);

            buffer.clear();
            for (size_t i = 0; i < trajs.size(); ++i)
                for (int t = 1; t <= trajs[i].horizon(); ++t)
                    buffer.push_back(BufferEntry{trajs[i].state_before(t),
                                                 trajs[i].masks[t - 1],
                                                 trajs[i].actions[t - 1].index,
                                                 trajs[i].logprobs[t - 1],
                                                 recentered[i][t - 1]});
            order.resize(buffer.size());
            std::iota(order.begin(), order.end(), 0);

            batch_nfe = mean_nfe(trajs);
            w_terminal = w_theta.at_index(0);
            const std::vector<Vec> generated = terminal_samples(trajs, 1024);
            std::vector<Vec> reference(
                expert_by_level[0].begin(),
                expert_by_level[0].begin() +
                    std::min(expert_by_level[0].size(), static_cast<size_t>(1024)));
            energy = energy_distance(generated, reference);
        }

        // one shuffled pass of minibatch PPO updates against the snapshot
        Rng shuffle_rng = root.derive("shuffle", epoch);
        for (size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.uniform_int(static_cast<int>(i))]);
        double surrogate_sum = 0.0;
        int update_count = 0;
        std::vector<BufferEntry> minibatch;
        for (size_t start = 0; start < order.size(); start += cfg.learner.minibatch) {
            const size_t stop = std::min(order.size(), start + cfg.learner.minibatch);
            minibatch.clear();
            for (size_t i = start; i < stop; ++i) minibatch.push_back(buffer[order[i]]);
            double surrogate = 0.0;
            const std::vector<double> grad =
                ppo_gradient(policy, minibatch, cfg.learner.ppo_epsilon, &surrogate);
            std::span<double> params = policy.params();
            for (size_t i = 0; i < params.size(); ++i)
                params[i] -= cfg.learner.lr * grad[i];
            ema_update(ema, policy.params());
            surrogate_sum += surrogate;
            ++update_count;
        }
        check_finite(policy.params(), epoch);

        double entropy_sum = 0.0;
        const size_t probe = std::min(buffer.size(), static_cast<size_t>(512));
        for (size_t i = 0; i < probe; ++i)
            entropy_sum += policy.entropy(buffer[i].state, buffer[i].mask, 1.0);

        MetricsRow row;
        row.epoch = epoch;
        row.divergence_estimate = divergence_estimate;
        row.surrogate_loss = update_count ? surrogate_sum / update_count : 0.0;
        row.mean_nfe = batch_nfe;
        row.w_theta_terminal = w_terminal;
        row.policy_entropy = probe ? entropy_sum / static_cast<double>(probe) : 0.0;
        row.energy_distance = energy;
        row.wall_time_s = 0.0;  // kept deterministic; real timing goes to the log
        result.history.push_back(row);
        if (sink) sink(row);
    }

    result.policy = policy;
    result.ema_policy = with_params(policy, ema.shadow);
    result.discriminator = disc;
    if (log) {
        const std::chrono::duration<double> elapsed =
            std::chrono::steady_clock::now() - wall_start;
        *log << "training finished in " << elapsed.count() << " s\n";
    }
    return result;
}

}  // namespace samplerl
