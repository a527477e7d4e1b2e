#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "samplerl/learner.hpp"
#include "samplerl/metrics.hpp"

using namespace samplerl;

namespace {

Trajectory trajectory_from_ratios(const std::vector<double>& per_state_ratio) {
    // builds a fake trajectory whose state_at(t) carries the desired ratio in x[0]
    Trajectory traj;
    traj.states.push_back(State{{0.0}, static_cast<int>(per_state_ratio.size()), 0});
    for (size_t t = 0; t < per_state_ratio.size(); ++t) {
        traj.states.push_back(State{{per_state_ratio[t]},
                                    static_cast<int>(per_state_ratio.size() - t - 1),
                                    static_cast<int>(t + 1)});
        traj.actions.push_back(Action{Strategy::Gamma, 0});
        traj.logprobs.push_back(0.0);
        traj.masks.push_back(ActionMask{1});
        traj.nfe.push_back(1);
    }
    return traj;
}

double ratio_from_state(const State& s) { return s.x[0]; }

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    return dot / std::sqrt(na * nb);
}

ExperimentConfig tiny_config() {
    ExperimentConfig cfg;
    cfg.target.weights = {0.5, 0.5};
    cfg.target.means = {{-1.5}, {1.5}};
    cfg.target.variances = {{0.25}, {0.25}};
    cfg.schedule.kind = ScheduleKind::Geometric;
    cfg.schedule.n = 4;
    cfg.schedule.sigma_min = 0.1;
    cfg.schedule.sigma_max = 6.0;
    cfg.mdp.strategy = Strategy::Gamma;
    cfg.mdp.horizon = 4;
    cfg.mdp.action_grid = {0.0, 0.3, 0.8};
    cfg.divergence = DivergenceKind::KL;
    cfg.seed = 5;
    cfg.learner.n_epoch = 4;
    cfg.learner.regen_every = 2;
    cfg.learner.n_traj = 32;
    cfg.learner.lr = 0.02;
    cfg.learner.minibatch = 64;
    cfg.discriminator.widths = {16, 16};
    cfg.discriminator.dre_init_iters = 10;
    cfg.discriminator.train_iters = 20;
    cfg.discriminator.expert_per_level = 128;
    return cfg;
}

}  // namespace

TEST_CASE("learning signals are raw suffix sums of h") {
    const FGenerator kl = kl_generator();
    const FGenerator rkl = rkl_generator();

    const Trajectory t1 = trajectory_from_ratios({2.0, 0.5});
    const std::vector<double> a_kl = learning_signals(t1, ratio_from_state, kl);
    REQUIRE(a_kl.size() == 2);
    CHECK(a_kl[0] == doctest::Approx(-2.5));
    CHECK(a_kl[1] == doctest::Approx(-0.5));

    const Trajectory ones = trajectory_from_ratios({1.0, 1.0, 1.0});
    const std::vector<double> a_one = learning_signals(ones, ratio_from_state, kl);
    CHECK(a_one[0] == doctest::Approx(-3.0));
    CHECK(a_one[1] == doctest::Approx(-2.0));
    CHECK(a_one[2] == doctest::Approx(-1.0));

    const std::vector<double> a_rkl = learning_signals(ones, ratio_from_state, rkl);
    for (int t = 0; t < 3; ++t) CHECK(a_rkl[t] == doctest::Approx(3.0 - t));

    const Trajectory bad = trajectory_from_ratios({2.0, -1.0});
    CHECK_THROWS_AS(learning_signals(bad, ratio_from_state, kl), std::domain_error);
}

TEST_CASE("baseline recentering") {
    const std::vector<std::vector<double>> signals{{-2.5, -0.5}, {-1.5, -0.5}};
    const std::vector<std::vector<double>> centered = baseline_recenter(signals);
    CHECK(centered[0][0] == doctest::Approx(-0.25));
    CHECK(centered[1][0] == doctest::Approx(0.25));
    CHECK(centered[0][1] == doctest::Approx(0.0));

    // per-timestep column sums vanish
    for (int t = 0; t < 2; ++t)
        CHECK(std::abs(centered[0][t] + centered[1][t]) < 1e-12);

    // identical trajectories recenter to zero
    const std::vector<std::vector<double>> same{{1.0, 2.0}, {1.0, 2.0}};
    for (const std::vector<double>& row : baseline_recenter(same))
        for (double v : row) CHECK(v == 0.0);

    CHECK_THROWS_AS(baseline_recenter({{1.0}}), std::invalid_argument);
}

TEST_CASE("signal normalization divides by the batch std") {
    std::vector<std::vector<double>> signals{{-1.0, 2.0}, {1.0, -2.0}};
    double sq = 0.0;
    for (const std::vector<double>& row : signals)
        for (double v : row) sq += v * v;
    const double stddev = std::sqrt(sq / 4.0);
    std::vector<std::vector<double>> normalized = signals;
    normalize_signals_inplace(normalized);
    for (int i = 0; i < 2; ++i)
        for (int t = 0; t < 2; ++t)
            CHECK(normalized[i][t] == doctest::Approx(signals[i][t] / stddev));

    std::vector<std::vector<double>> zeros{{0.0}, {0.0}};
    normalize_signals_inplace(zeros);  // no-op, no division by zero
    CHECK(zeros[0][0] == 0.0);
}

TEST_CASE("pg gradient: zero signals and the score identity at scale") {
    const ExperimentConfig cfg = tiny_config();
    const SamplerEnv env = cfg.build_env();
    Rng init(1);
    const Policy policy = Policy::init(cfg.build_policy_spec(), InitHeuristic::Uniform, init);

    const std::vector<Trajectory> trajs = rollout_batch(env, policy, 1.0, 2000, Rng(2), 2);
    const std::vector<std::vector<double>> zeros(trajs.size(),
                                                 std::vector<double>(trajs[0].horizon(), 0.0));
    for (double g : pg_gradient(policy, trajs, zeros)) CHECK(g == 0.0);

    // constant per-trajectory signals: expectation is zero by the score identity
    std::vector<std::vector<double>> constants(trajs.size(),
                                               std::vector<double>(trajs[0].horizon(), 1.0));
    const std::vector<double> grad = pg_gradient(policy, trajs, constants);
    // each coordinate should be within a few standard errors of zero; the
    // per-step gradient entries are bounded by 1, so se <= 1/sqrt(n)
    const double se = 1.0 / std::sqrt(static_cast<double>(trajs.size()));
    for (double g : grad) CHECK(std::abs(g) < 3.0 * se);
}

TEST_CASE("ppo gradient: clip arithmetic") {
    // single-level, two-action policy with known logits
    PolicySpec spec;
    spec.family = PolicyFamily::SigmaOnly;
    spec.action_count = 2;
    spec.num_levels = 1;
    Rng rng(3);
    Policy policy = Policy::init(spec, InitHeuristic::Uniform, rng);

    const State s{{0.0}, 0, 0};
    const ActionMask mask{1, 1};
    const double logp = policy.logprob(s, mask, 0);

    BufferEntry entry;
    entry.state = s;
    entry.mask = mask;
    entry.action = 0;

    // r = 1.3, signal = -1: clipped branch active, no gradient flows
    entry.logprob_behavior = logp - std::log(1.3);
    entry.signal = -1.0;
    double surrogate = 0.0;
    std::vector<double> grad =
        ppo_gradient(policy, std::vector<BufferEntry>{entry}, 0.2, &surrogate);
    CHECK(surrogate == doctest::Approx(-1.2));
    for (double g : grad) CHECK(g == 0.0);

    // r = 1.3, signal = +1: unclipped branch active, gradient flows
    entry.signal = 1.0;
    grad = ppo_gradient(policy, std::vector<BufferEntry>{entry}, 0.2, &surrogate);
    CHECK(surrogate == doctest::Approx(1.3));
    double norm = 0.0;
    for (double g : grad) norm += std::abs(g);
    CHECK(norm > 0.0);

    // at theta = theta0 the ratio is 1 and the gradient is signal * grad logpi
    entry.logprob_behavior = logp;
    entry.signal = 2.0;
    grad = ppo_gradient(policy, std::vector<BufferEntry>{entry}, 0.2, &surrogate);
    CHECK(surrogate == doctest::Approx(2.0));
    const std::vector<double> expected = policy.logprob_grad(s, mask, 0);
    for (size_t i = 0; i < grad.size(); ++i)
        CHECK(grad[i] == doctest::Approx(2.0 * expected[i]));

    // epsilon = 0 at theta = theta0 still yields the unclipped gradient
    grad = ppo_gradient(policy, std::vector<BufferEntry>{entry}, 0.0, &surrogate);
    for (size_t i = 0; i < grad.size(); ++i)
        CHECK(grad[i] == doctest::Approx(2.0 * expected[i]));

    CHECK_THROWS_AS(ppo_gradient(policy, {}, 0.2), std::invalid_argument);
}

TEST_CASE("ppo at the snapshot equals the vanilla policy gradient") {
    ExperimentConfig cfg = tiny_config();
    // skew the expert so the exact ratios carry a real learning signal
    cfg.expert = cfg.target;
    cfg.expert->weights = {0.8, 0.2};
    const SamplerEnv env = cfg.build_env();
    Rng init(4);
    const Policy policy = Policy::init(cfg.build_policy_spec(), InitHeuristic::SafeAction, init);
    const std::vector<Trajectory> trajs = rollout_batch(env, policy, 1.0, 64, Rng(5), 1);

    // exact conditional ratios stand in for the discriminator here
    const FGenerator gen = kl_generator();
    auto ratio_fn = [&](const State& s) {
        const double sigma = env.schedule.sigma(s.level_index);
        return std::clamp(
            std::exp(log_density(env.expert, s.x, sigma) - log_density(env.target, s.x, sigma)),
            1e-3, 1e3);
    };
    std::vector<std::vector<double>> signals(trajs.size());
    for (size_t i = 0; i < trajs.size(); ++i) signals[i] = learning_signals(trajs[i], ratio_fn, gen);
    const std::vector<std::vector<double>> centered = baseline_recenter(signals);

    std::vector<BufferEntry> buffer;
    for (size_t i = 0; i < trajs.size(); ++i)
        for (int t = 1; t <= trajs[i].horizon(); ++t)
            buffer.push_back(BufferEntry{trajs[i].state_before(t), trajs[i].masks[t - 1],
                                         trajs[i].actions[t - 1].index, trajs[i].logprobs[t - 1],
                                         centered[i][t - 1]});

    const std::vector<double> ppo = ppo_gradient(policy, buffer, 0.2);
    const std::vector<double> pg = pg_gradient(policy, trajs, centered);
    CHECK(cosine(ppo, pg) > 0.999999);
}

TEST_CASE("is gradient reduces to pg at the behavior policy") {
    const ExperimentConfig cfg = tiny_config();
    const SamplerEnv env = cfg.build_env();
    Rng init(6);
    const Policy policy = Policy::init(cfg.build_policy_spec(), InitHeuristic::Uniform, init);
    const std::vector<Trajectory> trajs = rollout_batch(env, policy, 1.0, 50, Rng(7), 1);
    std::vector<std::vector<double>> signals(trajs.size());
    Rng sig(8);
    for (std::vector<double>& row : signals) {
        row.resize(trajs[0].horizon());
        for (double& v : row) v = sig.uniform(-1.0, 1.0);
    }
    const std::vector<double> pg = pg_gradient(policy, trajs, signals);
    const std::vector<double> is = is_gradient(policy, trajs, signals);
    REQUIRE(pg.size() == is.size());
    for (size_t i = 0; i < pg.size(); ++i) CHECK(is[i] == doctest::Approx(pg[i]).epsilon(1e-10));
}

TEST_CASE("training runs, descends and stays deterministic") {
    const ExperimentConfig cfg = tiny_config();
    const TrainResult a = train(cfg, nullptr, 1);
    const TrainResult b = train(cfg, nullptr, 2);  // thread count must not matter
    REQUIRE(a.history.size() == cfg.learner.n_epoch);
    REQUIRE(b.history.size() == a.history.size());
    for (size_t i = 0; i < a.history.size(); ++i) {
        CHECK(metrics_row_csv(a.history[i]) == metrics_row_csv(b.history[i]));
        CHECK(a.history[i].wall_time_s == 0.0);
        CHECK(std::isfinite(a.history[i].divergence_estimate));
    }
    for (size_t i = 0; i < a.policy.params().size(); ++i)
        CHECK(a.policy.params()[i] == b.policy.params()[i]);

    // EMA shadows the policy from its heuristic start
    CHECK(a.ema_policy.params().size() == a.policy.params().size());
}

TEST_CASE("already-optimal expert keeps the policy near its initialization") {
    ExperimentConfig cfg = tiny_config();
    // fine schedule: the heuristic gamma = 0 sampler already matches the expert
    cfg.schedule.n = 12;
    cfg.mdp.horizon = 12;
    cfg.learner.n_epoch = 6;
    cfg.learner.regen_every = 3;
    cfg.learner.lr = 0.05;
    const Rng spec_rng(1);
    Rng init(9);
    const Policy initial = Policy::init(cfg.build_policy_spec(), cfg.policy.heuristic, init);
    const TrainResult result = train(cfg, nullptr, 2);
    double drift = 0.0;
    for (size_t i = 0; i < initial.params().size(); ++i)
        drift += std::pow(result.policy.params()[i] - initial.params()[i], 2);
    drift = std::sqrt(drift);
    CHECK(drift < 1.0);  // small next to the ~3.0 heuristic logit offset
    CHECK(std::abs(result.history.back().divergence_estimate) < 0.5);
}
