#ifndef SAMPLERL_POLICY_HPP_
#define SAMPLERL_POLICY_HPP_

#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "samplerl/mdp.hpp"
#include "samplerl/mlp.hpp"
#include "samplerl/rng.hpp"

namespace samplerl {

enum class PolicyFamily { SigmaOnly, StateDependent };
enum class InitHeuristic { SafeAction, Uniform };

PolicyFamily policy_family_from_name(std::string_view name);
const char* policy_family_name(PolicyFamily family);
InitHeuristic heuristic_from_name(std::string_view name);
const char* heuristic_name(InitHeuristic heuristic);

struct PolicySpec {
    PolicyFamily family = PolicyFamily::SigmaOnly;
    int action_count = 0;
    int num_levels = 0;               // N + 1, one logit row / embedding per level
    int state_dim = 0;                // d, used by the state-dependent family
    std::vector<double> level_sigmas; // sigma by level index, for the ln-sigma features
    std::vector<int> hidden = {64, 64};
    int safe_action = 0;              // index favored by the heuristic init
    bool stationary = true;           // false appends a step-index input
    int horizon = 0;                  // normalizes the step input
};

// number of features fed to a state-dependent policy or discriminator
int sigma_embedding_dim();
void sigma_embedding(double sigma, std::span<double> out);  // 8-frequency sin/cos of ln sigma

// Discrete-action policy over sampler states. SigmaOnly keeps one logit row
// per noise level; StateDependent maps (x, embed(ln sigma) [, t/T]) through a
// small dense net. Parameters are exposed flat for SGD, EMA and snapshots.
class Policy {
  public:
    Policy() = default;
    static Policy init(const PolicySpec& spec, InitHeuristic heuristic, Rng& rng);

    const PolicySpec& spec() const { return spec_; }
    int num_params() const;
    std::span<double> params();
    std::span<const double> params() const;
    void set_params(std::span<const double> values);

    // unmasked logits over the full action set
    std::vector<double> action_logits(const State& state) const;

    // softmax(logits / beta) restricted to unmasked actions
    std::vector<double> action_probs(const State& state, const ActionMask& mask,
                                     double beta) const;

    // returns the chosen index and its log-probability under the sampling
    // distribution (training always samples at beta = 1)
    std::pair<int, double> sample_action(const State& state, const ActionMask& mask, double beta,
                                         Rng& rng) const;

    double logprob(const State& state, const ActionMask& mask, int action) const;

    // d log pi(action | state) / d params at beta = 1, flat layout
    std::vector<double> logprob_grad(const State& state, const ActionMask& mask,
                                     int action) const;
    void add_logprob_grad(const State& state, const ActionMask& mask, int action, double coeff,
                          std::span<double> acc) const;

    double entropy(const State& state, const ActionMask& mask, double beta) const;

  private:
    std::vector<double> features_for(const State& state) const;

    PolicySpec spec_;
    std::vector<double> table_;  // [num_levels x action_count] for SigmaOnly
    Mlp net_;                    // StateDependent
};

// logit offset that puts probability p on one action out of `actions`
double heuristic_logit_offset(int actions, double p);

struct EmaParameters {
    std::vector<double> shadow;
    double decay = 0.999;
};

EmaParameters make_ema(const Policy& policy, double decay);
void ema_update(EmaParameters& ema, std::span<const double> params);
Policy with_params(const Policy& like, std::span<const double> params);

}  // namespace samplerl

#endif  // SAMPLERL_POLICY_HPP_
