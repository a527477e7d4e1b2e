#ifndef SAMPLERL_RATIO_HPP_
#define SAMPLERL_RATIO_HPP_

#include <span>
#include <vector>

#include "samplerl/gaussian_mixture.hpp"
#include "samplerl/mlp.hpp"
#include "samplerl/rng.hpp"

namespace samplerl {

// Noise-conditional binary classifier between expert and policy states. At
// the BCE optimum its logit is the conditional log density ratio
// ln p_E(x|sigma) / ln p_theta(x|sigma).
class Discriminator {
  public:
    Discriminator() = default;
    static Discriminator init(int state_dim, const std::vector<int>& hidden, Rng& rng);

    double logit(std::span<const double> x, double sigma) const;

    Mlp& net() { return net_; }
    const Mlp& net() const { return net_; }
    int state_dim() const { return state_dim_; }

    std::vector<double> features(std::span<const double> x, double sigma) const;

  private:
    int state_dim_ = 0;
    Mlp net_;
};

struct DiscriminatorOptions {
    int iters = 200;
    int batch = 128;
    double lr = 1e-3;
    double label_smoothing = 0.05;      // applied at high noise levels
    double smoothing_sigma_min = 0.0;   // levels with sigma >= this get smoothed labels
    int holdout_every = 0;              // 0 disables the held-out curve
};

struct DiscriminatorStats {
    std::vector<double> holdout_bce;  // one entry per checkpoint when enabled
};

// Minimizes BCE with the level drawn uniformly per example. expert/policy
// sets are parallel to level_sigmas; each level must be non-empty.
DiscriminatorStats train_discriminator(Discriminator& disc,
                                       const std::vector<std::vector<Vec>>& expert_by_level,
                                       const std::vector<std::vector<Vec>>& policy_by_level,
                                       const std::vector<double>& level_sigmas,
                                       const DiscriminatorOptions& opts, Rng& rng);

// exp(logit) clamped to [clamp_min, clamp_max]
double conditional_ratio(const Discriminator& disc, std::span<const double> x, double sigma,
                         double clamp_min = 1e-3, double clamp_max = 1e3);

// analytic density ratio p(x|sigma) / q(x|sigma) between two known mixtures
double exact_ratio_oracle(const GaussianMixture& p, const GaussianMixture& q,
                          std::span<const double> x, double sigma);

// average BCE of the discriminator on labeled sets (diagnostics/tests)
double discriminator_bce(const Discriminator& disc, const std::vector<Vec>& expert,
                         const std::vector<Vec>& policy, double sigma);

}  // namespace samplerl

#endif  // SAMPLERL_RATIO_HPP_
