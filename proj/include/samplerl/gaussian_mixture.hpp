#ifndef SAMPLERL_GAUSSIAN_MIXTURE_HPP_
#define SAMPLERL_GAUSSIAN_MIXTURE_HPP_

#include <optional>
#include <span>
#include <vector>

#include "samplerl/rng.hpp"

namespace samplerl {

using Vec = std::vector<double>;

// Gaussian mixture with diagonal covariances. Serves as the analytic expert:
// noising by sigma keeps the family closed under variance inflation, so
// densities, scores, posterior-mean denoisers and class posteriors are all
// available in closed form at every noise level.
struct GaussianMixture {
    std::vector<double> weights;        // K, sums to 1
    std::vector<Vec> means;             // K x d
    std::vector<Vec> variances;         // K x d, per-dimension variances

    int components() const { return static_cast<int>(weights.size()); }
    int dim() const { return means.empty() ? 0 : static_cast<int>(means[0].size()); }
    double max_component_std() const;
};

GaussianMixture make_mixture(std::vector<double> weights, std::vector<Vec> means,
                             std::vector<Vec> variances);

// K equally weighted components on a circle of the given radius (2D)
GaussianMixture ring_mixture(int k, double radius, double variance);

// log of the sigma-inflated mixture density at x; with cond set, log of the
// single inflated component density
double log_density(const GaussianMixture& gm, std::span<const double> x, double sigma,
                   std::optional<int> cond = std::nullopt);

// grad_x log_density, posterior-weighted closed form
Vec score(const GaussianMixture& gm, std::span<const double> x, double sigma,
          std::optional<int> cond = std::nullopt);

// posterior mean of the clean sample given noisy x at level sigma
Vec denoise(const GaussianMixture& gm, std::span<const double> x, double sigma,
            std::optional<int> cond = std::nullopt);

// i.i.d. draws x0 + sigma * z with x0 from the mixture
std::vector<Vec> sample_expert(const GaussianMixture& gm, double sigma, int n, Rng& rng);

// component posterior given x observed at noise level sigma
Vec class_posterior(const GaussianMixture& gm, std::span<const double> x, double sigma);

}  // namespace samplerl

#endif  // SAMPLERL_GAUSSIAN_MIXTURE_HPP_
