#ifndef SAMPLERL_SAMPLER_OPS_HPP_
#define SAMPLERL_SAMPLER_OPS_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "samplerl/gaussian_mixture.hpp"
#include "samplerl/rng.hpp"

namespace samplerl {

// Decreasing noise levels sigma_N > ... > sigma_1 > sigma_0 = 0. Level
// indices follow the subscripts: index 0 is the terminal level, index N the
// noisiest. levels stores them in descending order.
struct NoiseSchedule {
    std::vector<double> levels;  // [sigma_N, ..., sigma_1, 0]

    int max_index() const { return static_cast<int>(levels.size()) - 1; }  // N
    double sigma(int level_index) const { return levels[levels.size() - 1 - level_index]; }
    double sigma_max() const { return levels.front(); }
};

enum class ScheduleKind { Power, Geometric };

ScheduleKind schedule_kind_from_name(std::string_view name);
const char* schedule_kind_name(ScheduleKind kind);

// n nonzero levels from sigma_max down to sigma_min, terminal 0 appended.
// Power uses the rho-warped interpolation with exact endpoints; geometric is
// log-uniform.
NoiseSchedule build_schedule(ScheduleKind kind, int n, double sigma_min, double sigma_max,
                             double rho = 7.0);

// whether N(0, sigma_N^2 I) is a fair stand-in for the noisiest marginal
bool schedule_covers_target(const NoiseSchedule& schedule, const GaussianMixture& target,
                            double factor = 10.0);

uint64_t schedule_hash(const NoiseSchedule& schedule);

using DenoiserFn = std::function<Vec(std::span<const double>, double)>;

struct StepResult {
    Vec x;
    int nfe = 0;  // denoiser evaluations consumed
};

// PF-ODE slope d = (x - D(x, sigma)) / sigma

StepResult euler_step(const DenoiserFn& denoiser, std::span<const double> x, double sigma_from,
                      double sigma_to);

// predictor-corrector; falls back to Euler when sigma_to = 0
StepResult heun_step(const DenoiserFn& denoiser, std::span<const double> x, double sigma_from,
                     double sigma_to);

// perturb to sigma_hat = sigma_from * (1 + gamma), then Heun down to sigma_to;
// gamma = 0 consumes no randomness and matches heun_step bit for bit
StepResult edm_stoch_step(const DenoiserFn& denoiser, std::span<const double> x,
                          double sigma_from, double sigma_to, double gamma, Rng& rng);

// (1 + omega) * D(x, sigma, cond) - omega * D(x, sigma)
Vec guided_denoise(const GaussianMixture& target, std::span<const double> x, double sigma,
                   int cond, double omega);

// jump back up: x + sqrt(sigma_j^2 - sigma_i^2) z, requires sigma_j > sigma_i
Vec renoise(std::span<const double> x, double sigma_i, double sigma_j, Rng& rng);

}  // namespace samplerl

#endif  // SAMPLERL_SAMPLER_OPS_HPP_
