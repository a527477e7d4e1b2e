#ifndef SAMPLERL_SIGNAL_HPP_
#define SAMPLERL_SIGNAL_HPP_

#include <span>
#include <stdexcept>
#include <vector>

namespace samplerl {

// A_t = sum_{t' >= t} values[t'] (raw suffix sums; the 1/T normalization is
// applied once at recentering)
std::vector<double> suffix_sums(std::span<const double> values);

// Shared trajectory-level policy-gradient accumulation:
//   grad = sum_i w_i * (1/T) * sum_t signal[i][t] * grad_logpi(i, t)
// with w_i = 1/n when weights is empty. The Monte Carlo estimator and the
// exact enumeration oracle both run through here, so the tabular gradient
// check exercises the production code path.
//
// AddStepGrad: void(int traj, int t /*1-based*/, double coeff, std::span<double> acc)
template <typename AddStepGrad>
std::vector<double> accumulate_policy_gradient(int n_params, int n_traj, int horizon,
                                               const std::vector<std::vector<double>>& signals,
                                               std::span<const double> weights,
                                               AddStepGrad add_step_grad) {
    if (n_traj < 1) throw std::invalid_argument("policy gradient: empty batch");
    if (static_cast<int>(signals.size()) != n_traj)
        throw std::invalid_argument("policy gradient: signal batch size mismatch");
    if (!weights.empty() && static_cast<int>(weights.size()) != n_traj)
        throw std::invalid_argument("policy gradient: weight count mismatch");
    std::vector<double> grad(n_params, 0.0);
    for (int i = 0; i < n_traj; ++i) {
        if (static_cast<int>(signals[i].size()) != horizon)
            throw std::invalid_argument("policy gradient: signal horizon mismatch");
        const double w = weights.empty() ? 1.0 / n_traj : weights[i];
        for (int t = 1; t <= horizon; ++t)
            add_step_grad(i, t, w * signals[i][t - 1] / horizon, std::span<double>(grad));
    }
    return grad;
}

}  // namespace samplerl

#endif  // SAMPLERL_SIGNAL_HPP_
