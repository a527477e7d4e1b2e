#include "samplerl/ratio.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "samplerl/policy.hpp"  // sigma_embedding

namespace samplerl {

namespace {

double sigmoid(double z) {
    return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

double bce(double z, double y) {
    // -y ln s(z) - (1-y) ln(1-s(z)), written against log1p for stability
    const double soft = std::log1p(std::exp(-std::abs(z))) + std::max(z, 0.0);
    return soft - y * z;
}

struct Adam {
    std::vector<double> m, v;
    double lr, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    int step = 0;

    Adam(size_t n, double lr_in) : m(n, 0.0), v(n, 0.0), lr(lr_in) {}

    void update(std::span<double> params, std::span<const double> grad) {
        ++step;
        const double c1 = 1.0 - std::pow(beta1, step);
        const double c2 = 1.0 - std::pow(beta2, step);
        for (size_t i = 0; i < params.size(); ++i) {
            m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
            params[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
        }
    }
};

}  // namespace

Discriminator Discriminator::init(int state_dim, const std::vector<int>& hidden, Rng& rng) {
    if (state_dim < 1) throw std::invalid_argument("discriminator: state_dim must be >= 1");
    Discriminator d;
    d.state_dim_ = state_dim;
    std::vector<int> sizes;
    sizes.push_back(state_dim + sigma_embedding_dim());
    for (int w : hidden) sizes.push_back(w);
    sizes.push_back(1);
    d.net_ = Mlp(std::move(sizes));
    d.net_.init_xavier(rng, /*zero_last=*/true);  // logit 0 everywhere at init
    return d;
}

std::vector<double> Discriminator::features(std::span<const double> x, double sigma) const {
    std::vector<double> feat(net_.input_dim());
    std::copy(x.begin(), x.end(), feat.begin());
    sigma_embedding(sigma, std::span<double>(feat).subspan(state_dim_, sigma_embedding_dim()));
    return feat;
}

double Discriminator::logit(std::span<const double> x, double sigma) const {
    return net_.forward(features(x, sigma))[0];
}

DiscriminatorStats train_discriminator(Discriminator& disc,
                                       const std::vector<std::vector<Vec>>& expert_by_level,
                                       const std::vector<std::vector<Vec>>& policy_by_level,
                                       const std::vector<double>& level_sigmas,
                                       const DiscriminatorOptions& opts, Rng& rng) {
    const int levels = static_cast<int>(level_sigmas.size());
    if (levels == 0) throw std::invalid_argument("train_discriminator: no levels");
    if (static_cast<int>(expert_by_level.size()) != levels ||
        static_cast<int>(policy_by_level.size()) != levels)
        throw std::invalid_argument("train_discriminator: level set count mismatch");
    for (int l = 0; l < levels; ++l)
        if (expert_by_level[l].empty() || policy_by_level[l].empty())
            throw std::invalid_argument("train_discriminator: empty sample set at a level");

    // deterministic holdout: trailing 10% of each pool when a curve is requested
    auto train_size = [&](const std::vector<Vec>& pool) {
        if (opts.holdout_every <= 0) return static_cast<int>(pool.size());
        return std::max(1, static_cast<int>(pool.size()) - static_cast<int>(pool.size()) / 10);
    };

    Adam adam(disc.net().params().size(), opts.lr);
    std::vector<double> grad(disc.net().params().size());
    DiscriminatorStats stats;
    Mlp::Tape tape;

    auto holdout_bce = [&]() {
        double total = 0.0;
        int count = 0;
        for (int l = 0; l < levels; ++l) {
            for (int cls = 0; cls < 2; ++cls) {
                const std::vector<Vec>& pool = cls ? expert_by_level[l] : policy_by_level[l];
                for (int i = train_size(pool); i < static_cast<int>(pool.size()); ++i) {
                    total += bce(disc.logit(pool[i], level_sigmas[l]), cls ? 1.0 : 0.0);
                    ++count;
                }
            }
        }
        return count ? total / count : 0.0;
    };

    for (int iter = 0; iter < opts.iters; ++iter) {
        std::fill(grad.begin(), grad.end(), 0.0);
        for (int b = 0; b < opts.batch; ++b) {
            const int l = rng.uniform_int(levels);
            const bool expert = rng.uniform() < 0.5;
            const std::vector<Vec>& pool = expert ? expert_by_level[l] : policy_by_level[l];
            const Vec& x = pool[rng.uniform_int(train_size(pool))];
            double y = expert ? 1.0 : 0.0;
            if (level_sigmas[l] >= opts.smoothing_sigma_min && opts.label_smoothing > 0.0)
                y = expert ? 1.0 - opts.label_smoothing : opts.label_smoothing;
            const std::vector<double> feat = disc.features(x, level_sigmas[l]);
            const double z = disc.net().forward(feat, tape)[0];
            const double dz = (sigmoid(z) - y) / opts.batch;
            disc.net().backward(tape, std::span<const double>(&dz, 1), grad);
        }
        adam.update(disc.net().params(), grad);
        if (opts.holdout_every > 0 && (iter + 1) % opts.holdout_every == 0)
            stats.holdout_bce.push_back(holdout_bce());
    }
    return stats;
}

double conditional_ratio(const Discriminator& disc, std::span<const double> x, double sigma,
                         double clamp_min, double clamp_max) {
    return std::clamp(std::exp(disc.logit(x, sigma)), clamp_min, clamp_max);
}

double exact_ratio_oracle(const GaussianMixture& p, const GaussianMixture& q,
                          std::span<const double> x, double sigma) {
    return std::exp(log_density(p, x, sigma) - log_density(q, x, sigma));
}

double discriminator_bce(const Discriminator& disc, const std::vector<Vec>& expert,
                         const std::vector<Vec>& policy, double sigma) {
    double total = 0.0;
    for (const Vec& x : expert) total += bce(disc.logit(x, sigma), 1.0);
    for (const Vec& x : policy) total += bce(disc.logit(x, sigma), 0.0);
    return total / (expert.size() + policy.size());
}

}  // namespace samplerl
