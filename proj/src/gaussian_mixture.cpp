#include "samplerl/gaussian_mixture.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace samplerl {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

void check_cond(const GaussianMixture& gm, std::optional<int> cond) {
    if (cond && (*cond < 0 || *cond >= gm.components()))
        throw std::out_of_range("conditioning component out of range");
}

// per-component log density under variance inflated by sigma^2
double component_log_density(const GaussianMixture& gm, int k, std::span<const double> x,
                             double sigma) {
    double acc = 0.0;
    const double s2 = sigma * sigma;
    for (int j = 0; j < gm.dim(); ++j) {
        const double v = gm.variances[k][j] + s2;
        const double d = x[j] - gm.means[k][j];
        acc += -0.5 * (kLogTwoPi + std::log(v)) - 0.5 * d * d / v;
    }
    return acc;
}

// log responsibilities (posterior over components) at noise level sigma
std::vector<double> log_responsibilities(const GaussianMixture& gm, std::span<const double> x,
                                         double sigma, double* log_mixture = nullptr) {
    std::vector<double> lw(gm.components());
    for (int k = 0; k < gm.components(); ++k)
        lw[k] = std::log(gm.weights[k]) + component_log_density(gm, k, x, sigma);
    const double m = *std::max_element(lw.begin(), lw.end());
    double z = 0.0;
    for (double v : lw) z += std::exp(v - m);
    const double log_z = m + std::log(z);
    for (double& v : lw) v -= log_z;
    if (log_mixture) *log_mixture = log_z;
    return lw;
}

}  // namespace

double GaussianMixture::max_component_std() const {
    double vmax = 0.0;
    for (const Vec& v : variances)
        for (double vi : v) vmax = std::max(vmax, vi);
    return std::sqrt(vmax);
}

GaussianMixture make_mixture(std::vector<double> weights, std::vector<Vec> means,
                             std::vector<Vec> variances) {
    if (weights.empty()) throw std::invalid_argument("mixture: no components");
    if (means.size() != weights.size() || variances.size() != weights.size())
        throw std::invalid_argument("mixture: component count mismatch");
    const size_t d = means[0].size();
    if (d == 0) throw std::invalid_argument("mixture: zero-dimensional means");
    double sum = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw std::invalid_argument("mixture: negative weight");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("mixture: weights must sum to 1");
    for (size_t k = 0; k < weights.size(); ++k) {
        if (means[k].size() != d || variances[k].size() != d)
            throw std::invalid_argument("mixture: inconsistent dimensions");
        for (double v : variances[k])
            if (!(v > 0.0)) throw std::invalid_argument("mixture: variances must be positive");
    }
    return GaussianMixture{std::move(weights), std::move(means), std::move(variances)};
}

GaussianMixture ring_mixture(int k, double radius, double variance) {
    if (k < 1) throw std::invalid_argument("ring_mixture: k must be >= 1");
    std::vector<double> w(k, 1.0 / k);
    std::vector<Vec> means(k), vars(k);
    constexpr double kTwoPi = 6.283185307179586476925286766559;
    for (int i = 0; i < k; ++i) {
        const double a = kTwoPi * i / k;
        means[i] = {radius * std::cos(a), radius * std::sin(a)};
        vars[i] = {variance, variance};
    }
    return make_mixture(std::move(w), std::move(means), std::move(vars));
}

double log_density(const GaussianMixture& gm, std::span<const double> x, double sigma,
                   std::optional<int> cond) {
    check_cond(gm, cond);
    if (cond) return component_log_density(gm, *cond, x, sigma);
    double log_mix = 0.0;
    (void)log_responsibilities(gm, x, sigma, &log_mix);
    return log_mix;
}

Vec score(const GaussianMixture& gm, std::span<const double> x, double sigma,
          std::optional<int> cond) {
    check_cond(gm, cond);
    const int d = gm.dim();
    const double s2 = sigma * sigma;
    Vec out(d, 0.0);
    if (cond) {
        const int k = *cond;
        for (int j = 0; j < d; ++j)
            out[j] = (gm.means[k][j] - x[j]) / (gm.variances[k][j] + s2);
        return out;
    }
    const std::vector<double> lr = log_responsibilities(gm, x, sigma);
    for (int k = 0; k < gm.components(); ++k) {
        const double r = std::exp(lr[k]);
        for (int j = 0; j < d; ++j)
            out[j] += r * (gm.means[k][j] - x[j]) / (gm.variances[k][j] + s2);
    }
    return out;
}

Vec denoise(const GaussianMixture& gm, std::span<const double> x, double sigma,
            std::optional<int> cond) {
    check_cond(gm, cond);
    const int d = gm.dim();
    const double s2 = sigma * sigma;
    Vec out(d, 0.0);
    // posterior mean per component: (v x + sigma^2 m) / (v + sigma^2);
    // agrees with the Tweedie route x + sigma^2 * score (tested as an invariant)
    if (cond) {
        const int k = *cond;
        for (int j = 0; j < d; ++j) {
            const double v = gm.variances[k][j];
            out[j] = (v * x[j] + s2 * gm.means[k][j]) / (v + s2);
        }
        return out;
    }
    const std::vector<double> lr = log_responsibilities(gm, x, sigma);
    for (int k = 0; k < gm.components(); ++k) {
        const double r = std::exp(lr[k]);
        for (int j = 0; j < d; ++j) {
            const double v = gm.variances[k][j];
            out[j] += r * (v * x[j] + s2 * gm.means[k][j]) / (v + s2);
        }
    }
    return out;
}

std::vector<Vec> sample_expert(const GaussianMixture& gm, double sigma, int n, Rng& rng) {
    if (n < 1) throw std::invalid_argument("sample_expert: n must be >= 1");
    const int d = gm.dim();
    std::vector<Vec> out(n);
    for (int i = 0; i < n; ++i) {
        const int k = rng.categorical(gm.weights);
        Vec x(d);
        for (int j = 0; j < d; ++j)
            x[j] = gm.means[k][j] + std::sqrt(gm.variances[k][j]) * rng.normal() +
                   sigma * rng.normal();
        out[i] = std::move(x);
    }
    return out;
}

Vec class_posterior(const GaussianMixture& gm, std::span<const double> x, double sigma) {
    const std::vector<double> lr = log_responsibilities(gm, x, sigma);
    Vec out(gm.components());
    for (int k = 0; k < gm.components(); ++k) out[k] = std::exp(lr[k]);
    return out;
}

}  // namespace samplerl
