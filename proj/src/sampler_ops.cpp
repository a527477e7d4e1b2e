#include "samplerl/sampler_ops.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

namespace samplerl {

ScheduleKind schedule_kind_from_name(std::string_view name) {
    if (name == "power") return ScheduleKind::Power;
    if (name == "geometric") return ScheduleKind::Geometric;
    throw std::invalid_argument("unknown schedule kind: " + std::string(name));
}

const char* schedule_kind_name(ScheduleKind kind) {
    return kind == ScheduleKind::Power ? "power" : "geometric";
}

NoiseSchedule build_schedule(ScheduleKind kind, int n, double sigma_min, double sigma_max,
                             double rho) {
    if (n < 1) throw std::invalid_argument("build_schedule: need at least one nonzero level");
    if (!(sigma_min > 0.0) || !(sigma_min < sigma_max))
        throw std::invalid_argument("build_schedule: require 0 < sigma_min < sigma_max");
    if (!(rho > 0.0)) throw std::invalid_argument("build_schedule: rho must be positive");

    std::vector<double> levels(n + 1, 0.0);
    if (n == 1) {
        levels[0] = sigma_max;
    } else if (kind == ScheduleKind::Power) {
        const double a = std::pow(sigma_max, 1.0 / rho);
        const double b = std::pow(sigma_min, 1.0 / rho);
        for (int i = 0; i < n; ++i)
            levels[i] = std::pow(a + (b - a) * i / (n - 1), rho);
        levels[0] = sigma_max;      // force exact endpoints
        levels[n - 1] = sigma_min;
    } else {
        const double la = std::log(sigma_max);
        const double lb = std::log(sigma_min);
        for (int i = 0; i < n; ++i)
            levels[i] = std::exp(la + (lb - la) * i / (n - 1));
        levels[0] = sigma_max;
        levels[n - 1] = sigma_min;
    }
    for (int i = 0; i + 1 < static_cast<int>(levels.size()); ++i)
        if (!(levels[i] > levels[i + 1]))
            throw std::invalid_argument("build_schedule: levels not strictly decreasing");
    return NoiseSchedule{std::move(levels)};
}

bool schedule_covers_target(const NoiseSchedule& schedule, const GaussianMixture& target,
                            double factor) {
    return schedule.sigma_max() >= factor * target.max_component_std();
}

uint64_t schedule_hash(const NoiseSchedule& schedule) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (double v : schedule.levels) {
        uint64_t bits = std::bit_cast<uint64_t>(v);
        for (int i = 0; i < 8; ++i) {
            h ^= (bits >> (8 * i)) & 0xff;
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

StepResult euler_step(const DenoiserFn& denoiser, std::span<const double> x, double sigma_from,
                      double sigma_to) {
    if (sigma_from == sigma_to) return {Vec(x.begin(), x.end()), 0};  // degenerate step
    if (!(sigma_from > sigma_to) || sigma_to < 0.0)
        throw std::invalid_argument("euler_step: require sigma_from > sigma_to >= 0");
    if (sigma_from == 0.0) throw std::invalid_argument("euler_step: slope undefined at sigma 0");

    const Vec d0 = denoiser(x, sigma_from);
    Vec out(x.size());
    const double h = sigma_to - sigma_from;
    for (size_t j = 0; j < x.size(); ++j)
        out[j] = x[j] + h * (x[j] - d0[j]) / sigma_from;
    return {std::move(out), 1};
}

StepResult heun_step(const DenoiserFn& denoiser, std::span<const double> x, double sigma_from,
                     double sigma_to) {
    if (sigma_from == sigma_to) return {Vec(x.begin(), x.end()), 0};
    if (sigma_to == 0.0) return euler_step(denoiser, x, sigma_from, sigma_to);
    if (!(sigma_from > sigma_to) || sigma_to < 0.0)
        throw std::invalid_argument("heun_step: require sigma_from > sigma_to >= 0");
    if (sigma_from == 0.0) throw std::invalid_argument("heun_step: slope undefined at sigma 0");

    const size_t n = x.size();
    const double h = sigma_to - sigma_from;
    const Vec d0 = denoiser(x, sigma_from);
    Vec slope0(n), pred(n);
    for (size_t j = 0; j < n; ++j) {
        slope0[j] = (x[j] - d0[j]) / sigma_from;
        pred[j] = x[j] + h * slope0[j];
    }
    const Vec d1 = denoiser(pred, sigma_to);
    Vec out(n);
    for (size_t j = 0; j < n; ++j) {
        const double slope1 = (pred[j] - d1[j]) / sigma_to;
        out[j] = x[j] + h * 0.5 * (slope0[j] + slope1);
    }
    return {std::move(out), 2};
}

StepResult edm_stoch_step(const DenoiserFn& denoiser, std::span<const double> x,
                          double sigma_from, double sigma_to, double gamma, Rng& rng) {
    if (gamma < 0.0) throw std::invalid_argument("edm_stoch_step: gamma must be >= 0");
    if (gamma == 0.0) return heun_step(denoiser, x, sigma_from, sigma_to);

    const double sigma_hat = sigma_from * (1.0 + gamma);
    const double perturb = std::sqrt(sigma_hat * sigma_hat - sigma_from * sigma_from);
    Vec noised(x.size());
    for (size_t j = 0; j < x.size(); ++j) noised[j] = x[j] + perturb * rng.normal();
    return heun_step(denoiser, noised, sigma_hat, sigma_to);
}

Vec guided_denoise(const GaussianMixture& target, std::span<const double> x, double sigma,
                   int cond, double omega) {
    Vec conditional = denoise(target, x, sigma, cond);
    if (omega == 0.0) return conditional;
    const Vec unconditional = denoise(target, x, sigma);
    for (size_t j = 0; j < conditional.size(); ++j)
        conditional[j] = (1.0 + omega) * conditional[j] - omega * unconditional[j];
    return conditional;
}

Vec renoise(std::span<const double> x, double sigma_i, double sigma_j, Rng& rng) {
    if (!(sigma_j > sigma_i) || sigma_i < 0.0)
        throw std::invalid_argument("renoise: require sigma_j > sigma_i >= 0");
    const double s = std::sqrt(sigma_j * sigma_j - sigma_i * sigma_i);
    Vec out(x.size());
    for (size_t j = 0; j < x.size(); ++j) out[j] = x[j] + s * rng.normal();
    return out;
}

}  // namespace samplerl
