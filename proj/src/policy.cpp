#include "samplerl/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace samplerl {

namespace {

constexpr int kFrequencies = 8;
constexpr double kSigmaFloor = 1e-6;  // keeps ln sigma finite at the terminal level

// masked softmax of logits / beta; masked entries get probability 0
std::vector<double> masked_softmax(std::span<const double> logits, const ActionMask& mask,
                                   double beta) {
    if (mask.size() != logits.size()) throw std::invalid_argument("mask size mismatch");
    double best = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < logits.size(); ++i)
        if (mask[i]) best = std::max(best, logits[i] / beta);
    if (!std::isfinite(best)) throw std::invalid_argument("all actions masked");
    std::vector<double> probs(logits.size(), 0.0);
    double z = 0.0;
    for (size_t i = 0; i < logits.size(); ++i) {
        if (!mask[i]) continue;
        probs[i] = std::exp(logits[i] / beta - best);
        z += probs[i];
    }
    for (double& p : probs) p /= z;
    return probs;
}

}  // namespace

PolicyFamily policy_family_from_name(std::string_view name) {
    if (name == "sigma_only") return PolicyFamily::SigmaOnly;
    if (name == "state_dependent") return PolicyFamily::StateDependent;
    throw std::invalid_argument("unknown policy family: " + std::string(name));
}

const char* policy_family_name(PolicyFamily family) {
    return family == PolicyFamily::SigmaOnly ? "sigma_only" : "state_dependent";
}

InitHeuristic heuristic_from_name(std::string_view name) {
    if (name == "safe") return InitHeuristic::SafeAction;
    if (name == "uniform") return InitHeuristic::Uniform;
    throw std::invalid_argument("unknown init heuristic: " + std::string(name));
}

const char* heuristic_name(InitHeuristic heuristic) {
    return heuristic == InitHeuristic::SafeAction ? "safe" : "uniform";
}

int sigma_embedding_dim() { return 2 * kFrequencies; }

void sigma_embedding(double sigma, std::span<double> out) {
    const double u = std::log(std::max(sigma, kSigmaFloor));
    double freq = 1.0;
    for (int j = 0; j < kFrequencies; ++j) {
        out[2 * j] = std::sin(freq * u);
        out[2 * j + 1] = std::cos(freq * u);
        freq *= 2.0;
    }
}

double heuristic_logit_offset(int actions, double p) {
    if (actions < 2) return 0.0;
    return std::log(p * (actions - 1) / (1.0 - p));
}

Policy Policy::init(const PolicySpec& spec, InitHeuristic heuristic, Rng& rng) {
    if (spec.action_count < 1) throw std::invalid_argument("policy: action_count must be >= 1");
    if (spec.safe_action < 0 || spec.safe_action >= spec.action_count)
        throw std::invalid_argument("policy: safe action out of range");
    Policy p;
    p.spec_ = spec;
    const double offset = heuristic == InitHeuristic::Uniform
                              ? 0.0
                              : heuristic_logit_offset(spec.action_count, 0.9);
    if (spec.family == PolicyFamily::SigmaOnly) {
        if (spec.num_levels < 1) throw std::invalid_argument("policy: num_levels must be >= 1");
        p.table_.assign(static_cast<size_t>(spec.num_levels) * spec.action_count, 0.0);
        for (int l = 0; l < spec.num_levels; ++l)
            p.table_[static_cast<size_t>(l) * spec.action_count + spec.safe_action] = offset;
    } else {
        if (spec.state_dim < 1) throw std::invalid_argument("policy: state_dim must be >= 1");
        if (static_cast<int>(spec.level_sigmas.size()) != spec.num_levels)
            throw std::invalid_argument("policy: level_sigmas must cover every level");
        std::vector<int> sizes;
        sizes.push_back(spec.state_dim + sigma_embedding_dim() + (spec.stationary ? 0 : 1));
        for (int w : spec.hidden) sizes.push_back(w);
        sizes.push_back(spec.action_count);
        p.net_ = Mlp(std::move(sizes));
        p.net_.init_xavier(rng, /*zero_last=*/true);
        p.net_.output_bias()[spec.safe_action] = offset;
    }
    return p;
}

int Policy::num_params() const {
    return spec_.family == PolicyFamily::SigmaOnly ? static_cast<int>(table_.size())
                                                   : net_.num_params();
}

std::span<double> Policy::params() {
    return spec_.family == PolicyFamily::SigmaOnly ? std::span<double>(table_) : net_.params();
}

std::span<const double> Policy::params() const {
    return spec_.family == PolicyFamily::SigmaOnly ? std::span<const double>(table_)
                                                   : net_.params();
}

void Policy::set_params(std::span<const double> values) {
    std::span<double> dst = params();
    if (values.size() != dst.size()) throw std::invalid_argument("policy: parameter size mismatch");
    std::copy(values.begin(), values.end(), dst.begin());
}

std::vector<double> Policy::features_for(const State& state) const {
    if (state.level_index < 0 || state.level_index >= static_cast<int>(spec_.level_sigmas.size()))
        throw std::out_of_range("policy: level index out of range");
    std::vector<double> feat(net_.input_dim());
    std::copy(state.x.begin(), state.x.end(), feat.begin());
    sigma_embedding(spec_.level_sigmas[state.level_index],
                    std::span<double>(feat).subspan(spec_.state_dim, sigma_embedding_dim()));
    if (!spec_.stationary)
        feat.back() = spec_.horizon > 0 ? static_cast<double>(state.step) / spec_.horizon : 0.0;
    return feat;
}

std::vector<double> Policy::action_logits(const State& state) const {
    if (spec_.family == PolicyFamily::SigmaOnly) {
        if (state.level_index < 0 || state.level_index >= spec_.num_levels)
            throw std::out_of_range("policy: level index out of range");
        const double* row = table_.data() + static_cast<size_t>(state.level_index) * spec_.action_count;
        return std::vector<double>(row, row + spec_.action_count);
    }
    return net_.forward(features_for(state));
}

std::vector<double> Policy::action_probs(const State& state, const ActionMask& mask,
                                         double beta) const {
    if (!(beta > 0.0)) throw std::invalid_argument("policy: beta must be positive");
    return masked_softmax(action_logits(state), mask, beta);
}

std::pair<int, double> Policy::sample_action(const State& state, const ActionMask& mask,
                                             double beta, Rng& rng) const {
    const std::vector<double> probs = action_probs(state, mask, beta);
    const int a = rng.categorical(probs);
    return {a, std::log(probs[a])};
}

double Policy::logprob(const State& state, const ActionMask& mask, int action) const {
    const std::vector<double> probs = action_probs(state, mask, 1.0);
    if (action < 0 || action >= static_cast<int>(probs.size()) || !mask[action])
        throw std::invalid_argument("policy: action unavailable");
    return std::log(probs[action]);
}

std::vector<double> Policy::logprob_grad(const State& state, const ActionMask& mask,
                                         int action) const {
    std::vector<double> grad(num_params(), 0.0);
    add_logprob_grad(state, mask, action, 1.0, grad);
    return grad;
}

void Policy::add_logprob_grad(const State& state, const ActionMask& mask, int action,
                              double coeff, std::span<double> acc) const {
    if (acc.size() != static_cast<size_t>(num_params()))
        throw std::invalid_argument("policy: gradient buffer size mismatch");
    if (spec_.family == PolicyFamily::SigmaOnly) {
        const std::vector<double> probs = action_probs(state, mask, 1.0);
        if (!mask[action]) throw std::invalid_argument("policy: action unavailable");
        double* row = acc.data() + static_cast<size_t>(state.level_index) * spec_.action_count;
        for (int a = 0; a < spec_.action_count; ++a) {
            if (!mask[a]) continue;  // masked logits do not affect log pi
            row[a] += coeff * ((a == action ? 1.0 : 0.0) - probs[a]);
        }
        return;
    }
    Mlp::Tape tape;
    const std::vector<double> logits = net_.forward(features_for(state), tape);
    const std::vector<double> probs = masked_softmax(logits, mask, 1.0);
    if (!mask[action]) throw std::invalid_argument("policy: action unavailable");
    std::vector<double> dlogits(logits.size(), 0.0);
    for (size_t a = 0; a < logits.size(); ++a) {
        if (!mask[a]) continue;
        dlogits[a] = coeff * ((static_cast<int>(a) == action ? 1.0 : 0.0) - probs[a]);
    }
    net_.backward(tape, dlogits, acc);
}

double Policy::entropy(const State& state, const ActionMask& mask, double beta) const {
    const std::vector<double> probs = action_probs(state, mask, beta);
    double h = 0.0;
    for (size_t i = 0; i < probs.size(); ++i)
        if (mask[i] && probs[i] > 0.0) h -= probs[i] * std::log(probs[i]);
    return h;
}

EmaParameters make_ema(const Policy& policy, double decay) {
    if (!(decay >= 0.0 && decay <= 1.0))
        throw std::invalid_argument("ema: decay must be in [0, 1]");
    std::span<const double> p = policy.params();
    return EmaParameters{std::vector<double>(p.begin(), p.end()), decay};
}

void ema_update(EmaParameters& ema, std::span<const double> params) {
    if (ema.shadow.size() != params.size())
        throw std::invalid_argument("ema: parameter shape mismatch");
    for (size_t i = 0; i < params.size(); ++i)
        ema.shadow[i] = ema.decay * ema.shadow[i] + (1.0 - ema.decay) * params[i];
}

Policy with_params(const Policy& like, std::span<const double> params) {
    Policy copy = like;
    copy.set_params(params);
    return copy;
}

}  // namespace samplerl
