#include "samplerl/divergence.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace samplerl {

const char* divergence_name(DivergenceKind kind) {
    switch (kind) {
        case DivergenceKind::KL: return "kl";
        case DivergenceKind::RKL: return "rkl";
    }
    return "?";
}

DivergenceKind divergence_from_name(std::string_view name) {
    if (name == "kl") return DivergenceKind::KL;
    if (name == "rkl") return DivergenceKind::RKL;
    throw std::invalid_argument("unknown divergence kind: " + std::string(name));
}

FGenerator kl_generator() {
    FGenerator gen;
    gen.kind = DivergenceKind::KL;
    gen.f = [](double x) { return x * std::log(x); };
    gen.fprime = [](double x) { return std::log(x) + 1.0; };
    gen.h = [](double x) { return -x; };
    gen.f_at_zero = 0.0;  // lim x ln x = 0
    gen.infinite_on_missing_support = true;
    return gen;
}

FGenerator rkl_generator() {
    FGenerator gen;
    gen.kind = DivergenceKind::RKL;
    gen.f = [](double x) { return -std::log(x); };
    gen.fprime = [](double x) { return -1.0 / x; };
    gen.h = [](double x) { return 1.0 - std::log(x); };
    gen.f_at_zero = std::numeric_limits<double>::infinity();
    gen.infinite_on_missing_support = false;  // p_i f(q_i/p_i) -> 0 as p_i -> 0
    return gen;
}

FGenerator make_generator(DivergenceKind kind) {
    return kind == DivergenceKind::KL ? kl_generator() : rkl_generator();
}

double f_value(const FGenerator& gen, double x) {
    if (!(x > 0.0)) throw std::domain_error("f_value: x must be positive");
    return gen.f(x);
}

double h_value(const FGenerator& gen, double x) {
    if (!(x > 0.0)) throw std::domain_error("h_value: x must be positive");
    return gen.h(x);
}

namespace {

void check_probability_vector(std::span<const double> v, const char* which) {
    double sum = 0.0;
    for (double p : v) {
        if (!(p >= 0.0)) throw std::invalid_argument(std::string(which) + ": negative entry");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument(std::string(which) + ": entries must sum to 1");
}

}  // namespace

DivergenceValue divergence_discrete(const FGenerator& gen, std::span<const double> q,
                                    std::span<const double> p) {
    if (q.size() != p.size())
        throw std::invalid_argument("divergence_discrete: length mismatch");
    check_probability_vector(q, "q");
    check_probability_vector(p, "p");

    DivergenceValue out;
    double sum = 0.0;
    for (size_t i = 0; i < p.size(); ++i) {
        if (p[i] == 0.0) {
            if (q[i] > 0.0 && gen.infinite_on_missing_support) out.saturated = true;
            continue;  // p_i f(q_i/p_i) -> 0 otherwise
        }
        if (q[i] == 0.0) {
            if (std::isinf(gen.f_at_zero)) {
                out.saturated = true;
            } else {
                sum += p[i] * gen.f_at_zero;
            }
            continue;
        }
        sum += p[i] * gen.f(q[i] / p[i]);
    }
    out.value = out.saturated ? kDivergenceSaturation : sum;
    return out;
}

}  // namespace samplerl
