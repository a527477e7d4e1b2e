#ifndef SAMPLERL_DIVERGENCE_HPP_
#define SAMPLERL_DIVERGENCE_HPP_

#include <functional>
#include <span>
#include <string>
#include <string_view>

namespace samplerl {

enum class DivergenceKind { KL, RKL };

const char* divergence_name(DivergenceKind kind);
DivergenceKind divergence_from_name(std::string_view name);  // "kl" | "rkl"

// Generator of an f-divergence D_f(Q || P) = E_P[f(dQ/dP)], f convex with
// f(1) = 0. h(x) = f(x) - x f'(x) is the learning-signal transform. f_at_zero
// is the right limit f(0+); infinite limits saturate divergence_discrete.
struct FGenerator {
    DivergenceKind kind;
    std::function<double(double)> f;
    std::function<double(double)> fprime;
    std::function<double(double)> h;
    double f_at_zero;
    bool infinite_on_missing_support;  // q > 0 where p = 0
};

FGenerator kl_generator();
FGenerator rkl_generator();
FGenerator make_generator(DivergenceKind kind);

double f_value(const FGenerator& gen, double x);   // x > 0
double h_value(const FGenerator& gen, double x);   // x > 0

// stand-in for the +inf terms that arise on support violations
inline constexpr double kDivergenceSaturation = 1e30;

struct DivergenceValue {
    double value = 0.0;
    bool saturated = false;
    operator double() const { return value; }
};

// sum_i p_i f(q_i / p_i); q and p are probability vectors of equal length
DivergenceValue divergence_discrete(const FGenerator& gen, std::span<const double> q,
                                    std::span<const double> p);

}  // namespace samplerl

#endif  // SAMPLERL_DIVERGENCE_HPP_
