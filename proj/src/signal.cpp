#include "samplerl/signal.hpp"

#include <cmath>

namespace samplerl {

std::vector<double> suffix_sums(std::span<const double> values) {
    std::vector<double> out(values.size(), 0.0);
    double acc = 0.0;
    for (size_t i = values.size(); i-- > 0;) {
        acc += values[i];
        if (!std::isfinite(acc)) throw std::domain_error("suffix_sums: non-finite signal");
        out[i] = acc;
    }
    return out;
}

}  // namespace samplerl
