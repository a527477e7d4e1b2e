#include "samplerl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace samplerl {

namespace {

double euclidean(const Vec& a, const Vec& b) {
    double acc = 0.0;
    for (size_t j = 0; j < a.size(); ++j) {
        const double d = a[j] - b[j];
        acc += d * d;
    }
    return std::sqrt(acc);
}

double mean_pairwise(const std::vector<Vec>& x, const std::vector<Vec>& y) {
    double acc = 0.0;
    for (const Vec& a : x)
        for (const Vec& b : y) acc += euclidean(a, b);
    return acc / (static_cast<double>(x.size()) * y.size());
}

}  // namespace

double energy_distance(const std::vector<Vec>& x, const std::vector<Vec>& y) {
    if (x.size() < 2 || y.size() < 2)
        throw std::invalid_argument("energy_distance: need at least 2 samples per side");
    // the cross term is accumulated in both orders so the result is exactly
    // symmetric in (x, y) despite floating-point non-associativity
    const double cross = mean_pairwise(x, y) + mean_pairwise(y, x);
    return cross - (mean_pairwise(x, x) + mean_pairwise(y, y));
}

double histogram_kl(std::span<const double> x, std::span<const double> y, int bins, double lo,
                    double hi, double smoothing) {
    if (bins < 1 || !(hi > lo)) throw std::invalid_argument("histogram_kl: bad binning grid");
    if (!(smoothing > 0.0)) throw std::invalid_argument("histogram_kl: smoothing must be > 0");
    auto histogram = [&](std::span<const double> v) {
        std::vector<double> h(bins, 0.0);
        for (double s : v) {
            int b = static_cast<int>((s - lo) / (hi - lo) * bins);
            b = std::clamp(b, 0, bins - 1);  // clip outliers into the edge bins
            h[b] += 1.0;
        }
        // smoothing is applied to the normalized frequencies so the floor is
        // delta regardless of sample count
        for (double& c : h) c = c / static_cast<double>(v.size()) + smoothing;
        double z = 0.0;
        for (double c : h) z += c;
        for (double& c : h) c /= z;
        return h;
    };
    const std::vector<double> p = histogram(x);
    const std::vector<double> q = histogram(y);
    double kl = 0.0;
    for (int b = 0; b < bins; ++b) kl += p[b] * std::log(p[b] / q[b]);
    return kl;
}

Vec class_histogram(const GaussianMixture& target, const std::vector<Vec>& samples) {
    Vec acc(target.components(), 0.0);
    for (const Vec& x : samples) {
        const Vec post = class_posterior(target, x, 0.0);
        for (int k = 0; k < target.components(); ++k) acc[k] += post[k];
    }
    if (!samples.empty())
        for (double& v : acc) v /= static_cast<double>(samples.size());
    return acc;
}

double total_variation(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) throw std::invalid_argument("total_variation: length mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < p.size(); ++i) acc += std::abs(p[i] - q[i]);
    return 0.5 * acc;
}

double mean_nfe(const std::vector<Trajectory>& trajectories) {
    if (trajectories.empty()) throw std::invalid_argument("mean_nfe: empty trajectory list");
    double acc = 0.0;
    for (const Trajectory& t : trajectories) acc += t.total_nfe;
    return acc / trajectories.size();
}

MetricReport evaluate_samples(const GaussianMixture& expert, const std::vector<Vec>& generated,
                              const std::vector<Vec>& reference, double nfe) {
    MetricReport report;
    report.n_samples = static_cast<int>(generated.size());
    report.mean_nfe = nfe;
    report.energy_distance = energy_distance(generated, reference);

    // shared per-dimension grid spanning both sample sets
    const int d = expert.dim();
    double kl = 0.0;
    for (int j = 0; j < d; ++j) {
        std::vector<double> gj(generated.size()), rj(reference.size());
        for (size_t i = 0; i < generated.size(); ++i) gj[i] = generated[i][j];
        for (size_t i = 0; i < reference.size(); ++i) rj[i] = reference[i][j];
        double lo = *std::min_element(rj.begin(), rj.end());
        double hi = *std::max_element(rj.begin(), rj.end());
        const double pad = 0.05 * (hi - lo);
        kl += histogram_kl(gj, rj, 50, lo - pad, hi + pad);
    }
    report.histogram_kl = kl / d;

    const Vec generated_classes = class_histogram(expert, generated);
    report.class_tv = total_variation(generated_classes, expert.weights);
    return report;
}

}  // namespace samplerl
